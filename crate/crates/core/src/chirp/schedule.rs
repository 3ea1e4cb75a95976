use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ChirpSpec;
use crate::cavity::{Branch, Cavity, Detuning};
use crate::error::{Error, Result};
use crate::registry::Registry;

/// Maps time in the chirp to the optical-spring frequency the detuning should realize.
pub trait TrackingStrategy: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;
    fn target_hz(&self, chirp: &ChirpSpec, t: f64) -> f64;
}

/// Spring frequency follows the chirp.
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepTracking;

impl TrackingStrategy for SweepTracking {
    fn name(&self) -> &str {
        "sweep"
    }

    fn target_hz(&self, chirp: &ChirpSpec, t: f64) -> f64 {
        chirp.instantaneous_freq(t)
    }
}

/// Spring held at one frequency.
#[derive(Debug, Clone, Copy)]
pub struct StaticTracking {
    pub target_hz: f64,
}

impl Default for StaticTracking {
    fn default() -> Self {
        Self { target_hz: 70e3 }
    }
}

impl TrackingStrategy for StaticTracking {
    fn name(&self) -> &str {
        "static"
    }

    fn target_hz(&self, _chirp: &ChirpSpec, _t: f64) -> f64 {
        self.target_hz
    }
}

/// The built-in strategies, `sweep` and `static` at `static_target_hz`.
pub fn strategies(static_target_hz: f64) -> Registry<dyn TrackingStrategy> {
    let mut reg: Registry<dyn TrackingStrategy> = Registry::new("tracking strategy");
    reg.register("sweep", Arc::new(SweepTracking));
    reg.register(
        "static",
        Arc::new(StaticTracking {
            target_hz: static_target_hz,
        }),
    );
    reg
}

/// Detuning sampled at the control rate, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningSchedule {
    pub mode: String,
    pub control_rate_hz: f64,
    pub samples: Vec<Detuning>,
    pub static_target_hz: Option<f64>,
}

impl DetuningSchedule {
    pub fn duration_s(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.control_rate_hz
    }

    pub fn at(&self, t: f64) -> Detuning {
        let pos = (t * self.control_rate_hz).clamp(0.0, (self.samples.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.samples.len() - 2);
        let frac = pos - i as f64;
        let (a, b) = (self.samples[i].value(), self.samples[i + 1].value());
        Detuning(a + (b - a) * frac)
    }

    /// Hex SHA-256 over the mode, control rate and sample bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.mode.as_bytes());
        h.update(self.control_rate_hz.to_le_bytes());
        for d in &self.samples {
            h.update(d.value().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

pub fn schedule_for_chirp(
    cav: &Cavity,
    chirp: &ChirpSpec,
    strategy: &dyn TrackingStrategy,
    control_rate_hz: f64,
) -> Result<DetuningSchedule> {
    chirp.check()?;
    if !(control_rate_hz.is_finite() && control_rate_hz > 0.0) {
        return Err(Error::invalid("control_rate_hz", "must be > 0"));
    }
    let n = (chirp.duration_s * control_rate_hz).ceil() as usize + 1;
    if n < 2 {
        return Err(Error::invalid("control_rate_hz", "schedule needs at least two points"));
    }
    let mut samples = Vec::with_capacity(n);
    let mut cache: Option<(f64, Detuning)> = None;
    for i in 0..n {
        let t = (i as f64 / control_rate_hz).min(chirp.duration_s);
        let target = strategy.target_hz(chirp, t);
        let d = match cache {
            Some((f, d)) if f == target => d,
            _ => cav.detuning_for_os_frequency(target, Branch::Weak)?,
        };
        cache = Some((target, d));
        samples.push(d);
    }
    let static_target_hz = (strategy.name() == "static").then(|| strategy.target_hz(chirp, 0.0));
    Ok(DetuningSchedule {
        mode: strategy.name().to_string(),
        control_rate_hz,
        samples,
        static_target_hz,
    })
}
