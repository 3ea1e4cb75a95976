//! Time-domain synthesis of the chirp-tracking experiment.
//!
//! A linear chirp force drives the movable mirror while the detuning follows a
//! schedule: either tracking the chirp with the optical spring (`sweep`) or
//! holding it at a fixed frequency (`static`). The output is the mirror
//! displacement plus white sensing noise, sampled like an ADC record.

mod schedule;
mod sim;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use schedule::{
    schedule_for_chirp, strategies, DetuningSchedule, StaticTracking, SweepTracking,
    TrackingStrategy,
};
pub use sim::{
    default_white_noise_asd, run_experiments, run_four_experiments, simulate, Experiments,
    IntegratorConfig, RunKind, RunSeeds, SimParams, SimRun,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpSpec {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    /// Peak force of the injected signal, N.
    pub amplitude: f64,
}

impl Default for ChirpSpec {
    fn default() -> Self {
        Self {
            f_start_hz: 40e3,
            f_end_hz: 100e3,
            duration_s: 10.0,
            amplitude: 5e-14,
        }
    }
}

impl ChirpSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.f_start_hz.is_finite() && self.f_start_hz > 0.0) {
            return Err(Error::invalid("f_start_hz", "must be > 0"));
        }
        if !(self.f_end_hz.is_finite() && self.f_end_hz > self.f_start_hz) {
            return Err(Error::invalid("f_end_hz", "must exceed f_start_hz"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::invalid("duration_s", "must be > 0"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid("amplitude", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn rate_hz_per_s(&self) -> f64 {
        (self.f_end_hz - self.f_start_hz) / self.duration_s
    }

    pub fn instantaneous_freq(&self, t: f64) -> f64 {
        self.f_start_hz + self.rate_hz_per_s() * t
    }

    pub fn phase(&self, t: f64) -> f64 {
        2.0 * PI * (self.f_start_hz * t + 0.5 * self.rate_hz_per_s() * t * t)
    }

    /// Time at which the chirp passes `freq_hz`, if it does.
    pub fn crossing_time(&self, freq_hz: f64) -> Option<f64> {
        (self.f_start_hz..=self.f_end_hz)
            .contains(&freq_hz)
            .then(|| (freq_hz - self.f_start_hz) / self.rate_hz_per_s())
    }
}

/// Where a series came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
    pub schedule_digest: Option<String>,
    pub config_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub fs_hz: f64,
    pub samples: Vec<f64>,
    pub provenance: Provenance,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs_hz
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.fs_hz
    }

    /// Little-endian f64 bytes of the samples.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.samples.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(fs_hz: f64, bytes: &[u8], provenance: Provenance) -> Result<Self> {
        if bytes.len() % 8 != 0 {
            return Err(Error::Domain(format!("{} bytes is not a whole number of f64", bytes.len())));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { fs_hz, samples, provenance })
    }
}

/// Exact sample count `fs * duration`, rejecting non-integral products.
pub fn sample_count(fs_hz: f64, duration_s: f64) -> Result<usize> {
    if !(fs_hz.is_finite() && fs_hz > 0.0) {
        return Err(Error::invalid("fs_hz", "must be > 0"));
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::invalid("duration_s", "must be > 0"));
    }
    let n = fs_hz * duration_s;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::invalid(
            "duration_s",
            format!("fs * duration = {n} is not a whole number of samples"),
        ));
    }
    Ok(rounded as usize)
}

/// Unit-amplitude linear chirp sampled at `fs_hz`.
pub fn make_chirp(spec: &ChirpSpec, fs_hz: f64) -> Result<TimeSeries> {
    spec.check()?;
    if !(fs_hz > 2.0 * spec.f_end_hz) {
        return Err(Error::invalid(
            "fs_hz",
            format!("{fs_hz} Hz does not exceed twice the chirp end frequency {} Hz", spec.f_end_hz),
        ));
    }
    let n = sample_count(fs_hz, spec.duration_s)?;
    let samples = (0..n).map(|i| spec.phase(i as f64 / fs_hz).sin()).collect();
    Ok(TimeSeries {
        fs_hz,
        samples,
        provenance: Provenance {
            source: "chirp".into(),
            ..Provenance::default()
        },
    })
}
