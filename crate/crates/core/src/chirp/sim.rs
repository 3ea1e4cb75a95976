use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::{schedule_for_chirp, strategies, DetuningSchedule};
use super::{sample_count, ChirpSpec, Provenance, TimeSeries};
use crate::cavity::{Branch, Cavity, Detuning};
use crate::error::{Error, Result};
use crate::qnoise::{quantum_noise_asd, spring_dynamics, NoiseSource, Regime};

const RP_STREAM: u64 = 0;
const SENSING_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    BackgroundSweep,
    SignalSweep,
    BackgroundStatic,
    SignalStatic,
}

impl RunKind {
    pub const ALL: [RunKind; 4] = [
        RunKind::BackgroundSweep,
        RunKind::SignalSweep,
        RunKind::BackgroundStatic,
        RunKind::SignalStatic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::BackgroundSweep => "background_sweep",
            RunKind::SignalSweep => "signal_sweep",
            RunKind::BackgroundStatic => "background_static",
            RunKind::SignalStatic => "signal_static",
        }
    }

    /// Name of the tracking strategy the run uses.
    pub fn mode(self) -> &'static str {
        match self {
            RunKind::BackgroundSweep | RunKind::SignalSweep => "sweep",
            RunKind::BackgroundStatic | RunKind::SignalStatic => "static",
        }
    }

    pub fn has_signal(self) -> bool {
        matches!(self, RunKind::SignalSweep | RunKind::SignalStatic)
    }
}

impl std::fmt::Display for RunKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Numerical settings of the mirror integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Internal rate as a multiple of the output rate.
    pub oversample: usize,
    pub control_block_s: f64,
    /// Closed-loop quality factor enforced by feedback damping. `None` disables feedback.
    pub q_target: Option<f64>,
    pub rp_noise: bool,
    /// Odd length of the anti-alias decimation filter.
    pub fir_taps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            oversample: 4,
            control_block_s: 1e-3,
            q_target: Some(100.0),
            rp_noise: true,
            fir_taps: 97,
        }
    }
}

impl IntegratorConfig {
    pub fn check(&self) -> Result<()> {
        if self.oversample < 2 {
            return Err(Error::invalid("oversample", "must be >= 2"));
        }
        if !(self.control_block_s.is_finite() && self.control_block_s > 0.0) {
            return Err(Error::invalid("control_block_s", "must be > 0"));
        }
        if let Some(q) = self.q_target {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::invalid("q_target", "must be > 0"));
            }
        }
        if self.fir_taps % 2 == 0 || self.fir_taps < 3 {
            return Err(Error::invalid("fir_taps", "must be odd and >= 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRun {
    pub kind: RunKind,
    pub seed: u64,
    /// Sensing-noise ASD added to the readout, m/sqrt(Hz).
    pub white_noise_asd: f64,
    pub fs_hz: f64,
    pub duration_s: f64,
    pub integrator: IntegratorConfig,
}

/// Settings shared by the four runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub fs_hz: f64,
    pub duration_s: f64,
    pub oversample: usize,
    pub control_block_s: f64,
    /// Sensing-noise ASD; `None` uses [`default_white_noise_asd`].
    pub white_noise_asd: Option<f64>,
    pub q_target: Option<f64>,
    pub rp_noise: bool,
    pub static_target_hz: f64,
    pub fir_taps: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        let integ = IntegratorConfig::default();
        Self {
            fs_hz: 500e3,
            duration_s: 10.0,
            oversample: integ.oversample,
            control_block_s: integ.control_block_s,
            white_noise_asd: None,
            q_target: integ.q_target,
            rp_noise: integ.rp_noise,
            static_target_hz: 70e3,
            fir_taps: integ.fir_taps,
        }
    }
}

impl SimParams {
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            oversample: self.oversample,
            control_block_s: self.control_block_s,
            q_target: self.q_target,
            rp_noise: self.rp_noise,
            fir_taps: self.fir_taps,
        }
    }

    pub fn white_noise(&self, cav: &Cavity) -> Result<f64> {
        match self.white_noise_asd {
            Some(w) if w.is_finite() && w >= 0.0 => Ok(w),
            Some(_) => Err(Error::invalid("white_noise_asd", "must be finite and >= 0")),
            None => default_white_noise_asd(cav, self.static_target_hz),
        }
    }

    pub fn run(&self, kind: RunKind, seed: u64, white_noise_asd: f64) -> SimRun {
        SimRun {
            kind,
            seed,
            white_noise_asd,
            fs_hz: self.fs_hz,
            duration_s: self.duration_s,
            integrator: self.integrator(),
        }
    }
}

/// Ten times the shot-noise displacement ASD of the static configuration at
/// its own spring frequency (20 dB in power).
pub fn default_white_noise_asd(cav: &Cavity, static_target_hz: f64) -> Result<f64> {
    let d = cav.detuning_for_os_frequency(static_target_hz, Branch::Weak)?;
    let spec = quantum_noise_asd(cav, d, &[static_target_hz], Regime::AsMeasured)?;
    let shot = spec
        .component(NoiseSource::Shot)
        .expect("shot component always present")[0];
    Ok(10.0 * shot)
}

/// Noise seeds per tracking mode; signal and background of a mode share theirs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub sweep: u64,
    pub static_mode: u64,
}

impl RunSeeds {
    pub fn from_master(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            sweep: rng.random(),
            static_mode: rng.random(),
        }
    }

    pub fn for_kind(&self, kind: RunKind) -> u64 {
        match kind.mode() {
            "sweep" => self.sweep,
            _ => self.static_mode,
        }
    }
}

/// Symmetric Blackman-windowed sinc low-pass with unit DC gain.
pub(crate) fn lowpass_fir(taps: usize, cutoff_over_fs: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|k| {
            let n = k as f64 - mid;
            let x = 2.0 * cutoff_over_fs * n;
            let sinc = if n == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
            let a = 2.0 * PI * k as f64 / (taps - 1) as f64;
            let w = 0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos();
            sinc * w
        })
        .collect();
    // Mirror so the taps are exactly symmetric; the filter loop relies on it.
    for k in 0..taps / 2 {
        h[taps - 1 - k] = h[k];
    }
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Per-block mirror coefficients.
#[derive(Debug, Clone, Copy)]
struct Block {
    omega_sq: f64,
    damping: f64,
    noise_accel: f64,
}

fn block_params(cav: &Cavity, d: Detuning, integ: &IntegratorConfig, fs_int: f64) -> Result<Block> {
    let sd = spring_dynamics(cav, d)?;
    let natural = cav.mech_damping_rate() + sd.optical_damping;
    let damping = match integ.q_target {
        Some(q) => natural.max(sd.omega / q),
        None => natural,
    };
    if !(damping > 0.0) {
        return Err(Error::Unstable(format!(
            "net damping {damping:.3e} 1/s at delta = {:.4} without feedback",
            d.value()
        )));
    }
    let noise_accel = if integ.rp_noise {
        (sd.force_psd * fs_int / 2.0).sqrt() / cav.mass()
    } else {
        0.0
    };
    Ok(Block {
        omega_sq: sd.stiffness / cav.mass(),
        damping,
        noise_accel,
    })
}

/// Integrates the mirror under the schedule and returns the sampled readout.
pub fn simulate(
    cav: &Cavity,
    schedule: &DetuningSchedule,
    chirp: Option<&ChirpSpec>,
    run: &SimRun,
) -> Result<TimeSeries> {
    let integ = &run.integrator;
    integ.check()?;
    let n_out = sample_count(run.fs_hz, run.duration_s)?;
    if run.kind.has_signal() != chirp.is_some() {
        return Err(Error::invalid(
            "chirp",
            format!("run `{}` {} a signal", run.kind, if run.kind.has_signal() { "needs" } else { "must not carry" }),
        ));
    }
    if schedule.mode != run.kind.mode() {
        return Err(Error::invalid(
            "schedule",
            format!("`{}` schedule given to run `{}`", schedule.mode, run.kind),
        ));
    }
    if schedule.duration_s() + 1e-9 < run.duration_s {
        return Err(Error::invalid("schedule", "schedule shorter than the run"));
    }
    if !(run.white_noise_asd.is_finite() && run.white_noise_asd >= 0.0) {
        return Err(Error::invalid("white_noise_asd", "must be finite and >= 0"));
    }
    if let Some(c) = chirp {
        c.check()?;
        if run.fs_hz <= 2.0 * c.f_end_hz {
            return Err(Error::invalid("fs_hz", "below twice the chirp end frequency"));
        }
    }

    let os = integ.oversample;
    let fs_int = run.fs_hz * os as f64;
    let h = 1.0 / fs_int;
    let steps_per_block = (integ.control_block_s * fs_int).round().max(1.0) as usize;
    let fir = lowpass_fir(integ.fir_taps, 0.35 / os as f64);
    let taps = fir.len();
    let delay = (taps - 1) / 2;
    let last = os * (n_out - 1) + delay;

    let mut rp_rng = ChaCha8Rng::seed_from_u64(run.seed);
    rp_rng.set_stream(RP_STREAM);
    let mut sense_rng = ChaCha8Rng::seed_from_u64(run.seed);
    sense_rng.set_stream(SENSING_STREAM);
    let sense_sigma = run.white_noise_asd * (run.fs_hz / 2.0).sqrt();

    let force = |t: f64| chirp.map_or(0.0, |c| c.amplitude * c.phase(t).sin() / cav.mass());

    // Two copies of the history so the last `taps` values are always contiguous.
    let mut hist = vec![0.0; 2 * taps];
    let mut pos = 0usize;
    let mut out = Vec::with_capacity(n_out);
    let (mut x, mut v) = (0.0f64, 0.0f64);
    let mut block_idx = usize::MAX;
    let mut cached: Option<(f64, Block)> = None;
    let mut blk = Block {
        omega_sq: 0.0,
        damping: 0.0,
        noise_accel: 0.0,
    };
    let mut f_now = force(0.0);

    for j in 0..=last {
        // x holds the state at t_j = j h.
        hist[pos] = x;
        hist[pos + taps] = x;
        pos = (pos + 1) % taps;
        if j >= delay && (j - delay) % os == 0 {
            let y: f64 = hist[pos..pos + taps].iter().zip(&fir).map(|(a, b)| a * b).sum();
            let noise: f64 = if sense_sigma > 0.0 {
                sense_rng.sample::<f64, _>(StandardNormal) * sense_sigma
            } else {
                0.0
            };
            let y = y + noise;
            if !y.is_finite() {
                return Err(Error::NonFinite(format!("readout at sample {}", out.len())));
            }
            out.push(y);
        }
        if j == last {
            break;
        }

        if j / steps_per_block != block_idx {
            block_idx = j / steps_per_block;
            let t_mid = (block_idx as f64 + 0.5) * steps_per_block as f64 * h;
            let d = schedule.at(t_mid);
            blk = match cached {
                Some((dv, b)) if dv == d.value() => b,
                _ => block_params(cav, d, integ, fs_int)?,
            };
            cached = Some((d.value(), blk));
        }

        let t = j as f64 * h;
        let noise = if blk.noise_accel > 0.0 {
            rp_rng.sample::<f64, _>(StandardNormal) * blk.noise_accel
        } else {
            0.0
        };
        let f_mid = force(t + 0.5 * h) + noise;
        let f_end = force(t + h);
        let acc = |x: f64, v: f64, f: f64| -blk.omega_sq * x - blk.damping * v + f;
        let k1x = v;
        let k1v = acc(x, v, f_now + noise);
        let k2x = v + 0.5 * h * k1v;
        let k2v = acc(x + 0.5 * h * k1x, k2x, f_mid);
        let k3x = v + 0.5 * h * k2v;
        let k3v = acc(x + 0.5 * h * k2x, k3x, f_mid);
        let k4x = v + h * k3v;
        let k4v = acc(x + h * k3x, k4x, f_end + noise);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        f_now = f_end;
    }
    debug_assert_eq!(out.len(), n_out);

    Ok(TimeSeries {
        fs_hz: run.fs_hz,
        samples: out,
        provenance: Provenance {
            source: run.kind.as_str().to_string(),
            seed: Some(run.seed),
            schedule_digest: Some(schedule.digest()),
            config_digest: None,
        },
    })
}

/// Output of the tracking experiment.
#[derive(Debug, Clone)]
pub struct Experiments {
    pub runs: BTreeMap<RunKind, TimeSeries>,
    pub schedules: BTreeMap<String, DetuningSchedule>,
    pub white_noise_asd: f64,
    pub seeds: RunSeeds,
}

impl Experiments {
    pub fn get(&self, kind: RunKind) -> Option<&TimeSeries> {
        self.runs.get(&kind)
    }
}

/// Runs the requested subset of the four experiment kinds, in parallel.
pub fn run_experiments(
    cav: &Cavity,
    chirp: &ChirpSpec,
    params: &SimParams,
    seeds: RunSeeds,
    kinds: &[RunKind],
) -> Result<Experiments> {
    if kinds.is_empty() {
        return Err(Error::invalid("mode", "no runs selected"));
    }
    let mut unique = kinds.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != kinds.len() {
        return Err(Error::invalid("mode", "run kinds must be distinct"));
    }
    if (chirp.duration_s - params.duration_s).abs() > 1e-12 {
        return Err(Error::invalid("sim.duration_s", "must equal chirp.duration_s"));
    }
    let white = params.white_noise(cav)?;
    let reg = strategies(params.static_target_hz);
    let control_rate = 1.0 / params.control_block_s;
    let mut schedules = BTreeMap::new();
    for kind in kinds {
        if !schedules.contains_key(kind.mode()) {
            let s = schedule_for_chirp(cav, chirp, &*reg.get(kind.mode())?, control_rate)?;
            schedules.insert(kind.mode().to_string(), s);
        }
    }
    let runs = kinds
        .par_iter()
        .map(|&kind| {
            let run = params.run(kind, seeds.for_kind(kind), white);
            let sig = kind.has_signal().then_some(chirp);
            simulate(cav, &schedules[kind.mode()], sig, &run).map(|ts| (kind, ts))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiments {
        runs: runs.into_iter().collect(),
        schedules,
        white_noise_asd: white,
        seeds,
    })
}

pub fn run_four_experiments(
    cav: &Cavity,
    chirp: &ChirpSpec,
    params: &SimParams,
    seeds: RunSeeds,
) -> Result<Experiments> {
    run_experiments(cav, chirp, params, seeds, &RunKind::ALL)
}

#[cfg(test)]
mod tests;
