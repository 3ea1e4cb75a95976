//! TOML run configuration. Every section has defaults, so an empty file runs
//! the reference scenario.

use std::path::Path;

use optospring::chirp::{ChirpSpec, SimParams};
use optospring::fds::LossEfficiencyMap;
use optospring::qnoise::log_grid;
use optospring::spectral::{windows, AnalysisParams};
use optospring::{Cavity, CavityConfig, Detuning};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Master seed; the sweep and static noise seeds are derived from it.
    pub seed: u64,
    pub fs_hz: f64,
    pub duration_s: f64,
    pub oversample: usize,
    pub control_block_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub white_noise_asd: Option<f64>,
    pub feedback: bool,
    pub q_target: f64,
    pub rp_noise: bool,
    pub static_target_hz: f64,
    pub fir_taps: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        let p = SimParams::default();
        Self {
            seed: 1,
            fs_hz: p.fs_hz,
            duration_s: p.duration_s,
            oversample: p.oversample,
            control_block_s: p.control_block_s,
            white_noise_asd: p.white_noise_asd,
            feedback: true,
            q_target: p.q_target.unwrap_or(100.0),
            rp_noise: p.rp_noise,
            static_target_hz: p.static_target_hz,
            fir_taps: p.fir_taps,
        }
    }
}

impl SimSection {
    pub fn params(&self) -> SimParams {
        SimParams {
            fs_hz: self.fs_hz,
            duration_s: self.duration_s,
            oversample: self.oversample,
            control_block_s: self.control_block_s,
            white_noise_asd: self.white_noise_asd,
            q_target: self.feedback.then_some(self.q_target),
            rp_noise: self.rp_noise,
            static_target_hz: self.static_target_hz,
            fir_taps: self.fir_taps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdsSection {
    pub injected_db: f64,
    pub losses_ppm: Vec<f64>,
    pub calibration_loss_ppm: f64,
    pub calibration_output_db: f64,
    pub power_min_w: f64,
    pub power_max_w: f64,
    pub power_points: usize,
}

impl Default for FdsSection {
    fn default() -> Self {
        let map = LossEfficiencyMap::default();
        Self {
            injected_db: map.injected_db,
            losses_ppm: vec![50.0, 220.0, 500.0, 1000.0, 5000.0],
            calibration_loss_ppm: map.calibration_loss_ppm,
            calibration_output_db: map.calibration_output_db,
            power_min_w: 1e-9,
            power_max_w: 10.0,
            power_points: 121,
        }
    }
}

impl FdsSection {
    pub fn map(&self) -> LossEfficiencyMap {
        LossEfficiencyMap {
            injected_db: self.injected_db,
            calibration_loss_ppm: self.calibration_loss_ppm,
            calibration_output_db: self.calibration_output_db,
        }
    }

    pub fn power_grid(&self) -> Vec<f64> {
        log_grid(self.power_min_w, self.power_max_w, self.power_points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub detunings: usize,
    pub delta_start: f64,
    pub delta_end: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            detunings: 100,
            delta_start: -5.0,
            delta_end: Detuning::max_spring().value(),
            f_min_hz: 1e3,
            f_max_hz: 1e6,
            points: 2000,
        }
    }
}

impl SweepSection {
    pub fn freqs(&self) -> Vec<f64> {
        log_grid(self.f_min_hz, self.f_max_hz, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavityConfig,
    pub chirp: ChirpSpec,
    pub sim: SimSection,
    pub analysis: AnalysisParams,
    pub fds: FdsSection,
    pub sweep: SweepSection,
}

/// Rewrites a core validation error so its field carries the section path.
fn in_section(section: &str, err: optospring::Error) -> CliError {
    match err {
        optospring::Error::InvalidConfig { field, reason } => CliError::Validation {
            field: format!("{section}.{field}"),
            reason,
        },
        other => CliError::Validation {
            field: section.to_string(),
            reason: other.to_string(),
        },
    }
}

fn check(cond: bool, field: &str, reason: &str) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation {
            field: field.to_string(),
            reason: reason.to_string(),
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation {
            field: "config".into(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.display().to_string(),
                    source: e,
                })?;
                Self::parse(&text)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Checks every section and returns the validated cavity.
    pub fn validate(&self) -> Result<Cavity, CliError> {
        let cav = self.cavity.validate().map_err(|e| in_section("cavity", e))?;
        self.chirp.check().map_err(|e| in_section("chirp", e))?;

        let sim = &self.sim;
        sim.params().integrator().check().map_err(|e| in_section("sim", e))?;
        check(sim.fs_hz > 2.0 * self.chirp.f_end_hz, "sim.fs_hz", "must exceed twice chirp.f_end_hz")?;
        check(
            (sim.duration_s - self.chirp.duration_s).abs() < 1e-12,
            "sim.duration_s",
            "must equal chirp.duration_s",
        )?;
        optospring::chirp::sample_count(sim.fs_hz, sim.duration_s).map_err(|e| in_section("sim", e))?;
        check(sim.q_target > 0.0, "sim.q_target", "must be > 0")?;
        check(sim.static_target_hz > 0.0, "sim.static_target_hz", "must be > 0")?;
        if let Some(w) = sim.white_noise_asd {
            check(w.is_finite() && w >= 0.0, "sim.white_noise_asd", "must be finite and >= 0")?;
        }

        let a = &self.analysis;
        check(windows().contains(&a.window), "analysis.window", "unknown window function")?;
        check(a.window_len >= 2, "analysis.window_len", "must be >= 2")?;
        check(
            (a.window_len as f64) <= sim.fs_hz * sim.duration_s,
            "analysis.window_len",
            "longer than the record",
        )?;
        check((0.0..1.0).contains(&a.overlap), "analysis.overlap", "must lie in [0, 1)")?;
        check(a.moving_average >= 1, "analysis.moving_average", "must be >= 1")?;
        check(a.half_band_bins >= 1, "analysis.half_band_bins", "must be >= 1")?;

        let f = &self.fds;
        check(!f.losses_ppm.is_empty(), "fds.losses_ppm", "loss list is empty")?;
        check(
            f.losses_ppm.iter().all(|l| l.is_finite() && *l >= 0.0),
            "fds.losses_ppm",
            "losses must be finite and >= 0",
        )?;
        check(f.injected_db >= 0.0, "fds.injected_db", "must be >= 0")?;
        check(f.power_min_w > 0.0, "fds.power_min_w", "must be > 0")?;
        check(f.power_max_w >= 100.0 * f.power_min_w, "fds.power_max_w", "grid must span at least 2 decades")?;
        check(f.power_points >= 10, "fds.power_points", "must be >= 10")?;
        f.map().extrinsic(&cav).map_err(|e| in_section("fds", e))?;

        let s = &self.sweep;
        check(s.detunings >= 2, "sweep.detunings", "must be >= 2")?;
        check(
            s.delta_start < s.delta_end && s.delta_end < 0.0,
            "sweep.delta_start",
            "need delta_start < delta_end < 0",
        )?;
        check(s.f_min_hz > 0.0 && s.f_max_hz > s.f_min_hz, "sweep.f_max_hz", "need 0 < f_min_hz < f_max_hz")?;
        check(s.points >= 2, "sweep.points", "must be >= 2")?;
        check(
            s.f_max_hz < cav.constants().c / (4.0 * self.cavity.length_m),
            "sweep.f_max_hz",
            "must stay below the free spectral range / 2",
        )?;
        Ok(cav)
    }
}
