//! Frequency-dependent squeezing comparator.
//!
//! Squeezed vacuum enters an on-resonance cavity through the readout port and
//! is degraded by a total efficiency `eta`. At each frequency the squeezing
//! angle is the one that minimizes the readout noise. The comparator curve is
//! the per-frequency minimum over a grid of input powers.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{Cavity, Detuning};
use crate::error::{Error, Result};
use crate::qnoise::{check_grid, dot, omega, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerConfig {
    /// Injected squeezing in dB; positive means noise reduction.
    pub injected_db: f64,
    /// Total power efficiency in (0, 1].
    pub efficiency: f64,
    /// Round-trip loss this scenario represents.
    pub loss_ppm: f64,
}

impl SqueezerConfig {
    pub fn check(&self) -> Result<()> {
        check_efficiency(self.efficiency)?;
        if !(self.injected_db.is_finite() && self.injected_db >= 0.0) {
            return Err(Error::invalid("injected_db", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn output_db(&self) -> f64 {
        output_squeezing_db(self.injected_db, self.efficiency).expect("checked efficiency")
    }
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

/// Squeezing left after a lossy channel, `-10 log10(eta 10^(-S/10) + 1 - eta)`.
pub fn output_squeezing_db(injected_db: f64, efficiency: f64) -> Result<f64> {
    check_efficiency(efficiency)?;
    let v = efficiency * 10f64.powf(-injected_db / 10.0) + (1.0 - efficiency);
    Ok(-10.0 * v.log10())
}

/// Efficiency that turns `injected_db` into `output_db`.
pub fn efficiency_for_output(injected_db: f64, output_db: f64) -> Result<f64> {
    if !(injected_db > 0.0 && output_db >= 0.0 && output_db <= injected_db) {
        return Err(Error::Domain(format!(
            "need 0 <= output ({output_db} dB) <= injected ({injected_db} dB), injected > 0"
        )));
    }
    let eta = (1.0 - 10f64.powf(-output_db / 10.0)) / (1.0 - 10f64.powf(-injected_db / 10.0));
    check_efficiency(eta)?;
    Ok(eta)
}

/// Maps cavity round-trip loss to squeezing efficiency through the loss-port
/// coupling fraction `loss / (t_in + t_end + loss)`, calibrated at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEfficiencyMap {
    pub injected_db: f64,
    pub calibration_loss_ppm: f64,
    pub calibration_output_db: f64,
}

impl Default for LossEfficiencyMap {
    fn default() -> Self {
        Self {
            injected_db: 17.0,
            calibration_loss_ppm: 50.0,
            calibration_output_db: 4.6,
        }
    }
}

impl LossEfficiencyMap {
    fn escape(cav: &Cavity, loss_ppm: f64) -> f64 {
        let others = (cav.t_input() + cav.t_end()) * 1e6;
        1.0 - loss_ppm / (others + loss_ppm)
    }

    /// Efficiency outside the cavity, fixed by the calibration point.
    pub fn extrinsic(&self, cav: &Cavity) -> Result<f64> {
        let target = efficiency_for_output(self.injected_db, self.calibration_output_db)?;
        let eta = target / Self::escape(cav, self.calibration_loss_ppm);
        check_efficiency(eta).map_err(|_| {
            Error::invalid(
                "calibration_output_db",
                format!("calibration needs extrinsic efficiency {eta:.4} > 1"),
            )
        })?;
        Ok(eta)
    }

    pub fn efficiency(&self, cav: &Cavity, loss_ppm: f64) -> Result<f64> {
        if !(loss_ppm.is_finite() && loss_ppm >= 0.0) {
            return Err(Error::invalid("losses_ppm", format!("loss must be >= 0, got {loss_ppm}")));
        }
        Ok(self.extrinsic(cav)? * Self::escape(cav, loss_ppm))
    }

    pub fn squeezer(&self, cav: &Cavity, loss_ppm: f64) -> Result<SqueezerConfig> {
        Ok(SqueezerConfig {
            injected_db: self.injected_db,
            efficiency: self.efficiency(cav, loss_ppm)?,
            loss_ppm,
        })
    }
}

/// How the squeezing ellipse is oriented at each frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeAngle {
    /// Ellipse rotated to minimize readout noise at every frequency.
    #[default]
    Optimal,
    /// Better of pure amplitude or pure phase squeezing per frequency.
    FixedQuadratures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdsCurve {
    pub freqs_hz: Vec<f64>,
    pub asd: Vec<f64>,
    pub power_at_min: Vec<f64>,
}

/// Default input-power grid: 1 nW to 10 W, 12 points per decade.
pub fn default_power_grid() -> Vec<f64> {
    crate::qnoise::log_grid(1e-9, 10.0, 121)
}

fn check_power_grid(powers: &[f64]) -> Result<()> {
    if powers.len() < 10 {
        return Err(Error::invalid("power_grid", format!("need >= 10 points, got {}", powers.len())));
    }
    if powers.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::invalid("power_grid", "powers must be finite and > 0"));
    }
    let (lo, hi) = powers
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
    if hi / lo < 100.0 {
        return Err(Error::invalid("power_grid", "grid must span at least 2 decades"));
    }
    Ok(())
}

/// Noise PSD of the input port after the squeezer, in shot-noise units.
fn squeezed_port_noise(c: [C64; 2], sq: &SqueezerConfig, angle: SqueezeAngle) -> f64 {
    // A = Re(c c^H) is the quadratic form of the port covariance.
    let a = c[0].norm_sqr();
    let d = c[1].norm_sqr();
    let b = (c[0].conj() * c[1]).re;
    let eta = sq.efficiency;
    let squeeze = 10f64.powf(-sq.injected_db / 10.0);
    let anti = 1.0 / squeeze;
    let lossy = |v: f64| eta * v + (1.0 - eta);
    match angle {
        SqueezeAngle::Optimal => {
            let half_tr = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            let (hi, lo) = (half_tr + disc, (half_tr - disc).max(0.0));
            lossy(squeeze) * hi + lossy(anti) * lo
        }
        SqueezeAngle::FixedQuadratures => {
            let amplitude = lossy(squeeze) * a + lossy(anti) * d;
            let phase = lossy(anti) * a + lossy(squeeze) * d;
            amplitude.min(phase)
        }
    }
}

/// Free-mass displacement ASD of the squeezed on-resonance readout for one input power.
fn squeezed_spectrum(
    cav: &Cavity,
    sq: &SqueezerConfig,
    angle: SqueezeAngle,
    freqs: &[f64],
) -> Vec<f64> {
    let model = Model::single_port(cav, Detuning::on_resonance());
    let ro = [0.0, 1.0];
    freqs
        .iter()
        .map(|&f| {
            let w = omega(f);
            let p = model.point(w);
            let signal = dot(ro, p.x_to_out);
            let c = [dot(ro, p.output(0, 0)), dot(ro, p.output(0, 1))];
            let s = squeezed_port_noise(c, sq, angle);
            s.sqrt() / signal.norm() * model.free_mass_gain(w) / p.chi.norm()
        })
        .collect()
}

pub fn fds_noise_curve(
    cav: &Cavity,
    sq: &SqueezerConfig,
    power_grid: &[f64],
    freqs: &[f64],
) -> Result<FdsCurve> {
    fds_noise_curve_with(cav, sq, SqueezeAngle::Optimal, power_grid, freqs)
}

pub fn fds_noise_curve_with(
    cav: &Cavity,
    sq: &SqueezerConfig,
    angle: SqueezeAngle,
    power_grid: &[f64],
    freqs: &[f64],
) -> Result<FdsCurve> {
    sq.check()?;
    check_power_grid(power_grid)?;
    check_grid(cav, freqs)?;
    let per_power = power_grid
        .par_iter()
        .map(|&p| Ok((p, squeezed_spectrum(&cav.with_input_power(p)?, sq, angle, freqs))))
        .collect::<Result<Vec<_>>>()?;

    let mut asd = vec![f64::INFINITY; freqs.len()];
    let mut power_at_min = vec![f64::NAN; freqs.len()];
    for (p, spec) in &per_power {
        for (i, &v) in spec.iter().enumerate() {
            if v < asd[i] {
                asd[i] = v;
                power_at_min[i] = *p;
            }
        }
    }
    if let Some(v) = asd.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::NonFinite(format!("squeezed noise {v}")));
    }
    Ok(FdsCurve {
        freqs_hz: freqs.to_vec(),
        asd,
        power_at_min,
    })
}

/// One loss scenario of the loss study.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub loss_ppm: f64,
    pub efficiency: f64,
    pub output_db: f64,
    pub curve: FdsCurve,
}

/// Comparator curves for each loss, ordered by loss.
pub fn loss_sweep_study(
    cav: &Cavity,
    map: &LossEfficiencyMap,
    losses_ppm: &[f64],
    power_grid: &[f64],
    freqs: &[f64],
) -> Result<Vec<LossCurve>> {
    if losses_ppm.is_empty() {
        return Err(Error::invalid("losses_ppm", "loss list is empty"));
    }
    check_grid(cav, freqs)?;
    let mut losses = losses_ppm.to_vec();
    losses.sort_by(|a, b| a.total_cmp(b));
    losses
        .iter()
        .map(|&loss| {
            let sq = map.squeezer(cav, loss)?;
            Ok(LossCurve {
                loss_ppm: loss,
                efficiency: sq.efficiency,
                output_db: sq.output_db(),
                curve: fds_noise_curve(cav, &sq, power_grid, freqs)?,
            })
        })
        .collect()
}
