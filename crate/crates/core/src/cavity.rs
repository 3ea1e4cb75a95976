//! Closed-form static optical-spring physics of a two-mirror detuned cavity.
//!
//! Detuning is measured in cavity half-linewidths, so the circulating power is
//! the Lorentzian `P_0 / (1 + delta^2)`. Transmissions and losses are given in
//! ppm and converted to power fractions once, in [`CavityConfig::validate`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{PhysicalConstants, CODATA_2018};
use crate::error::{Error, Result};

const PPM: f64 = 1e-6;

/// Raw cavity parameters as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub length_m: f64,
    pub wavelength_m: f64,
    pub laser_freq_hz: f64,
    pub input_power_w: f64,
    pub t_input_ppm: f64,
    pub t_end_ppm: f64,
    pub loss_ppm: f64,
    pub mass_kg: f64,
    pub mech_freq_hz: f64,
    pub mech_q: f64,
}

impl Default for CavityConfig {
    /// The tabletop micro-resonator cavity: 1 cm long, 0.5 mW at 1064 nm,
    /// 50 ppm input coupler, 450 ppm cantilever, 220 ppm excess loss, 50 ng.
    fn default() -> Self {
        let wavelength_m = 1064e-9;
        Self {
            length_m: 0.01,
            wavelength_m,
            laser_freq_hz: CODATA_2018.c / wavelength_m,
            input_power_w: 0.5e-3,
            t_input_ppm: 50.0,
            t_end_ppm: 450.0,
            loss_ppm: 220.0,
            mass_kg: 50e-12,
            mech_freq_hz: 876.0,
            mech_q: 25_000.0,
        }
    }
}

impl CavityConfig {
    pub fn validate(&self) -> Result<Cavity> {
        let positive = [
            ("length_m", self.length_m),
            ("wavelength_m", self.wavelength_m),
            ("laser_freq_hz", self.laser_freq_hz),
            ("input_power_w", self.input_power_w),
            ("t_input_ppm", self.t_input_ppm),
            ("t_end_ppm", self.t_end_ppm),
            ("loss_ppm", self.loss_ppm),
            ("mass_kg", self.mass_kg),
            ("mech_freq_hz", self.mech_freq_hz),
            ("mech_q", self.mech_q),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        let total_ppm = self.t_input_ppm + self.t_end_ppm + self.loss_ppm;
        if total_ppm >= 1e6 {
            return Err(Error::invalid(
                "loss_ppm",
                format!("t_input + t_end + loss must be < 1e6 ppm, got {total_ppm}"),
            ));
        }
        let c = CODATA_2018.c;
        let implied = c / self.wavelength_m;
        if ((self.laser_freq_hz - implied) / implied).abs() > 1e-6 {
            return Err(Error::invalid(
                "laser_freq_hz",
                format!("inconsistent with wavelength (c/lambda = {implied:.6e} Hz)"),
            ));
        }

        let t_input = self.t_input_ppm * PPM;
        let t_end = self.t_end_ppm * PPM;
        let loss = self.loss_ppm * PPM;
        let t_total = t_input + t_end + loss;
        Ok(Cavity {
            cfg: self.clone(),
            consts: CODATA_2018,
            t_input,
            t_end,
            loss,
            t_total,
            peak_power_w: 4.0 * t_input * self.input_power_w / (t_total * t_total),
        })
    }
}

/// Cavity detuning in half-linewidth units. Negative values give a restoring spring.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Detuning(pub(crate) f64);

impl Detuning {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(Error::Domain(format!("detuning must be finite, got {delta}")))
        }
    }

    /// Detuning of the stiffest spring, `-1/sqrt(3)`.
    pub fn max_spring() -> Self {
        Self(-1.0 / 3f64.sqrt())
    }

    pub fn on_resonance() -> Self {
        Self(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which side of the stiffness maximum a detuning lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `|delta| >= 1/sqrt(3)`.
    Weak,
    /// `|delta| <= 1/sqrt(3)`.
    Strong,
}

/// A validated cavity with SI power fractions and derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Cavity {
    cfg: CavityConfig,
    consts: PhysicalConstants,
    t_input: f64,
    t_end: f64,
    loss: f64,
    t_total: f64,
    peak_power_w: f64,
}

impl Cavity {
    pub fn config(&self) -> &CavityConfig {
        &self.cfg
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.consts
    }

    pub fn t_input(&self) -> f64 {
        self.t_input
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    /// Total round-trip power loss, the `T` of the spring-constant formula.
    pub fn t_total(&self) -> f64 {
        self.t_total
    }

    pub fn mass(&self) -> f64 {
        self.cfg.mass_kg
    }

    /// On-resonance circulating power `4 t_in P_in / T^2`.
    pub fn peak_power(&self) -> f64 {
        self.peak_power_w
    }

    /// Energy decay rate `kappa = c T / (2 L)`, rad/s.
    pub fn kappa(&self) -> f64 {
        self.consts.c * self.t_total / (2.0 * self.cfg.length_m)
    }

    /// Amplitude decay rate (half-linewidth) `kappa / 2`, rad/s.
    pub fn half_linewidth(&self) -> f64 {
        0.5 * self.kappa()
    }

    pub fn laser_angular_freq(&self) -> f64 {
        2.0 * PI * self.cfg.laser_freq_hz
    }

    /// Mechanical stiffness `m (2 pi f_m)^2`.
    pub fn mech_stiffness(&self) -> f64 {
        let w = 2.0 * PI * self.cfg.mech_freq_hz;
        self.cfg.mass_kg * w * w
    }

    /// Mechanical velocity damping rate `omega_m / Q_m`, 1/s.
    pub fn mech_damping_rate(&self) -> f64 {
        2.0 * PI * self.cfg.mech_freq_hz / self.cfg.mech_q
    }

    pub fn with_input_power(&self, watts: f64) -> Result<Cavity> {
        CavityConfig {
            input_power_w: watts,
            ..self.cfg.clone()
        }
        .validate()
    }

    pub fn circulating_power(&self, d: Detuning) -> f64 {
        self.peak_power_w / (1.0 + d.0 * d.0)
    }

    /// Mirror displacement from resonance, `x = delta lambda T / (8 pi)`.
    pub fn detuning_to_displacement(&self, d: Detuning) -> f64 {
        d.0 * self.cfg.wavelength_m * self.t_total / (8.0 * PI)
    }

    /// Static optical spring constant, N/m. Positive for `delta < 0`.
    pub fn optical_spring_constant(&self, d: Detuning) -> f64 {
        let delta = d.0;
        let pc = self.circulating_power(d);
        -32.0 * PI * delta * pc
            / (self.cfg.wavelength_m * self.consts.c * self.t_total * (1.0 + delta * delta))
    }

    /// Optical-spring resonance `sqrt((k_OS + k_m)/m) / 2 pi`, keeping the mechanical term.
    pub fn os_frequency(&self, d: Detuning) -> Result<f64> {
        let k = self.optical_spring_constant(d) + self.mech_stiffness();
        if k <= 0.0 {
            return Err(Error::Domain(format!(
                "total stiffness {k:.3e} N/m is not positive at delta = {} (anti-spring branch)",
                d.0
            )));
        }
        Ok((k / self.cfg.mass_kg).sqrt() / (2.0 * PI))
    }

    /// Highest reachable optical-spring frequency, at `delta = -1/sqrt(3)`.
    pub fn max_os_frequency(&self) -> f64 {
        self.os_frequency(Detuning::max_spring())
            .expect("spring branch is positive")
    }

    /// Inverts [`Cavity::os_frequency`] on one branch of `delta < 0` by bisection.
    pub fn detuning_for_os_frequency(&self, f_target: f64, branch: Branch) -> Result<Detuning> {
        let f_m = self.cfg.mech_freq_hz;
        let f_max = self.max_os_frequency();
        let out_of_range = || Error::OutOfRange {
            target_hz: f_target,
            min_hz: f_m,
            max_hz: f_max,
        };
        if !f_target.is_finite() || f_target > f_max || f_target < f_m {
            return Err(out_of_range());
        }
        let peak = Detuning::max_spring().0;
        if f_target == f_max {
            return Ok(Detuning(peak));
        }
        let f_of = |delta: f64| {
            self.os_frequency(Detuning(delta))
                .expect("delta <= 0 keeps stiffness positive")
        };

        // f_of is increasing on the weak branch and decreasing on the strong one.
        let (mut lo, mut hi) = match branch {
            Branch::Strong => {
                if f_target == f_m {
                    return Ok(Detuning(-0.0));
                }
                (peak, 0.0)
            }
            Branch::Weak => {
                if f_target == f_m {
                    return Err(out_of_range());
                }
                let mut lo = 2.0 * peak;
                while f_of(lo) > f_target {
                    lo *= 2.0;
                    if !lo.is_finite() || lo < -1e12 {
                        return Err(out_of_range());
                    }
                }
                (lo, peak)
            }
        };
        let increasing = branch == Branch::Weak;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if (f_of(mid) < f_target) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (flo, fhi) = (f_of(lo), f_of(hi));
        let delta = if (flo - f_target).abs() <= (fhi - f_target).abs() {
            lo
        } else {
            hi
        };
        Ok(Detuning(delta))
    }
}

/// Free-mass standard quantum limit `sqrt(2 hbar / (m Omega^2))`, m/sqrt(Hz).
pub fn sql_asd(mass_kg: f64, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("angular frequency must be > 0, got {omega}")));
    }
    if !(mass_kg.is_finite() && mass_kg > 0.0) {
        return Err(Error::Domain(format!("mass must be > 0, got {mass_kg}")));
    }
    Ok((2.0 * CODATA_2018.hbar / (mass_kg * omega * omega)).sqrt())
}

/// Radiation-pressure noise over the SQL at the spring resonance, `sqrt(1/-delta)`.
pub fn rp_sql_ratio(d: Detuning) -> Result<f64> {
    if d.0 >= 0.0 {
        return Err(Error::Domain(format!(
            "no optical spring resonance for delta = {} >= 0",
            d.0
        )));
    }
    Ok((-1.0 / d.0).sqrt())
}
