//! Quantum noise of the detuned cavity in the two-photon (quadrature) picture.
//!
//! Vacuum enters through the input coupler, the end mirror and the excess-loss
//! port, is filtered by the detuned cavity, pushes the mirror through radiation
//! pressure and reaches the detector in reflection. Spectra are referred to
//! mirror displacement, optionally with the optical-spring amplification
//! divided out ([`Regime::FreeMass`]).

mod model;
mod sweep;

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cavity::{sql_asd, Cavity, Detuning};
use crate::error::{Error, Result};

pub use model::{Mat2, Readout, Vec2};
pub(crate) use model::{dot, omega, Model};
pub use sweep::{sweep_noise_envelope, EnvelopeEntry, SweepEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSource {
    Shot,
    RadiationPressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Displacement as the detector sees it, spring amplification included.
    AsMeasured,
    /// Divided by `|chi_closed / chi_free|`.
    #[default]
    FreeMass,
}

/// Displacement-equivalent amplitude spectral density, m/sqrt(Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    pub freqs_hz: Vec<f64>,
    pub total_asd: Vec<f64>,
    pub components: BTreeMap<NoiseSource, Vec<f64>>,
    pub regime: Regime,
}

impl NoiseSpectrum {
    pub fn component(&self, src: NoiseSource) -> Option<&[f64]> {
        self.components.get(&src).map(Vec::as_slice)
    }

    /// Index and value of the smallest total ASD.
    pub fn minimum(&self) -> (usize, f64) {
        self.total_asd
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
    }

    /// Checks positivity, finiteness, grid ordering and that no component exceeds the total.
    pub fn check(&self) -> Result<()> {
        check_grid_order(&self.freqs_hz)?;
        if self.total_asd.len() != self.freqs_hz.len() {
            return Err(Error::AxisMismatch("total ASD length differs from grid".into()));
        }
        for (i, &t) in self.total_asd.iter().enumerate() {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::NonFinite(format!("total ASD[{i}] = {t}")));
            }
            for (src, comp) in &self.components {
                let c = comp[i];
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::NonFinite(format!("{src:?} ASD[{i}] = {c}")));
                }
                if t * t < c * c * (1.0 - 1e-12) {
                    return Err(Error::Domain(format!(
                        "{src:?} exceeds total at index {i}: {c:e} > {t:e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Transfer functions of the detuned cavity at each analysis frequency.
///
/// `field` maps input-port quadratures to reflected quadratures (closed loop,
/// mirror motion included). `to_displacement` maps input-port quadratures to
/// mirror displacement, and `displacement_to_output` maps displacement to the
/// reflected quadratures.
#[derive(Debug, Clone)]
pub struct CavityResponse {
    pub freqs_hz: Vec<f64>,
    pub field: Vec<Mat2>,
    pub to_displacement: Vec<Vec2>,
    pub displacement_to_output: Vec<Vec2>,
    /// Complex optical spring `K(Omega)`, N/m.
    pub spring: Vec<C64>,
    /// Closed-loop mechanical susceptibility, m/N.
    pub susceptibility: Vec<C64>,
}

/// Default analysis grid: 2000 log-spaced points from 1 kHz to 1 MHz.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e3, 1e6, 2000)
}

pub fn log_grid(f_lo: f64, f_hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![f_lo];
    }
    let (a, b) = (f_lo.ln(), f_hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn check_grid_order(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::Grid("frequency grid is empty".into()));
    }
    if freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("frequencies must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_grid(cav: &Cavity, freqs: &[f64]) -> Result<()> {
    check_grid_order(freqs)?;
    let limit = cav.constants().c / (4.0 * cav.config().length_m);
    let (lo, hi) = (freqs[0], freqs[freqs.len() - 1]);
    if !(lo > 0.0) || !(hi < limit) || !hi.is_finite() {
        return Err(Error::Grid(format!(
            "frequencies must lie in (0, {limit:.3e}) Hz, got [{lo:e}, {hi:e}]"
        )));
    }
    Ok(())
}

pub fn cavity_response(cav: &Cavity, d: Detuning, freqs: &[f64]) -> Result<CavityResponse> {
    check_grid(cav, freqs)?;
    let model = Model::three_port(cav, d);
    let mut resp = CavityResponse {
        freqs_hz: freqs.to_vec(),
        field: Vec::with_capacity(freqs.len()),
        to_displacement: Vec::with_capacity(freqs.len()),
        displacement_to_output: Vec::with_capacity(freqs.len()),
        spring: Vec::with_capacity(freqs.len()),
        susceptibility: Vec::with_capacity(freqs.len()),
    };
    for &f in freqs {
        let p = model.point(omega(f));
        let (c0, c1) = (p.output(0, 0), p.output(0, 1));
        resp.field.push([[c0[0], c1[0]], [c0[1], c1[1]]]);
        resp.to_displacement.push(p.to_x[0]);
        resp.displacement_to_output.push(p.x_to_out);
        resp.spring.push(p.spring);
        resp.susceptibility.push(p.chi);
    }
    Ok(resp)
}

/// Port covariance for one vacuum or squeezed input, in shot-noise units.
pub(crate) type Covariance = [[f64; 2]; 2];

pub(crate) const VACUUM: Covariance = [[1.0, 0.0], [0.0, 1.0]];

fn quadratic_form(c: Vec2, v: &Covariance) -> f64 {
    let mut s = 0.0;
    for (q, row) in v.iter().enumerate() {
        for (r, &vqr) in row.iter().enumerate() {
            s += vqr * (c[q].conj() * c[r]).re;
        }
    }
    s
}

/// Spectrum of `model` read out at `angle`, with per-port input covariances.
pub(crate) fn model_spectrum(
    model: &Model,
    freqs: &[f64],
    angle: f64,
    regime: Regime,
    covariance: impl Fn(usize, &model::Point) -> Covariance,
) -> NoiseSpectrum {
    let ro = [angle.cos(), angle.sin()];
    let n = freqs.len();
    let (mut total, mut shot, mut rp) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &f in freqs {
        let w = omega(f);
        let p = model.point(w);
        let signal = dot(ro, p.x_to_out);
        let (mut s_tot, mut s_shot, mut s_rp) = (0.0, 0.0, 0.0);
        for port in 0..model.port_rates.len() {
            let cov = covariance(port, &p);
            let mut c_tot = [C64::default(); 2];
            let mut c_shot = [C64::default(); 2];
            let mut c_rp = [C64::default(); 2];
            for q in 0..2 {
                c_shot[q] = dot(ro, p.direct[port][q]);
                c_rp[q] = signal * p.to_x[port][q];
                c_tot[q] = c_shot[q] + c_rp[q];
            }
            s_tot += quadratic_form(c_tot, &cov);
            s_shot += quadratic_form(c_shot, &cov);
            s_rp += quadratic_form(c_rp, &cov);
        }
        let mut scale = 1.0 / signal.norm();
        if regime == Regime::FreeMass {
            scale *= model.free_mass_gain(w) / p.chi.norm();
        }
        total.push(s_tot.max(0.0).sqrt() * scale);
        shot.push(s_shot.max(0.0).sqrt() * scale);
        rp.push(s_rp.max(0.0).sqrt() * scale);
    }
    let mut components = BTreeMap::new();
    components.insert(NoiseSource::Shot, shot);
    components.insert(NoiseSource::RadiationPressure, rp);
    NoiseSpectrum {
        freqs_hz: freqs.to_vec(),
        total_asd: total,
        components,
        regime,
    }
}

/// Quantum-noise spectrum read out in the signal quadrature.
pub fn quantum_noise_asd(
    cav: &Cavity,
    d: Detuning,
    freqs: &[f64],
    regime: Regime,
) -> Result<NoiseSpectrum> {
    quantum_noise_asd_with(cav, d, freqs, regime, Readout::Signal)
}

pub fn quantum_noise_asd_with(
    cav: &Cavity,
    d: Detuning,
    freqs: &[f64],
    regime: Regime,
    readout: Readout,
) -> Result<NoiseSpectrum> {
    check_grid(cav, freqs)?;
    let model = Model::three_port(cav, d);
    let spec = model_spectrum(&model, freqs, readout.angle(d), regime, |_, _| VACUUM);
    if let Some((i, _)) = spec
        .total_asd
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(Error::NonFinite(format!(
            "quantum noise at {} Hz is not a positive number (readout blind to displacement?)",
            freqs[i]
        )));
    }
    Ok(spec)
}

/// Analytic free-mass radiation-pressure displacement
/// `(1/(m W^2)) (2 P_c / c) sqrt(8 h f / (P_c T (1 + delta^2)))`.
pub fn radiation_pressure_asd(cav: &Cavity, d: Detuning, freqs: &[f64]) -> Result<NoiseSpectrum> {
    check_grid_order(freqs)?;
    if freqs[0] <= 0.0 {
        return Err(Error::Domain("radiation pressure ASD needs Omega > 0".into()));
    }
    let c = cav.constants().c;
    let h = cav.constants().h;
    let f_laser = cav.config().laser_freq_hz;
    let pc = cav.circulating_power(d);
    let delta = d.value();
    let force = 2.0 * pc / c * (8.0 * h * f_laser / (pc * cav.t_total() * (1.0 + delta * delta))).sqrt();
    let asd: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let w = omega(f);
            force / (cav.mass() * w * w)
        })
        .collect();
    let mut components = BTreeMap::new();
    components.insert(NoiseSource::RadiationPressure, asd.clone());
    Ok(NoiseSpectrum {
        freqs_hz: freqs.to_vec(),
        total_asd: asd,
        components,
        regime: Regime::FreeMass,
    })
}

/// Free-mass SQL on a grid.
pub fn sql_curve(mass_kg: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    freqs.iter().map(|&f| sql_asd(mass_kg, omega(f))).collect()
}

/// Optical-spring resonance including the frequency dependence of `Re K`,
/// i.e. the fixed point of `m W^2 = k_m + Re K(W)`. Hz.
pub fn resonance_frequency(cav: &Cavity, d: Detuning) -> Result<f64> {
    if d.value() >= 0.0 {
        return Err(Error::Domain(format!(
            "no optical spring resonance for delta = {} >= 0",
            d.value()
        )));
    }
    let model = Model::three_port(cav, d);
    let mut w = omega(cav.os_frequency(d)?);
    for _ in 0..200 {
        let k = model.k_mech + model.spring(w).re;
        if k <= 0.0 {
            return Err(Error::Domain("dynamic stiffness not positive".into()));
        }
        let next = (k / model.mass).sqrt();
        if ((next - w) / w).abs() < 1e-14 {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w / (2.0 * std::f64::consts::PI))
}

/// Quality factor of the optical-spring resonance, mechanical and optical damping combined.
pub fn q_os(cav: &Cavity, d: Detuning) -> Result<f64> {
    let f = resonance_frequency(cav, d)?;
    let w = omega(f);
    let model = Model::three_port(cav, d);
    let k = model.spring(w);
    let stiffness = model.k_mech + k.re;
    let loss = model.mass * model.mech_damping * w + k.im;
    Ok(stiffness / loss.abs())
}

/// Dynamic spring parameters used by the time-domain simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringDynamics {
    /// Static total stiffness `k_m + k_OS`, N/m.
    pub stiffness: f64,
    /// Resonance angular frequency, rad/s.
    pub omega: f64,
    /// Optical velocity damping rate `Im K / (m W)` at resonance, 1/s. Negative is anti-damping.
    pub optical_damping: f64,
    /// Single-sided radiation-pressure force PSD at resonance, N^2/Hz.
    pub force_psd: f64,
}

/// Spring parameters in the adiabatic stiffness limit, with the optical damping
/// and radiation-pressure force noise evaluated at the resonance.
pub fn spring_dynamics(cav: &Cavity, d: Detuning) -> Result<SpringDynamics> {
    let stiffness = cav.mech_stiffness() + cav.optical_spring_constant(d);
    if stiffness <= 0.0 {
        return Err(Error::Domain(format!(
            "total stiffness not positive at delta = {}",
            d.value()
        )));
    }
    let w = (stiffness / cav.mass()).sqrt();
    let model = Model::three_port(cav, d);
    Ok(SpringDynamics {
        stiffness,
        omega: w,
        optical_damping: model.spring(w).im / (cav.mass() * w),
        force_psd: model.force_psd(w),
    })
}

#[cfg(test)]
mod tests;
