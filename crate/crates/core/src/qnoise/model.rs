//! Linearized single-mode detuned cavity in the quadrature picture.
//!
//! Quadratures are taken relative to the intracavity carrier. With the
//! `e^{+i Omega t}` convention the intracavity fluctuations obey
//!
//! ```text
//! [ g + iW    D   ] [a1]   [ sum_j sqrt(2 g_j) b1_j          ]
//! [  -D     g + iW ] [a2] = [ sum_j sqrt(2 g_j) b2_j - s_x x ]
//! ```
//!
//! with `g` the total amplitude decay rate, `D = delta g` and
//! `s_x = sqrt(2) G a` the displacement coupling. The amplitude quadrature
//! drives the mirror through `F = sqrt(2) hbar G a a1`, and the reflected
//! field is `b_out = sqrt(2 g_in) a - b_in`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::cavity::{Cavity, Detuning};

pub type Vec2 = [C64; 2];
pub type Mat2 = [[C64; 2]; 2];

pub(crate) fn dot(a: [f64; 2], b: Vec2) -> C64 {
    b[0] * a[0] + b[1] * a[1]
}

/// Output quadrature the detector reads.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Readout {
    /// The quadrature carrying the DC displacement signal, `atan2(1, -delta)`.
    /// Coincides with the phase quadrature on resonance.
    #[default]
    Signal,
    /// Phase quadrature of the intracavity carrier.
    Phase,
    /// Amplitude quadrature of the intracavity carrier.
    Amplitude,
    /// Explicit homodyne angle in radians.
    Angle(f64),
}

impl Readout {
    pub fn angle(self, d: Detuning) -> f64 {
        match self {
            Readout::Signal => 1f64.atan2(-d.value()),
            Readout::Phase => FRAC_PI_2,
            Readout::Amplitude => 0.0,
            Readout::Angle(a) => a,
        }
    }
}

/// Per-frequency solution of the linear model.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub spring: C64,
    pub chi: C64,
    /// Output quadratures per unit mirror displacement.
    pub x_to_out: Vec2,
    /// For each port and input quadrature: output quadratures without the mirror path.
    pub direct: Vec<[Vec2; 2]>,
    /// For each port and input quadrature: mirror displacement.
    pub to_x: Vec<Vec2>,
}

impl Point {
    /// Full output quadratures for a unit input in `port`, quadrature `q`.
    pub fn output(&self, port: usize, q: usize) -> Vec2 {
        let x = self.to_x[port][q];
        let d = self.direct[port][q];
        [d[0] + self.x_to_out[0] * x, d[1] + self.x_to_out[1] * x]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Model {
    /// Amplitude decay rate through each port; port 0 is the readout port.
    pub port_rates: Vec<f64>,
    pub gamma: f64,
    pub detuning_rate: f64,
    pub carrier: f64,
    pub coupling: f64,
    pub hbar: f64,
    pub mass: f64,
    pub k_mech: f64,
    pub mech_damping: f64,
}

impl Model {
    /// Three vacuum ports: input coupler (readout), end mirror, excess loss.
    pub fn three_port(cav: &Cavity, d: Detuning) -> Self {
        let rates = [cav.t_input(), cav.t_end(), cav.loss()]
            .map(|t| cav.constants().c * t / (4.0 * cav.config().length_m));
        Self::with_ports(cav, d, rates.to_vec())
    }

    /// All decay through the readout port and a free test mass; used for the
    /// lossless comparator.
    pub fn single_port(cav: &Cavity, d: Detuning) -> Self {
        Self {
            k_mech: 0.0,
            mech_damping: 0.0,
            ..Self::with_ports(cav, d, vec![cav.half_linewidth()])
        }
    }

    fn with_ports(cav: &Cavity, d: Detuning, port_rates: Vec<f64>) -> Self {
        let gamma = cav.half_linewidth();
        let consts = cav.constants();
        let w0 = cav.laser_angular_freq();
        let length = cav.config().length_m;
        let photons = cav.circulating_power(d) * 2.0 * length / (consts.hbar * w0 * consts.c);
        Self {
            port_rates,
            gamma,
            detuning_rate: d.value() * gamma,
            carrier: photons.sqrt(),
            coupling: w0 / length,
            hbar: consts.hbar,
            mass: cav.mass(),
            k_mech: cav.mech_stiffness(),
            mech_damping: cav.mech_damping_rate(),
        }
    }

    pub fn inverse(&self, omega: f64) -> Mat2 {
        let s = C64::new(self.gamma, omega);
        let dd = C64::from(self.detuning_rate);
        let det = s * s + dd * dd;
        [[s / det, -dd / det], [dd / det, s / det]]
    }

    /// Complex optical spring `K(W) = -2 hbar G^2 N D / ((g + iW)^2 + D^2)`.
    pub fn spring(&self, omega: f64) -> C64 {
        let s = C64::new(self.gamma, omega);
        let dd = self.detuning_rate;
        let num = -2.0 * self.hbar * self.coupling.powi(2) * self.carrier.powi(2) * dd;
        C64::from(num) / (s * s + dd * dd)
    }

    /// Closed-loop mechanical susceptibility including the optical spring.
    pub fn susceptibility(&self, omega: f64) -> C64 {
        let k = self.k_mech + self.spring(omega) - self.mass * omega * omega;
        let damping = C64::new(0.0, self.mass * self.mech_damping * omega);
        (k + damping).inv()
    }

    pub fn point(&self, omega: f64) -> Point {
        let m = self.inverse(omega);
        let sx = 2f64.sqrt() * self.coupling * self.carrier;
        let force_gain = 2f64.sqrt() * self.hbar * self.coupling * self.carrier;
        let out_gain = (2.0 * self.port_rates[0]).sqrt();
        let chi = self.susceptibility(omega);

        let x_to_out = [m[0][1] * (-sx) * out_gain, m[1][1] * (-sx) * out_gain];
        let mut direct = Vec::with_capacity(self.port_rates.len());
        let mut to_x = Vec::with_capacity(self.port_rates.len());
        for (j, &rate) in self.port_rates.iter().enumerate() {
            let g = (2.0 * rate).sqrt();
            let mut dir = [[C64::default(); 2]; 2];
            let mut xs = [C64::default(); 2];
            for q in 0..2 {
                let a = [m[0][q] * g, m[1][q] * g];
                xs[q] = chi * force_gain * a[0];
                dir[q] = [a[0] * out_gain, a[1] * out_gain];
                if j == 0 {
                    dir[q][q] -= 1.0;
                }
            }
            direct.push(dir);
            to_x.push(xs);
        }
        Point {
            spring: self.spring(omega),
            chi,
            x_to_out,
            direct,
            to_x,
        }
    }

    /// Single-sided radiation-pressure force PSD from vacuum in all ports, N^2/Hz.
    pub fn force_psd(&self, omega: f64) -> f64 {
        let m = self.inverse(omega);
        let force_gain = 2f64.sqrt() * self.hbar * self.coupling * self.carrier;
        self.port_rates
            .iter()
            .map(|&rate| {
                let g2 = 2.0 * rate;
                (m[0][0].norm_sqr() + m[0][1].norm_sqr()) * g2
            })
            .sum::<f64>()
            * force_gain
            * force_gain
    }

    /// Free-mass susceptibility magnitude `1 / (m W^2)`.
    pub fn free_mass_gain(&self, omega: f64) -> f64 {
        1.0 / (self.mass * omega * omega)
    }
}

pub(crate) fn omega(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz
}
