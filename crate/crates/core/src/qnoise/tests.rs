use std::f64::consts::PI;

use super::*;
use crate::cavity::{rp_sql_ratio, CavityConfig};

fn cav() -> Cavity {
    CavityConfig::default().validate().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn interior_detunings(n: usize) -> Vec<f64> {
    let (a, b) = (-5.0, -1.0 / 3f64.sqrt());
    (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
}

#[test]
fn adiabatic_spring_matches_static_formula() {
    let cav = cav();
    let f = cav.kappa() / 1000.0 / (2.0 * PI);
    for delta in interior_detunings(10) {
        let d = Detuning::new(delta).unwrap();
        let resp = cavity_response(&cav, d, &[f]).unwrap();
        let k = resp.spring[0];
        let k_os = cav.optical_spring_constant(d);
        assert!(rel(k.re, k_os) < 0.01, "delta {delta}: {} vs {k_os}", k.re);
    }
}

#[test]
fn no_spring_on_resonance() {
    let cav = cav();
    let resp = cavity_response(&cav, Detuning::on_resonance(), &default_grid()).unwrap();
    assert!(resp.spring.iter().all(|k| k.norm() == 0.0));
}

#[test]
fn optical_damping_is_negative_and_matches_expansion() {
    let cav = cav();
    let gamma = cav.half_linewidth();
    for delta in [-4.0, -1.0, -0.6] {
        let d = Detuning::new(delta).unwrap();
        let grid = log_grid(10.0, 5e5, 50);
        let resp = cavity_response(&cav, d, &grid).unwrap();
        assert!(resp.spring.iter().all(|k| k.im < 0.0));
        // Im K ~ -2 K0 gamma W / (gamma^2 + D^2) for W << gamma.
        let w = 2.0 * PI * grid[0];
        let k0 = cav.optical_spring_constant(d);
        let dd = delta * gamma;
        let expected = -2.0 * k0 * gamma * w / (gamma * gamma + dd * dd);
        assert!(rel(resp.spring[0].im, expected) < 1e-6);
        // Vanishes as W -> 0.
        assert!(resp.spring[0].im.abs() < 1e-4 * resp.spring[0].re);
    }
}

#[test]
fn response_is_continuous_and_consistent() {
    let cav = cav();
    let d = Detuning::new(-2.0).unwrap();
    let grid = log_grid(1e3, 1e6, 4000);
    let resp = cavity_response(&cav, d, &grid).unwrap();
    for w in resp.field.windows(2) {
        for q in 0..2 {
            for r in 0..2 {
                let (a, b) = (w[0][q][r], w[1][q][r]);
                assert!((a - b).norm() < 0.2 * (a.norm() + b.norm()) + 1e-3);
            }
        }
    }
    // The closed loop decomposes into direct path plus displacement path.
    let i = 1234;
    let x = resp.to_displacement[i][1];
    let direct_plus_motion = resp.field[i][0][1] - resp.displacement_to_output[i][0] * x;
    let model = Model::three_port(&cav, d);
    let p = model.point(omega(grid[i]));
    assert!((direct_plus_motion - p.direct[0][1][0]).norm() < 1e-12);
}

#[test]
fn grid_validation() {
    let cav = cav();
    let d = Detuning::new(-1.0).unwrap();
    assert!(matches!(cavity_response(&cav, d, &[]), Err(Error::Grid(_))));
    assert!(matches!(cavity_response(&cav, d, &[2.0, 1.0]), Err(Error::Grid(_))));
    assert!(matches!(cavity_response(&cav, d, &[0.0, 1.0]), Err(Error::Grid(_))));
    let limit = cav.constants().c / (4.0 * cav.config().length_m);
    assert!(matches!(cavity_response(&cav, d, &[1e3, limit * 1.01]), Err(Error::Grid(_))));
    assert!(quantum_noise_asd(&cav, d, &[], Regime::FreeMass).is_err());
}

#[test]
fn on_resonance_shot_noise_matches_closed_form() {
    let cav = cav();
    let grid = log_grid(1e3, 3e6, 300);
    let spec = quantum_noise_asd(&cav, Detuning::on_resonance(), &grid, Regime::AsMeasured).unwrap();
    let gamma = cav.half_linewidth();
    let g_in = cav.constants().c * cav.t_input() / (4.0 * cav.config().length_m);
    let consts = cav.constants();
    let w0 = cav.laser_angular_freq();
    let length = cav.config().length_m;
    let photons = cav.peak_power() * 2.0 * length / (consts.hbar * w0 * consts.c);
    let coupling = w0 / length;
    let shot = spec.component(NoiseSource::Shot).unwrap();
    for (i, &f) in grid.iter().enumerate() {
        let w = 2.0 * PI * f;
        let oracle = (gamma * gamma + w * w).sqrt() / (2.0 * g_in.sqrt() * coupling * photons.sqrt());
        assert!(rel(shot[i], oracle) < 1e-9, "{f} Hz: {} vs {oracle}", shot[i]);
    }
}

#[test]
fn detuned_free_mass_noise_flattens_to_shot_floor() {
    let cav = cav();
    let d = Detuning::new(-4.0).unwrap();
    let grid = log_grid(2e5, 4e5, 20);
    let fm = quantum_noise_asd(&cav, d, &grid, Regime::FreeMass).unwrap();
    let am = quantum_noise_asd(&cav, d, &grid, Regime::AsMeasured).unwrap();
    let shot = am.component(NoiseSource::Shot).unwrap();
    // Well above f_OS = 24 kHz the spring no longer matters and shot noise dominates.
    for i in 0..grid.len() {
        assert!(rel(fm.total_asd[i], shot[i]) < 0.03, "{}", grid[i]);
    }
    let spread = shot.iter().cloned().fold(f64::MIN, f64::max) / shot.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1.05);
}

#[test]
fn sub_sql_ratio_at_spring_resonance() {
    let cav = cav();
    for delta in [-1.0, -2.0, -4.0] {
        let d = Detuning::new(delta).unwrap();
        let f = resonance_frequency(&cav, d).unwrap();
        let spec = quantum_noise_asd(&cav, d, &[f], Regime::FreeMass).unwrap();
        let ratio = spec.total_asd[0] / sql_asd(cav.mass(), 2.0 * PI * f).unwrap();
        let expected = rp_sql_ratio(d).unwrap();
        assert!(rel(ratio, expected) < 0.05, "delta {delta}: {ratio} vs {expected}");
    }
}

#[test]
fn power_scaling_of_components() {
    let cav = cav();
    let doubled = cav.with_input_power(2.0 * cav.config().input_power_w).unwrap();
    let grid = log_grid(2e3, 5e5, 40);
    let d0 = Detuning::on_resonance();
    for regime in [Regime::AsMeasured, Regime::FreeMass] {
        let a = quantum_noise_asd(&cav, d0, &grid, regime).unwrap();
        let b = quantum_noise_asd(&doubled, d0, &grid, regime).unwrap();
        for i in 0..grid.len() {
            let (sa, sb) = (a.component(NoiseSource::Shot).unwrap()[i], b.component(NoiseSource::Shot).unwrap()[i]);
            let (ra, rb) = (
                a.component(NoiseSource::RadiationPressure).unwrap()[i],
                b.component(NoiseSource::RadiationPressure).unwrap()[i],
            );
            assert!(rel(sb, sa / 2f64.sqrt()) < 1e-9);
            assert!(rel(rb, ra * 2f64.sqrt()) < 1e-9);
        }
    }
    // Detuned: the free-mass radiation-pressure term still scales as sqrt(P).
    let d = Detuning::new(-2.0).unwrap();
    let a = quantum_noise_asd(&cav, d, &grid, Regime::FreeMass).unwrap();
    let b = quantum_noise_asd(&doubled, d, &grid, Regime::FreeMass).unwrap();
    let (ra, rb) = (
        a.component(NoiseSource::RadiationPressure).unwrap(),
        b.component(NoiseSource::RadiationPressure).unwrap(),
    );
    for i in 0..grid.len() {
        assert!(rel(rb[i], ra[i] * 2f64.sqrt()) < 1e-9);
    }
}

#[test]
fn analytic_radiation_pressure_curve() {
    let cav = cav();
    let d = Detuning::new(-1.0).unwrap();
    let f = 1e4;
    let spec = radiation_pressure_asd(&cav, d, &[f, 2.0 * f]).unwrap();
    assert!(rel(spec.total_asd[1], spec.total_asd[0] / 4.0) < 1e-14);

    // Hand evaluation at delta = -1, 10 kHz.
    let c = 299_792_458.0;
    let h = 6.626_070_15e-34;
    let p0 = 4.0 * 50e-6 * 0.5e-3 / (720e-6f64).powi(2);
    let pc = p0 / 2.0;
    let force = 2.0 * pc / c * (8.0 * h * (c / 1064e-9) / (pc * 720e-6 * 2.0)).sqrt();
    let w = 2.0 * PI * f;
    let hand = force / (50e-12 * w * w);
    assert!(rel(spec.total_asd[0], hand) < 1e-12);
    assert!(rel(spec.total_asd[0], 3.380_363_137e-16) < 1e-9, "{:e}", spec.total_asd[0]);

    assert!(radiation_pressure_asd(&cav, d, &[0.0]).is_err());
}

#[test]
fn analytic_radiation_pressure_ratio_to_sql() {
    let cav = cav();
    for delta in [-0.8, -1.0, -2.5, -4.0] {
        let d = Detuning::new(delta).unwrap();
        // Ratio is exact with the k_m << k_OS approximation of the resonance.
        let w = (cav.optical_spring_constant(d) / cav.mass()).sqrt();
        let spec = radiation_pressure_asd(&cav, d, &[w / (2.0 * PI)]).unwrap();
        let ratio = spec.total_asd[0] / sql_asd(cav.mass(), w).unwrap();
        assert!(rel(ratio, rp_sql_ratio(d).unwrap()) < 1e-12);
    }
}

#[test]
fn model_agrees_with_analytic_radiation_pressure() {
    let cav = cav();
    let grid = log_grid(1e3, 2e4, 60);
    // On resonance radiation pressure dominates far below the ~150 kHz crossover.
    let d0 = Detuning::on_resonance();
    let model = quantum_noise_asd(&cav, d0, &grid, Regime::FreeMass).unwrap();
    let analytic = radiation_pressure_asd(&cav, d0, &grid).unwrap();
    for i in 0..grid.len() {
        assert!(rel(model.total_asd[i], analytic.total_asd[i]) < 0.02);
    }
    // Detuned: the radiation-pressure component agrees while W << kappa.
    let grid = log_grid(1e3, 5e4, 60);
    for delta in [-1.0, -2.0, -4.0] {
        let d = Detuning::new(delta).unwrap();
        let model = quantum_noise_asd(&cav, d, &grid, Regime::FreeMass).unwrap();
        let analytic = radiation_pressure_asd(&cav, d, &grid).unwrap();
        let rp = model.component(NoiseSource::RadiationPressure).unwrap();
        for i in 0..grid.len() {
            assert!(rel(rp[i], analytic.total_asd[i]) < 0.02, "delta {delta} at {}", grid[i]);
        }
    }
}

#[test]
fn spectra_satisfy_invariants() {
    let cav = cav();
    for delta in [0.0, -0.6, -1.0, -3.0, -5.0] {
        let d = Detuning::new(delta).unwrap();
        for regime in [Regime::AsMeasured, Regime::FreeMass] {
            let spec = quantum_noise_asd(&cav, d, &default_grid(), regime).unwrap();
            spec.check().unwrap();
        }
    }
}

#[test]
fn q_os_limits() {
    let cav = cav();
    for delta in interior_detunings(12) {
        let q = q_os(&cav, Detuning::new(delta).unwrap()).unwrap();
        assert!(q.is_finite() && q > 0.0);
    }
    assert!(q_os(&cav, Detuning::on_resonance()).is_err());
    assert!(q_os(&cav, Detuning::new(0.3).unwrap()).is_err());

    // Faster cavity, same spring: shorter cavity leaves k_OS unchanged.
    let d = Detuning::new(-2.0).unwrap();
    let short = CavityConfig {
        length_m: 0.001,
        ..cav.config().clone()
    }
    .validate()
    .unwrap();
    assert_eq!(short.optical_spring_constant(d), cav.optical_spring_constant(d));
    assert!(q_os(&short, d).unwrap() > 5.0 * q_os(&cav, d).unwrap());

    // Vanishing optical power leaves the bare mechanical resonator.
    let dark = cav.with_input_power(1e-15).unwrap();
    let q = q_os(&dark, d).unwrap();
    assert!(rel(q, 25_000.0) < 1e-3, "{q}");
}

#[test]
fn resonance_frequency_close_to_static_estimate() {
    let cav = cav();
    for delta in [-4.0, -1.0] {
        let d = Detuning::new(delta).unwrap();
        let dynamic = resonance_frequency(&cav, d).unwrap();
        let stat = cav.os_frequency(d).unwrap();
        // Re K(W) rises above K0 for |delta| > sqrt(3) and falls below it otherwise.
        assert!(rel(dynamic, stat) < 0.01);
        assert_eq!(dynamic < stat, delta.abs() < 3f64.sqrt());
    }
}

#[test]
fn spring_dynamics_uses_static_stiffness() {
    let cav = cav();
    let d = Detuning::new(-1.5).unwrap();
    let sd = spring_dynamics(&cav, d).unwrap();
    assert!(rel(sd.omega / (2.0 * PI), cav.os_frequency(d).unwrap()) < 1e-14);
    assert!(sd.optical_damping < 0.0);
    // Low-frequency force noise: 32 h f P_c / (c^2 T (1 + delta^2)).
    let c = cav.constants().c;
    let pc = cav.circulating_power(d);
    let f_laser = cav.config().laser_freq_hz;
    let s_f = 32.0 * cav.constants().h * f_laser * pc / (c * c * cav.t_total() * (1.0 + 2.25));
    assert!(rel(sd.force_psd, s_f) < 0.01);
    assert!(spring_dynamics(&cav, Detuning::new(2.0).unwrap()).is_err());
}

mod envelope {
    use super::*;

    #[test]
    fn two_detunings_are_the_endpoints() {
        let cav = cav();
        let env = sweep_noise_envelope(&cav, 2, (-5.0, -1.0 / 3f64.sqrt()), &default_grid()).unwrap();
        assert_eq!(env.len(), 2);
        assert_eq!(env.entries[0].detuning, -5.0);
        assert_eq!(env.entries[1].detuning, -1.0 / 3f64.sqrt());
        assert!(sweep_noise_envelope(&cav, 1, (-5.0, -1.0), &default_grid()).is_err());
        assert!(sweep_noise_envelope(&cav, 4, (-1.0, -5.0), &default_grid()).is_err());
    }

    #[test]
    fn properties_of_a_coarse_sweep() {
        let cav = cav();
        let grid = default_grid();
        let env = sweep_noise_envelope(&cav, 25, (-5.0, -1.0 / 3f64.sqrt()), &grid).unwrap();
        let on_res = quantum_noise_asd(&cav, Detuning::on_resonance(), &grid, Regime::FreeMass).unwrap();
        let mut last_f = 0.0;
        for e in &env.entries {
            let d = Detuning::new(e.detuning).unwrap();
            let sql = sql_asd(cav.mass(), 2.0 * PI * e.freq_hz).unwrap();
            if e.freq_hz < 1e5 {
                assert!(e.asd < sql, "delta {}: {} >= {sql}", e.detuning, e.asd);
            }
            let idx = grid.iter().position(|&f| f == e.freq_hz).unwrap();
            assert!(e.asd < on_res.total_asd[idx]);
            assert!(e.freq_hz > last_f);
            last_f = e.freq_hz;
            if q_os(&cav, d).unwrap() > 10.0 {
                assert!(rel(e.asd / sql, rp_sql_ratio(d).unwrap()) < 0.05);
            }
        }
    }

    #[test]
    fn minimum_is_stable_under_grid_refinement() {
        let cav = cav();
        let coarse = log_grid(1e3, 1e6, 2000);
        let fine = log_grid(1e3, 1e6, 3999);
        for delta in [-5.0, -3.0, -1.5, -1.0, -0.6] {
            let d = Detuning::new(delta).unwrap();
            let a = quantum_noise_asd(&cav, d, &coarse, Regime::FreeMass).unwrap().minimum().1;
            let b = quantum_noise_asd(&cav, d, &fine, Regime::FreeMass).unwrap().minimum().1;
            assert!(rel(a, b) < 0.005, "delta {delta}: {a} vs {b}");
        }
    }

    #[test]
    fn order_independent_evaluation() {
        let cav = cav();
        let grid = log_grid(1e4, 2e5, 300);
        let a = sweep_noise_envelope(&cav, 8, (-5.0, -0.6), &grid).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| sweep_noise_envelope(&cav, 8, (-5.0, -0.6), &grid).unwrap());
        assert_eq!(a, b);
    }
}
