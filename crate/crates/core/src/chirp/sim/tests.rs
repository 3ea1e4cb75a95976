use super::*;
use crate::cavity::CavityConfig;
use crate::chirp::schedule::{StaticTracking, SweepTracking};

fn cav() -> Cavity {
    CavityConfig::default().validate().unwrap()
}

fn tone(f: f64, duration_s: f64) -> ChirpSpec {
    ChirpSpec {
        f_start_hz: f,
        f_end_hz: f * (1.0 + 1e-12),
        duration_s,
        amplitude: 5e-14,
    }
}

fn run(kind: RunKind, seed: u64, white: f64, duration_s: f64, integ: IntegratorConfig) -> SimRun {
    SimRun {
        kind,
        seed,
        white_noise_asd: white,
        fs_hz: 500e3,
        duration_s,
        integrator: integ,
    }
}

fn quiet() -> IntegratorConfig {
    IntegratorConfig {
        rp_noise: false,
        ..IntegratorConfig::default()
    }
}

fn static_schedule(cav: &Cavity, chirp: &ChirpSpec) -> DetuningSchedule {
    schedule_for_chirp(cav, chirp, &StaticTracking { target_hz: 70e3 }, 1e3).unwrap()
}

fn rms(s: &[f64]) -> f64 {
    (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
}

#[test]
fn fir_response() {
    let h = lowpass_fir(97, 0.35 / 4.0);
    assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    for k in 0..h.len() {
        assert_eq!(h[k], h[h.len() - 1 - k]);
    }
    let gain = |f: f64| {
        let w = 2.0 * PI * f / 2e6;
        let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, c)| {
            (re + c * (w * k as f64).cos(), im - c * (w * k as f64).sin())
        });
        f64::hypot(re, im)
    };
    for f in [1e3, 40e3, 70e3, 100e3] {
        assert!((gain(f) - 1.0).abs() < 0.01, "{f}: {}", gain(f));
    }
    for k in 0..100 {
        let f = 260e3 + k as f64 * 7.4e3;
        assert!(gain(f) < 1e-3, "{f}: {}", gain(f));
    }
}

#[test]
fn silent_system_stays_at_rest() {
    let cav = cav();
    let chirp = tone(70e3, 0.02);
    let s = static_schedule(&cav, &chirp);
    let ts = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 1, 0.0, 0.02, quiet())).unwrap();
    assert_eq!(ts.len(), 10_000);
    assert!(ts.samples.iter().all(|&v| v == 0.0));
}

#[test]
fn same_seed_is_bit_identical() {
    let cav = cav();
    let chirp = tone(70e3, 0.01);
    let s = static_schedule(&cav, &chirp);
    let r = run(RunKind::SignalStatic, 42, 1e-16, 0.01, IntegratorConfig::default());
    let a = simulate(&cav, &s, Some(&chirp), &r).unwrap();
    let b = simulate(&cav, &s, Some(&chirp), &r).unwrap();
    assert_eq!(a.to_le_bytes(), b.to_le_bytes());
    let c = simulate(&cav, &s, Some(&chirp), &SimRun { seed: 43, ..r }).unwrap();
    assert_ne!(a.samples, c.samples);
    assert_eq!(a.provenance.seed, Some(42));
    assert_eq!(a.provenance.schedule_digest, Some(s.digest()));
}

#[test]
fn signal_minus_background_is_deterministic_response() {
    let cav = cav();
    let chirp = ChirpSpec {
        f_start_hz: 69e3,
        f_end_hz: 71e3,
        duration_s: 0.05,
        amplitude: 5e-14,
    };
    let s = static_schedule(&cav, &chirp);
    let integ = IntegratorConfig::default();
    let sig = simulate(&cav, &s, Some(&chirp), &run(RunKind::SignalStatic, 7, 1e-16, 0.05, integ)).unwrap();
    let bg = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 7, 1e-16, 0.05, integ)).unwrap();
    let clean = simulate(&cav, &s, Some(&chirp), &run(RunKind::SignalStatic, 99, 0.0, 0.05, quiet())).unwrap();
    let scale = clean.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.0);
    for i in 0..sig.len() {
        let diff = sig.samples[i] - bg.samples[i];
        assert!((diff - clean.samples[i]).abs() < 1e-9 * scale, "{i}");
    }
}

#[test]
fn resonance_amplifies_probe_tone() {
    let cav = cav();
    let dur = 0.02;
    let amp = |f: f64| {
        let c = tone(f, dur);
        let s = static_schedule(&cav, &c);
        let ts = simulate(&cav, &s, Some(&c), &run(RunKind::SignalStatic, 0, 0.0, dur, quiet())).unwrap();
        rms(&ts.samples[ts.len() / 2..])
    };
    let on = amp(70e3);
    for off in [56e3, 84e3] {
        let ratio = on / amp(off);
        assert!(ratio > 3.0, "{off}: {ratio}");
    }
}

#[test]
fn radiation_pressure_variance_matches_oscillator_formula() {
    let cav = cav();
    let dur = 1.0;
    let chirp = tone(70e3, dur);
    let s = static_schedule(&cav, &chirp);
    let integ = IntegratorConfig::default();
    let ts = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 5, 0.0, dur, integ)).unwrap();
    let sd = spring_dynamics(&cav, s.samples[0]).unwrap();
    let gamma = sd.omega / 100.0;
    // <x^2> = S_F / (4 m^2 Gamma w0^2) for a one-sided force PSD.
    let expected = sd.force_psd / (4.0 * cav.mass().powi(2) * gamma * sd.omega.powi(2));
    let measured = rms(&ts.samples[ts.len() / 10..]).powi(2);
    assert!((measured / expected - 1.0).abs() < 0.1, "{measured} vs {expected}");
}

#[test]
fn sensing_noise_level() {
    let cav = cav();
    let chirp = tone(70e3, 0.2);
    let s = static_schedule(&cav, &chirp);
    let w = 2e-16;
    let ts = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 11, w, 0.2, quiet())).unwrap();
    let var = rms(&ts.samples).powi(2);
    let expected = w * w * 500e3 / 2.0;
    assert!((var / expected - 1.0).abs() < 0.02);
}

#[test]
fn background_peaks_at_spring_frequency() {
    let cav = cav();
    let dur = 0.2;
    let chirp = tone(70e3, dur);
    let s = static_schedule(&cav, &chirp);
    let ts = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 3, 1e-16, dur, IntegratorConfig::default())).unwrap();
    let power = |f: f64| {
        let w = 2.0 * PI * f / ts.fs_hz;
        let (re, im) = ts.samples.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, x)| {
            (re + x * (w * k as f64).cos(), im + x * (w * k as f64).sin())
        });
        re * re + im * im
    };
    // Average 200 Hz around each probe to tame the periodogram scatter.
    let band = |f: f64| (-10..=10).map(|k| power(f + 20.0 * k as f64)).sum::<f64>();
    let probes: Vec<f64> = (0..21).map(|k| 50e3 + 2e3 * k as f64).collect();
    let best = probes
        .iter()
        .copied()
        .max_by(|a, b| band(*a).total_cmp(&band(*b)))
        .unwrap();
    assert_eq!(best, 70e3);
}

#[test]
fn halving_control_block_barely_changes_output() {
    let cav = cav();
    let chirp = ChirpSpec {
        f_start_hz: 60e3,
        f_end_hz: 63e3,
        duration_s: 0.5,
        amplitude: 5e-14,
    };
    let base = IntegratorConfig::default();
    let out = |block: f64| {
        let s = schedule_for_chirp(&cav, &chirp, &SweepTracking, 1.0 / block).unwrap();
        let integ = IntegratorConfig {
            control_block_s: block,
            ..base
        };
        let ts = simulate(&cav, &s, Some(&chirp), &run(RunKind::SignalSweep, 8, 1e-16, 0.5, integ)).unwrap();
        rms(&ts.samples)
    };
    let (a, b) = (out(1e-3), out(0.5e-3));
    assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
}

#[test]
fn open_loop_spring_is_unstable() {
    let cav = cav();
    let chirp = tone(70e3, 0.01);
    let s = static_schedule(&cav, &chirp);
    let integ = IntegratorConfig {
        q_target: None,
        ..IntegratorConfig::default()
    };
    let err = simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 1, 0.0, 0.01, integ)).unwrap_err();
    assert!(matches!(err, Error::Unstable(_)));
    assert!(err.is_infeasible());
}

#[test]
fn feedback_keeps_every_block_damped() {
    let cav = cav();
    let chirp = ChirpSpec::default();
    let s = schedule_for_chirp(&cav, &chirp, &SweepTracking, 1e3).unwrap();
    let integ = IntegratorConfig::default();
    for (k, d) in s.samples.iter().enumerate().step_by(97) {
        let b = block_params(&cav, *d, &integ, 2e6).unwrap();
        assert!(b.damping > 0.0, "{k}");
        let q = b.omega_sq.sqrt() / b.damping;
        assert!(q <= 100.0 + 1e-9);
    }
}

#[test]
fn run_consistency_checks() {
    let cav = cav();
    let chirp = tone(70e3, 0.01);
    let s = static_schedule(&cav, &chirp);
    let integ = quiet();
    assert!(simulate(&cav, &s, Some(&chirp), &run(RunKind::BackgroundStatic, 1, 0.0, 0.01, integ)).is_err());
    assert!(simulate(&cav, &s, None, &run(RunKind::SignalStatic, 1, 0.0, 0.01, integ)).is_err());
    assert!(simulate(&cav, &s, None, &run(RunKind::BackgroundSweep, 1, 0.0, 0.01, integ)).is_err());
    assert!(simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 1, 0.0, 0.02, integ)).is_err());
    assert!(simulate(&cav, &s, None, &run(RunKind::BackgroundStatic, 1, -1.0, 0.01, integ)).is_err());
}

#[test]
fn seeds_pair_by_mode() {
    let seeds = RunSeeds::from_master(2024);
    assert_eq!(seeds.for_kind(RunKind::SignalSweep), seeds.for_kind(RunKind::BackgroundSweep));
    assert_eq!(seeds.for_kind(RunKind::SignalStatic), seeds.for_kind(RunKind::BackgroundStatic));
    assert_ne!(seeds.sweep, seeds.static_mode);
    assert_eq!(seeds, RunSeeds::from_master(2024));
}

#[test]
fn default_white_noise_is_above_quantum_floor() {
    let cav = cav();
    let w = default_white_noise_asd(&cav, 70e3).unwrap();
    assert!(w > 1e-18 && w < 1e-14, "{w}");
}

#[test]
fn short_experiment_shares_digests_within_mode() {
    let cav = cav();
    let chirp = ChirpSpec {
        f_start_hz: 60e3,
        f_end_hz: 60.6e3,
        duration_s: 0.1,
        amplitude: 5e-14,
    };
    let params = SimParams {
        duration_s: 0.1,
        ..SimParams::default()
    };
    let exp = run_four_experiments(&cav, &chirp, &params, RunSeeds::from_master(1)).unwrap();
    assert_eq!(exp.runs.len(), 4);
    let digest = |k| exp.get(k).unwrap().provenance.schedule_digest.clone().unwrap();
    assert_eq!(digest(RunKind::SignalSweep), digest(RunKind::BackgroundSweep));
    assert_eq!(digest(RunKind::SignalStatic), digest(RunKind::BackgroundStatic));
    assert_ne!(digest(RunKind::SignalSweep), digest(RunKind::SignalStatic));
    for ts in exp.runs.values() {
        assert_eq!(ts.len(), 50_000);
    }
    let again = run_four_experiments(&cav, &chirp, &params, RunSeeds::from_master(1)).unwrap();
    for k in RunKind::ALL {
        assert_eq!(exp.get(k).unwrap().samples, again.get(k).unwrap().samples);
    }
    assert!(run_experiments(&cav, &chirp, &params, RunSeeds::from_master(1), &[]).is_err());
    let static_only = run_experiments(
        &cav,
        &chirp,
        &params,
        RunSeeds::from_master(1),
        &[RunKind::BackgroundStatic, RunKind::SignalStatic],
    )
    .unwrap();
    assert_eq!(static_only.schedules.len(), 1);
}
