use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use optospring::chirp::{schedule_for_chirp, simulate, ChirpSpec, IntegratorConfig, RunKind, SimRun, StaticTracking};
use optospring::qnoise::{cavity_response, quantum_noise_asd, resonance_frequency, Regime};
use optospring::spectral::{spectrogram, StftParams};
use optospring::{rp_sql_ratio, sql_asd, Cavity, Detuning};
use serde::Serialize;

use super::Context;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured relative deviation.
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: deviation.is_finite() && deviation < tolerance,
            deviation,
            tolerance,
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: false,
            deviation: f64::NAN,
            tolerance,
        }
    }
}

fn adiabatic_spring(cav: &Cavity) -> Check {
    let name = "adiabatic spring Re K(kappa/1000) vs k_OS";
    let f = cav.kappa() / 1000.0 / (2.0 * std::f64::consts::PI);
    let lo = -5.0f64;
    let hi = Detuning::max_spring().value();
    let mut worst = 0.0f64;
    for i in 0..10 {
        let d = Detuning::new(lo + (hi - lo) * (i as f64 + 0.5) / 10.0).expect("finite");
        let Ok(resp) = cavity_response(cav, d, &[f]) else {
            return Check::failed(name, 0.01);
        };
        let k = cav.optical_spring_constant(d);
        worst = worst.max((resp.spring[0].re - k).abs() / k);
    }
    Check::new(name, worst, 0.01)
}

fn sub_sql_ratio(cav: &Cavity, delta: f64) -> Check {
    let name = format!("noise/SQL at the spring resonance vs sqrt(1/-delta), delta = {delta}");
    let result = (|| {
        let d = Detuning::new(delta)?;
        let f = resonance_frequency(cav, d)?;
        let spec = quantum_noise_asd(cav, d, &[f], Regime::FreeMass)?;
        let ratio = spec.total_asd[0] / sql_asd(cav.mass(), 2.0 * std::f64::consts::PI * f)?;
        let want = rp_sql_ratio(d)?;
        Ok::<f64, optospring::Error>((ratio - want).abs() / want)
    })();
    match result {
        Ok(dev) => Check::new(name, dev, 0.05),
        Err(_) => Check::failed(name, 0.05),
    }
}

fn parseval(cav: &Cavity, seed: u64) -> Check {
    let name = "Parseval on white noise";
    let result = (|| {
        let chirp = ChirpSpec {
            duration_s: 1.0,
            ..ChirpSpec::default()
        };
        let sched = schedule_for_chirp(cav, &chirp, &StaticTracking { target_hz: 70e3 }, 1e3)?;
        let run = SimRun {
            kind: RunKind::BackgroundStatic,
            seed,
            white_noise_asd: 1e-16,
            fs_hz: 500e3,
            duration_s: 1.0,
            integrator: IntegratorConfig {
                rp_noise: false,
                ..IntegratorConfig::default()
            },
        };
        let ts = simulate(cav, &sched, None, &run)?;
        let var = ts.samples.iter().map(|v| v * v).sum::<f64>() / ts.len() as f64;
        let sp = spectrogram(&ts, &StftParams::default())?;
        let df = sp.df();
        let mean = (0..sp.n_times()).map(|t| sp.row(t).iter().sum::<f64>() * df).sum::<f64>()
            / sp.n_times() as f64;
        Ok::<f64, optospring::Error>((mean / var - 1.0).abs())
    })();
    match result {
        Ok(dev) => Check::new(name, dev, 0.01),
        Err(_) => Check::failed(name, 0.01),
    }
}

fn sql_scaling(cav: &Cavity) -> Vec<Check> {
    let m = cav.mass();
    let w = 2.0 * std::f64::consts::PI * 1e5;
    let base = sql_asd(m, w).unwrap_or(f64::NAN);
    let omega = sql_asd(m, 2.0 * w).unwrap_or(f64::NAN) * 2.0 / base;
    let mass = sql_asd(4.0 * m, w).unwrap_or(f64::NAN) * 2.0 / base;
    vec![
        Check::new("SQL scales as 1/Omega", (omega - 1.0).abs(), 1e-12),
        Check::new("SQL scales as 1/sqrt(m)", (mass - 1.0).abs(), 1e-12),
    ]
}

fn spring_maximum(cav: &Cavity) -> Check {
    let n = 10_000;
    let best = (0..n)
        .map(|i| -10.0 + 10.0 * i as f64 / n as f64)
        .max_by(|a, b| {
            let ka = cav.optical_spring_constant(Detuning::new(*a).expect("finite"));
            let kb = cav.optical_spring_constant(Detuning::new(*b).expect("finite"));
            ka.total_cmp(&kb)
        })
        .expect("nonempty scan");
    let want = Detuning::max_spring().value();
    Check::new("k_OS maximum at delta = -1/sqrt(3)", (best - want).abs() / want.abs(), 2e-3)
}

/// The analytic cross-check suite.
pub fn checks(cav: &Cavity, seed: u64) -> Vec<Check> {
    let mut out = vec![adiabatic_spring(cav)];
    out.extend([-1.0, -2.0, -4.0].map(|d| sub_sql_ratio(cav, d)));
    out.push(parseval(cav, seed));
    out.extend(sql_scaling(cav));
    out.push(spring_maximum(cav));
    out
}

pub fn validate(ctx: &Context) -> Result<String, CliError> {
    let start = Instant::now();
    let results = checks(&ctx.cav, ctx.cfg.sim.seed);
    let mut out = OutputDir::create(&ctx.out)?;
    out.write_json("validate_report.json", &results)?;
    out.finish(
        "validate",
        &ctx.digest,
        BTreeMap::from([("master".to_string(), ctx.cfg.sim.seed)]),
        start.elapsed().as_secs_f64(),
    )?;
    let mut report = String::new();
    for c in &results {
        writeln!(
            report,
            "{} {}: deviation {:.3e} ({:.4}%), tolerance {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.deviation,
            100.0 * c.deviation,
            c.tolerance
        )
        .unwrap();
    }
    let passed = results.iter().filter(|c| c.passed).count();
    writeln!(report, "{passed}/{} checks passed", results.len()).unwrap();
    Ok(report)
}
