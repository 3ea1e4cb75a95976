use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use optospring::qnoise::{quantum_noise_asd, sql_curve, sweep_noise_envelope, NoiseSource, NoiseSpectrum, Regime};
use optospring::Detuning;

use super::Context;
use crate::error::CliError;
use crate::output::OutputDir;

pub(super) const SPECTRUM_HEADER: [&str; 4] = ["freq_hz", "asd_total", "asd_shot", "asd_rp"];

pub(super) fn spectrum_rows(spec: &NoiseSpectrum) -> Vec<Vec<f64>> {
    let shot = spec.component(NoiseSource::Shot).expect("shot component");
    let rp = spec.component(NoiseSource::RadiationPressure).expect("rp component");
    (0..spec.freqs_hz.len())
        .map(|i| vec![spec.freqs_hz[i], spec.total_asd[i], shot[i], rp[i]])
        .collect()
}

pub fn sweep_noise(ctx: &Context, spectra: bool) -> Result<String, CliError> {
    let start = Instant::now();
    let sw = &ctx.cfg.sweep;
    let freqs = sw.freqs();
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("config.toml", ctx.cfg.to_toml().as_bytes())?;

    let env = sweep_noise_envelope(&ctx.cav, sw.detunings, (sw.delta_start, sw.delta_end), &freqs)
        .map_err(CliError::stage("sweep"))?;
    let mass = ctx.cav.mass();
    let env_freqs: Vec<f64> = env.entries.iter().map(|e| e.freq_hz).collect();
    let env_sql = sql_curve(mass, &env_freqs).map_err(CliError::stage("sql"))?;
    let rows: Vec<Vec<f64>> = env
        .entries
        .iter()
        .zip(&env_sql)
        .map(|(e, s)| vec![e.detuning, e.freq_hz, e.asd, *s, e.asd / s])
        .collect();
    let below = rows.iter().filter(|r| r[4] < 1.0).count();
    out.write_csv(
        "sweep_envelope.csv",
        &["detuning", "freq_hz", "asd_total", "sql_asd", "ratio_to_sql"],
        rows,
    )?;

    let sql = sql_curve(mass, &freqs).map_err(CliError::stage("sql"))?;
    out.write_csv(
        "sql.csv",
        &["freq_hz", "sql_asd"],
        freqs.iter().zip(&sql).map(|(f, s)| vec![*f, *s]),
    )?;

    let on_res = quantum_noise_asd(&ctx.cav, Detuning::on_resonance(), &freqs, Regime::FreeMass)
        .map_err(CliError::stage("on-resonance"))?;
    out.write_csv("on_resonance.csv", &SPECTRUM_HEADER, spectrum_rows(&on_res))?;

    if spectra {
        for (i, e) in env.entries.iter().enumerate() {
            let d = Detuning::new(e.detuning).map_err(CliError::stage("spectra"))?;
            let spec = quantum_noise_asd(&ctx.cav, d, &freqs, Regime::FreeMass)
                .map_err(CliError::stage("spectra"))?;
            out.write_csv(&format!("spectra/detuning_{i:03}.csv"), &SPECTRUM_HEADER, spectrum_rows(&spec))?;
        }
    }

    let n_files = out.outputs().len();
    let manifest = out.finish("sweep-noise", &ctx.digest, BTreeMap::new(), start.elapsed().as_secs_f64())?;
    let mut report = String::new();
    writeln!(
        report,
        "sweep-noise: {} detunings, {} below the SQL, {n_files} files in {}",
        env.len(),
        below,
        ctx.out.display()
    )
    .unwrap();
    writeln!(report, "config digest {}", manifest.config_digest).unwrap();
    Ok(report)
}
