use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use optospring::fds::loss_sweep_study;
use optospring::qnoise::{sql_curve, sweep_noise_envelope};
use serde::Serialize;

use super::{label, Context};
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Serialize)]
struct LossSummary {
    loss_ppm: f64,
    efficiency: f64,
    output_db: f64,
    file: String,
}

pub fn fds_compare(ctx: &Context) -> Result<String, CliError> {
    let start = Instant::now();
    let f = &ctx.cfg.fds;
    let sw = &ctx.cfg.sweep;
    let freqs = sw.freqs();
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("config.toml", ctx.cfg.to_toml().as_bytes())?;

    let study = loss_sweep_study(&ctx.cav, &f.map(), &f.losses_ppm, &f.power_grid(), &freqs)
        .map_err(CliError::stage("fds"))?;
    let mut summary = Vec::new();
    for lc in &study {
        let file = format!("fds/loss_{}ppm.csv", label(lc.loss_ppm));
        let c = &lc.curve;
        out.write_csv(
            &file,
            &["freq_hz", "asd", "power_at_min", "loss_ppm", "output_db"],
            (0..c.freqs_hz.len()).map(|i| vec![c.freqs_hz[i], c.asd[i], c.power_at_min[i], lc.loss_ppm, lc.output_db]),
        )?;
        summary.push(LossSummary {
            loss_ppm: lc.loss_ppm,
            efficiency: lc.efficiency,
            output_db: lc.output_db,
            file,
        });
    }
    out.write_json("fds/summary.json", &summary)?;

    let env = sweep_noise_envelope(&ctx.cav, sw.detunings, (sw.delta_start, sw.delta_end), &freqs)
        .map_err(CliError::stage("sweep"))?;
    let mut header = vec!["freq_hz".to_string(), "sweep_asd".to_string()];
    header.extend(study.iter().map(|lc| format!("fds_asd_{}ppm", label(lc.loss_ppm))));
    header.push("sql_asd".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::with_capacity(env.len());
    for e in &env.entries {
        let i = freqs
            .iter()
            .position(|&g| g == e.freq_hz)
            .expect("envelope frequencies are grid points");
        let mut row = vec![e.freq_hz, e.asd];
        row.extend(study.iter().map(|lc| lc.curve.asd[i]));
        row.push(sql_curve(ctx.cav.mass(), &[e.freq_hz]).map_err(CliError::stage("sql"))?[0]);
        rows.push(row);
    }
    out.write_csv("fds_comparison.csv", &header, rows)?;

    let manifest = out.finish("fds-compare", &ctx.digest, BTreeMap::new(), start.elapsed().as_secs_f64())?;
    let mut report = String::new();
    for s in &summary {
        writeln!(
            report,
            "loss {:>8} ppm  efficiency {:.4}  output squeezing {:.2} dB",
            label(s.loss_ppm),
            s.efficiency,
            s.output_db
        )
        .unwrap();
    }
    writeln!(report, "{} files in {}, config digest {}", manifest.outputs.len(), ctx.out.display(), manifest.config_digest).unwrap();
    Ok(report)
}
