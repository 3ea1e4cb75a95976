//! Command-line front end: `sweep-noise`, `fds-compare`, `track` and `validate`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "optospring", version, about = "Optical-spring quantum-noise and chirp-tracking simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML configuration; defaults apply to anything missing.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sweep,
    Static,
    Both,
    StaticOnly,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Swept-spring noise envelope, SQL and on-resonance curves.
    SweepNoise {
        #[command(flatten)]
        common: Common,
        /// Overrides `sweep.detunings`.
        #[arg(long)]
        detunings: Option<usize>,
        /// Also write the full spectrum of every detuning.
        #[arg(long)]
        spectra: bool,
    },
    /// Frequency-dependent squeezing curves against the sweep envelope.
    FdsCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        detunings: Option<usize>,
    },
    /// Simulated chirp-tracking runs, SNR tracks and enhancement.
    Track {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
    },
    /// Analytic cross-checks with measured deviations.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::SweepNoise { common, .. }
            | Command::FdsCompare { common, .. }
            | Command::Track { common, .. }
            | Command::Validate { common } => common,
        }
    }
}

/// Runs one command; returns the text to print on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let common = cli.command.common().clone();
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Command::SweepNoise { detunings: Some(n), .. } | Command::FdsCompare { detunings: Some(n), .. } =
        &cli.command
    {
        cfg.sweep.detunings = *n;
    }
    let cav = cfg.validate()?;
    let ctx = commands::Context {
        digest: cfg.digest(),
        cfg,
        cav,
        out: common.out.clone(),
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.jobs {
        if n == 0 {
            return Err(CliError::Validation {
                field: "--jobs".into(),
                reason: "must be >= 1".into(),
            });
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Validation {
        field: "--jobs".into(),
        reason: e.to_string(),
    })?;

    pool.install(|| match &cli.command {
        Command::SweepNoise { spectra, .. } => commands::sweep_noise(&ctx, *spectra),
        Command::FdsCompare { .. } => commands::fds_compare(&ctx),
        Command::Track { mode, .. } => commands::track(&ctx, *mode),
        Command::Validate { .. } => commands::validate(&ctx),
    })
}
