mod fds;
mod sweep;
mod track;
mod validate;

use std::path::PathBuf;

use optospring::Cavity;

use crate::config::RunConfig;

pub use fds::fds_compare;
pub use sweep::sweep_noise;
pub use track::track;
pub use validate::{checks, validate, Check};

/// Validated inputs shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub cav: Cavity,
    pub digest: String,
    pub out: PathBuf,
}

/// File-name form of a number: integers without a fraction.
fn label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}
