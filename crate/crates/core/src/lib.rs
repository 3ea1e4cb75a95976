//! Detuned optomechanical cavity with a dynamically tuned optical spring.
//!
//! * [`cavity`]: closed-form static spring physics and the free-mass SQL.
//! * [`qnoise`]: quadrature quantum-noise spectra and the swept-spring envelope.
//! * [`fds`]: frequency-dependent squeezing comparator with optical loss.
//! * [`chirp`]: time-domain chirp-tracking experiment.
//! * [`spectral`]: spectrograms, SNR maps and sweep-vs-static enhancement.

pub mod cavity;
pub mod chirp;
pub mod constants;
pub mod error;
pub mod fds;
pub mod qnoise;
pub mod registry;
pub mod spectral;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use cavity::{rp_sql_ratio, sql_asd, Branch, Cavity, CavityConfig, Detuning};
pub use error::{Error, Result};
