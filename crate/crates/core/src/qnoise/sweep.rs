use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantum_noise_asd, Regime};
use crate::cavity::{Cavity, Detuning};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeEntry {
    pub detuning: f64,
    pub freq_hz: f64,
    pub asd: f64,
}

/// Minimum free-mass noise per swept detuning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepEnvelope {
    pub entries: Vec<EnvelopeEntry>,
}

impl SweepEnvelope {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sweeps `n` detunings uniformly over `range` and records where each free-mass
/// spectrum reaches its minimum on `freqs`.
pub fn sweep_noise_envelope(
    cav: &Cavity,
    n: usize,
    range: (f64, f64),
    freqs: &[f64],
) -> Result<SweepEnvelope> {
    if n < 2 {
        return Err(Error::invalid("detunings", format!("need at least 2, got {n}")));
    }
    let (start, end) = range;
    if !(start < end && end < 0.0) {
        return Err(Error::invalid(
            "delta_range",
            format!("need start < end < 0, got [{start}, {end}]"),
        ));
    }
    let entries = (0..n)
        .into_par_iter()
        .map(|i| {
            let delta = if i == n - 1 {
                end
            } else {
                start + (end - start) * i as f64 / (n - 1) as f64
            };
            let spec = quantum_noise_asd(cav, Detuning::new(delta)?, freqs, Regime::FreeMass)?;
            let (idx, asd) = spec.minimum();
            Ok(EnvelopeEntry {
                detuning: delta,
                freq_hz: freqs[idx],
                asd,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepEnvelope { entries })
}
