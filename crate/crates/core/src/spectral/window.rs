use std::f64::consts::PI;
use std::sync::Arc;

use crate::registry::Registry;

/// STFT taper, periodic form (suited to overlapping spectral analysis).
pub trait WindowFunction: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;
    fn coefficients(&self, len: usize) -> Vec<f64>;
}

fn cosine_sum(len: usize, a: &[f64]) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let x = 2.0 * PI * k as f64 / len as f64;
            a.iter()
                .enumerate()
                .map(|(m, c)| if m % 2 == 0 { 1.0 } else { -1.0 } * c * (m as f64 * x).cos())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hann;

impl WindowFunction for Hann {
    fn name(&self) -> &str {
        "hann"
    }

    fn coefficients(&self, len: usize) -> Vec<f64> {
        cosine_sum(len, &[0.5, 0.5])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hamming;

impl WindowFunction for Hamming {
    fn name(&self) -> &str {
        "hamming"
    }

    fn coefficients(&self, len: usize) -> Vec<f64> {
        cosine_sum(len, &[0.54, 0.46])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Blackman;

impl WindowFunction for Blackman {
    fn name(&self) -> &str {
        "blackman"
    }

    fn coefficients(&self, len: usize) -> Vec<f64> {
        cosine_sum(len, &[0.42, 0.5, 0.08])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Rectangular;

impl WindowFunction for Rectangular {
    fn name(&self) -> &str {
        "rectangular"
    }

    fn coefficients(&self, len: usize) -> Vec<f64> {
        vec![1.0; len]
    }
}

pub fn windows() -> Registry<dyn WindowFunction> {
    let mut reg: Registry<dyn WindowFunction> = Registry::new("window function");
    reg.register("hann", Arc::new(Hann))
        .register("hamming", Arc::new(Hamming))
        .register("blackman", Arc::new(Blackman))
        .register("rectangular", Arc::new(Rectangular));
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_shape() {
        let w = Hann.coefficients(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[2] - 0.5).abs() < 1e-15);
        // Periodic Hann: power sum is exactly 3/8 of the length.
        let w = Hann.coefficients(4096);
        let p: f64 = w.iter().map(|v| v * v).sum();
        assert!((p / 4096.0 - 0.375).abs() < 1e-12);
    }

    #[test]
    fn registry_names() {
        let reg = windows();
        assert_eq!(reg.names(), vec!["blackman", "hamming", "hann", "rectangular"]);
        for name in reg.names() {
            assert_eq!(reg.get(&name).unwrap().name(), name);
        }
        assert!(reg.get("kaiser").is_err());
    }
}
