//! CODATA 2018 exact values.

use std::f64::consts::PI;

/// Physical constants used throughout the crate, pinned so regression outputs are bit-stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light in vacuum, m/s.
    pub c: f64,
    /// Planck constant, J s.
    pub h: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);

pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
    c: SPEED_OF_LIGHT,
    h: PLANCK,
    hbar: HBAR,
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        CODATA_2018
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_is_h_over_two_pi() {
        assert_eq!(CODATA_2018.hbar, CODATA_2018.h / (2.0 * PI));
        assert_eq!(PhysicalConstants::default(), CODATA_2018);
    }
}
