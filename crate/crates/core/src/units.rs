//! Unit helpers. All internal quantities are angular frequencies in rad/s;
//! the CLI boundary speaks GHz in the paper's omega/2pi convention.

use std::f64::consts::PI;

/// Convert a frequency quoted as "f/2pi in GHz" to rad/s.
pub fn ghz_to_rad(ghz: f64) -> f64 {
    ghz * 2.0 * PI * 1.0e9
}

/// Convert an angular frequency in rad/s back to GHz (omega/2pi).
pub fn rad_to_ghz(rad: f64) -> f64 {
    rad / (2.0 * PI * 1.0e9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x = 5.31;
        assert!((rad_to_ghz(ghz_to_rad(x)) - x).abs() < 1e-12);
    }
}
