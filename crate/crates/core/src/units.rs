//! Physical constants and unit helpers. Files carry ordinary frequencies in Hz;
//! everything inside the crate is angular (rad/s).

use std::f64::consts::PI;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;

pub const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TWO_PI
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Wraps an angle into `[-pi/2, pi/2)`, i.e. modulo pi. Homodyne spectra
/// depend on the quadrature angle only through `2 theta`.
pub fn wrap_half_pi(x: f64) -> f64 {
    let h = PI / 2.0;
    (x + h).rem_euclid(PI) - h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps() {
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_half_pi(PI - 0.1) + 0.1).abs() < 1e-12);
        assert!((wrap_half_pi(0.3) - 0.3).abs() < 1e-15);
        assert!((hz_to_rad(rad_to_hz(12.5)) - 12.5).abs() < 1e-12);
    }
}
