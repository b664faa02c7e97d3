//! Closed-form frequency-domain model of the linearized optomechanical
//! system.
//!
//! Conventions: Fourier transforms use `a(t) = ∫ a(ω) e^{-iωt} dω`, the
//! output field is `a_out = a_in + sqrt(kappa_e) a`, and the homodyne
//! current is `I(ω) = e^{-iθ} a_out(ω) + e^{iθ} a_out†(ω)`. Spectra are
//! normalized to shot noise.

use num_complex::Complex64;

use crate::params::{MechanicalMode, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dimensionless structural-damping susceptibility
/// `ω_m² / (ω_m² − ω² − i γ_i ω_m)` of the bare mode.
pub fn mech_susceptibility(omega: f64, mech: &MechanicalMode) -> Complex64 {
    susceptibility(omega, mech.omega_m0, mech.gamma_i)
}

pub(crate) fn susceptibility(omega: f64, omega_m: f64, gamma: f64) -> Complex64 {
    let w2 = omega_m * omega_m;
    Complex64::new(w2, 0.0) / Complex64::new(w2 - omega * omega, -gamma * omega_m)
}

/// Optical spring shift and optomechanical damping for coupling `g`,
/// evaluated at the mechanical frequency `omega_m`.
pub fn optical_spring(g: f64, delta: f64, kappa: f64, omega_m: f64) -> (f64, f64) {
    let h = cavity_d(delta, kappa, omega_m).inv() - cavity_dp(delta, kappa, omega_m).inv();
    let g2 = g * g;
    (g2 * h.im, 2.0 * g2 * h.re)
}

/// `(delta_omega_m, gamma_om)` for the stored drive condition.
pub fn spring_and_damping(params: &SystemParams) -> (f64, f64) {
    (
        params.omega_m - params.mechanical.omega_m0,
        params.gamma - params.mechanical.gamma_i,
    )
}

/// `i(Δ − ω) + κ/2`
#[inline]
pub(crate) fn cavity_d(delta: f64, kappa: f64, omega: f64) -> Complex64 {
    Complex64::new(0.5 * kappa, delta - omega)
}

/// `−i(Δ + ω) + κ/2`
#[inline]
pub(crate) fn cavity_dp(delta: f64, kappa: f64, omega: f64) -> Complex64 {
    Complex64::new(0.5 * kappa, -(delta + omega))
}

/// Transfer coefficients of `sqrt(kappa_e) a(ω)` onto the waveguide input,
/// its conjugate, and the mechanical bath operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

pub fn transfer_coefficients(omega: f64, params: &SystemParams) -> CoefficientSet {
    let o = &params.optical;
    let g = params.drive.g;
    let d = cavity_d(params.drive.delta, o.kappa, omega);
    let dp = cavity_dp(params.drive.delta, o.kappa, omega);
    let m_minus = Complex64::new(0.5 * params.gamma, params.omega_m - omega);
    let m_plus = Complex64::new(0.5 * params.gamma, -(params.omega_m + omega));
    let chi_r = m_minus.inv() - m_plus.inv();
    let g2 = g * g;
    let pref = o.kappa_e / d;
    let pref_b = (o.kappa_e * params.mechanical.gamma_i).sqrt() / d;
    CoefficientSet {
        a1: pref * (g2 * chi_r / d - 1.0),
        a2: pref * g2 * chi_r / dp,
        b1: pref_b * I * g / m_minus,
        b2: pref_b * I * g / m_plus,
    }
}

/// Vacuum, thermal and total contributions to the normalized spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumParts {
    pub total: f64,
    pub vac: f64,
    pub thermal: f64,
}

/// Normalized homodyne spectrum at the waveguide output for input-LO angle
/// `theta` and bath occupation `nbar`.
///
/// When `kappa_e < kappa` the vacuum entering through the intrinsic loss
/// port is included; its coefficients are those of the waveguide input
/// scaled by `sqrt(kappa_i / kappa_e)`, without the direct reflection.
pub fn spectrum_full(omega: f64, theta: f64, params: &SystemParams, nbar: f64) -> SpectrumParts {
    let p = transfer_coefficients(omega, params);
    let m = transfer_coefficients(-omega, params);
    let rot = Complex64::from_polar(1.0, -2.0 * theta);

    let r1 = 1.0 + p.a1;
    let mut vac = m.a2.norm_sqr() + r1.norm_sqr() + 2.0 * (rot * r1 * m.a2).re;
    let o = &params.optical;
    if o.kappa_i > 0.0 {
        let loss = o.kappa_i / o.kappa_e;
        vac += loss * (m.a2.norm_sqr() + p.a1.norm_sqr() + 2.0 * (rot * p.a1 * m.a2).re);
    }

    let np1 = nbar + 1.0;
    let thermal = p.b1.norm_sqr() * np1
        + m.b1.norm_sqr() * nbar
        + m.b2.norm_sqr() * np1
        + p.b2.norm_sqr() * nbar
        + 2.0 * (rot * p.b1 * m.b2).re * np1
        + 2.0 * (rot * m.b1 * p.b2).re * nbar;

    SpectrumParts {
        total: vac + thermal,
        vac,
        thermal,
    }
}

/// Low-frequency limit `1 + 4ε sin2θ + 4ε (n̄/Q_m)(1 − cos2θ)` with
/// `ε = Γ_meas / ω_m`.
pub fn quasi_static_spectrum(theta: f64, params: &SystemParams, nbar: f64) -> f64 {
    let eps = params.measurement_ratio();
    let two = 2.0 * theta;
    1.0 + 4.0 * eps * two.sin() + 4.0 * eps * (nbar / params.mechanical.q_m) * (1.0 - two.cos())
}

/// Back-action/imprecision correlation term `4 sin2θ (Γ_meas/ω_m) Re χ̃(ω)`.
pub fn squeezing_cross_term(omega: f64, theta: f64, params: &SystemParams) -> f64 {
    let chi = susceptibility(omega, params.omega_m, params.gamma);
    4.0 * (2.0 * theta).sin() * params.measurement_ratio() * chi.re
}

/// Input-LO angle at which the mechanical signal at `omega` drops out of
/// the homodyne current, reduced to `[-π/2, π/2)`.
pub fn zero_transduction_angle(omega: f64, delta: f64, kappa: f64) -> f64 {
    let u = cavity_d(delta, kappa, omega).inv();
    let v = cavity_d(delta, kappa, -omega).inv();
    crate::units::wrap_half_pi(0.5 * (u.arg() + v.arg()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::OpticalMode;
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;

    fn reference(n_c: f64) -> SystemParams {
        let o = OpticalMode::new(hz_to_rad(194e12), hz_to_rad(3.42e9), hz_to_rad(3.42e9)).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), hz_to_rad(750e3)).unwrap();
        SystemParams::new(o, m, 0.044 * o.kappa, n_c).unwrap()
    }

    #[test]
    fn susceptibility_values() {
        let m = MechanicalMode::from_quality_factor(hz_to_rad(28e6), 1.66e5, 0.0).unwrap();
        let at_res = mech_susceptibility(m.omega_m0, &m);
        assert_relative_eq!(at_res.im, 1.66e5, max_relative = 1e-9);
        assert!(at_res.re.abs() < 1e-6);
        assert_relative_eq!(mech_susceptibility(2.0 * m.omega_m0, &m).re, -1.0 / 3.0, epsilon = 1e-9);
        let dc = mech_susceptibility(0.0, &m);
        assert_relative_eq!(dc.re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spring_at_reference_point() {
        let p = reference(790.0);
        let (dw, gom) = spring_and_damping(&p);
        assert!(gom > 0.0);
        assert!(dw < 0.0);
        let (dw0, g0) = spring_and_damping(&reference(0.0));
        assert_eq!((dw0, g0), (0.0, 0.0));
    }

    #[test]
    fn bare_cavity_reflection() {
        let o = OpticalMode::new(1e15, 1e9, 1e9).unwrap();
        let m = MechanicalMode::new(1e7, 1e2, 0.0).unwrap();
        let p = SystemParams::new(o, m, 0.0, 100.0).unwrap();
        let c = transfer_coefficients(0.0, &p);
        assert_relative_eq!((1.0 + c.a1).re, -1.0, epsilon = 1e-15);
        assert_eq!(c.a2, Complex64::new(0.0, 0.0));
        assert_eq!(c.b1, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn shot_noise_without_coupling() {
        let o = OpticalMode::new(1e15, 1e9, 0.4e9).unwrap();
        let m = MechanicalMode::new(1e7, 1e2, 0.0).unwrap();
        let p = SystemParams::new(o, m, 0.1e9, 100.0).unwrap();
        for k in 0..50 {
            let w = k as f64 * 3.1e6;
            let s = spectrum_full(w, 0.3 * k as f64, &p, 1e4);
            assert!((s.total - 1.0).abs() < 1e-12, "{w}: {}", s.total);
        }
    }

    #[test]
    fn rotating_wave_dominance() {
        let p = reference(790.0);
        let c = transfer_coefficients(p.omega_m, &p);
        assert!(c.b1.norm() > 1e3 * c.b2.norm());
    }

    #[test]
    fn zero_transduction_resonant() {
        assert!(zero_transduction_angle(1e7, 0.0, 1e9).abs() < 1e-15);
        let t = zero_transduction_angle(1e7, 0.044e9, 1e9);
        assert_relative_eq!(t, -2.0 * 0.044, max_relative = 0.02);
    }
}
