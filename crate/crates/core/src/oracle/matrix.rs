//! Per-frequency linear solve of the quantum Langevin equations.
//!
//! Unknowns are `(a, a†, b, b†)` at frequency ω; inputs are
//! `(a_in, a_in†, b_in, b_in†, a_i, a_i†)`, the last pair being the
//! intrinsic-loss port. The spectrum is the contraction
//! `Σ u_j(ω) u_k(−ω) ⟨x_j(ω) x_k(−ω)⟩` of the homodyne projection `u`
//! with the input correlators.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{cavity_d, cavity_dp};
use crate::params::SystemParams;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Correlators `⟨x_j(ω) x_k(ω')⟩ / δ(ω + ω')` over `(a_in, a_in†, b_in,
/// b_in†)`. The intrinsic-loss port reuses the optical block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputCorrelationMatrix {
    pub m: [[C; 4]; 4],
}

impl InputCorrelationMatrix {
    /// Optical vacuum and a thermal mechanical bath of occupation `nbar`.
    pub fn vacuum_thermal(nbar: f64) -> Self {
        let mut m = [[ZERO; 4]; 4];
        m[0][1] = ONE;
        m[2][3] = C::new(nbar + 1.0, 0.0);
        m[3][2] = C::new(nbar, 0.0);
        Self { m }
    }

    fn full(&self) -> SMatrix<C, 6, 6> {
        let mut c = SMatrix::<C, 6, 6>::zeros();
        for j in 0..4 {
            for k in 0..4 {
                c[(j, k)] = self.m[j][k];
            }
        }
        for j in 0..2 {
            for k in 0..2 {
                c[(4 + j, 4 + k)] = self.m[j][k];
            }
        }
        c
    }
}

/// How the mechanical self-energy is handled in the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Treatment {
    /// Renormalized frequency and damping, frozen at `ω_m`, with the
    /// dynamic optical self-energy subtracted. Matches the closed form.
    #[default]
    Renormalized,
    /// Bare mechanical parameters with the full dynamic back-action.
    Exact,
}

/// Response `X(ω) = R(ω) x(ω)` of the intracavity and mechanical operators
/// to the inputs.
fn response(omega: f64, params: &SystemParams, treatment: Treatment) -> Result<SMatrix<C, 4, 6>> {
    let o = &params.optical;
    let delta = params.drive.delta;
    let g = params.drive.g;
    let d = cavity_d(delta, o.kappa, omega);
    let dp = cavity_dp(delta, o.kappa, omega);
    let (omega_m, gamma, counter) = match treatment {
        Treatment::Renormalized => (params.omega_m, params.gamma, g * g * (d.inv() - dp.inv())),
        Treatment::Exact => (params.mechanical.omega_m0, params.mechanical.gamma_i, ZERO),
    };
    let m_minus = C::new(0.5 * gamma, omega_m - omega);
    let m_plus = C::new(0.5 * gamma, -(omega_m + omega));
    let ig = I * g;

    #[rustfmt::skip]
    let m = SMatrix::<C, 4, 4>::from_row_slice(&[
        d,    ZERO, ig,                ig,
        ZERO, dp,   -ig,               -ig,
        ig,   ig,   m_minus - counter, -counter,
        -ig,  -ig,  counter,           m_plus + counter,
    ]);
    let se = C::new(-o.kappa_e.sqrt(), 0.0);
    let si = C::new(-o.kappa_i.sqrt(), 0.0);
    let sg = C::new(-params.mechanical.gamma_i.sqrt(), 0.0);
    #[rustfmt::skip]
    let n = SMatrix::<C, 4, 6>::from_row_slice(&[
        se,   ZERO, ZERO, ZERO, si,   ZERO,
        ZERO, se,   ZERO, ZERO, ZERO, si,
        ZERO, ZERO, sg,   ZERO, ZERO, ZERO,
        ZERO, ZERO, ZERO, sg,   ZERO, ZERO,
    ]);
    let r = m
        .lu()
        .solve(&n)
        .ok_or(Error::SingularSystem { omega })?;
    if r.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::SingularSystem { omega });
    }
    Ok(r)
}

/// Coefficients of the homodyne current `e^{-iθ} a_out + e^{iθ} a_out†`
/// on the six inputs.
fn projection(omega: f64, theta: f64, params: &SystemParams, treatment: Treatment) -> Result<SVector<C, 6>> {
    let r = response(omega, params, treatment)?;
    let ske = params.optical.kappa_e.sqrt();
    let em = C::from_polar(1.0, -theta);
    let ep = C::from_polar(1.0, theta);
    let mut u = SVector::<C, 6>::zeros();
    for j in 0..6 {
        u[j] = em * ske * r[(0, j)] + ep * ske * r[(1, j)];
    }
    u[0] += em;
    u[1] += ep;
    Ok(u)
}

/// Normalized homodyne spectrum at the waveguide output from a direct
/// solve of the linear system.
pub fn matrix_solve_spectrum(
    omega: f64,
    theta: f64,
    params: &SystemParams,
    corr: &InputCorrelationMatrix,
) -> Result<f64> {
    matrix_solve_spectrum_with(omega, theta, params, corr, Treatment::Renormalized)
}

pub fn matrix_solve_spectrum_with(
    omega: f64,
    theta: f64,
    params: &SystemParams,
    corr: &InputCorrelationMatrix,
    treatment: Treatment,
) -> Result<f64> {
    let up = projection(omega, theta, params, treatment)?;
    let um = projection(-omega, theta, params, treatment)?;
    let c = corr.full();
    let mut s = ZERO;
    for j in 0..6 {
        for k in 0..6 {
            if c[(j, k)] != ZERO {
                s += up[j] * um[k] * c[(j, k)];
            }
        }
    }
    Ok(s.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spectrum_full;
    use crate::params::{MechanicalMode, OpticalMode};
    use crate::units::hz_to_rad;

    fn reference(eta: f64) -> SystemParams {
        let k = hz_to_rad(3.42e9);
        let o = OpticalMode::new(hz_to_rad(194e12), k, eta * k).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), hz_to_rad(750e3)).unwrap();
        SystemParams::new(o, m, 0.044 * k, 790.0).unwrap()
    }

    #[test]
    fn agrees_with_closed_form() {
        for eta in [1.0, 0.54] {
            let p = reference(eta);
            for k in 0..40 {
                let w = p.omega_m * (0.05 + 0.05 * k as f64);
                let theta = -1.3 + 0.07 * k as f64;
                let a = spectrum_full(w, theta, &p, 1.19e4).total;
                let b = matrix_solve_spectrum(w, theta, &p, &InputCorrelationMatrix::vacuum_thermal(1.19e4)).unwrap();
                assert!(((a - b) / a).abs() < 1e-9, "{w} {a} {b}");
            }
        }
    }

    #[test]
    fn uncoupled_is_shot_noise() {
        let k = hz_to_rad(3.42e9);
        let o = OpticalMode::new(hz_to_rad(194e12), k, 0.54 * k).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), 0.0).unwrap();
        let p = SystemParams::new(o, m, 0.044 * k, 790.0).unwrap();
        for t in [Treatment::Renormalized, Treatment::Exact] {
            let s = matrix_solve_spectrum_with(1e8, 0.4, &p, &InputCorrelationMatrix::vacuum_thermal(5.0), t).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_treatment_close_off_resonance() {
        let p = reference(1.0);
        let corr = InputCorrelationMatrix::vacuum_thermal(0.0);
        let w = 0.5 * p.omega_m;
        let a = matrix_solve_spectrum_with(w, 0.3, &p, &corr, Treatment::Renormalized).unwrap();
        let b = matrix_solve_spectrum_with(w, 0.3, &p, &corr, Treatment::Exact).unwrap();
        assert!(((a - b) / a).abs() < 1e-3, "{a} {b}");
    }
}
