//! Seeded synthetic data for the fit round trips.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::instrument::lock_to_quadrature;
use crate::model;
use crate::params::{OpticalMode, SystemParams};

use super::thermometry::{thermometry_point, ThermometryCurve, ThermometryTruth};

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Thermometry curve with multiplicative noise of relative size `rel_noise`
/// on the spring shift, the linewidth and the area.
pub fn synth_thermometry<R: Rng + ?Sized>(
    truth: &ThermometryTruth,
    optical: &OpticalMode,
    n_c: f64,
    detunings: &[f64],
    rel_noise: f64,
    rng: &mut R,
) -> ThermometryCurve {
    let mut c = ThermometryCurve::default();
    for &d in detunings {
        let (f, l, a) = thermometry_point(d, truth, optical, n_c);
        c.detunings.push(d);
        c.eff_freqs.push(truth.omega_m0 + (f - truth.omega_m0) * (1.0 + rel_noise * gauss(rng)));
        c.eff_linewidths.push(l * (1.0 + rel_noise * gauss(rng)));
        c.areas.push(a * (1.0 + rel_noise * gauss(rng)));
    }
    c
}

/// Evenly spaced detunings over `[lo, hi]`.
pub fn detuning_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Mechanical peak area seen at lock angle `theta_lock`.
pub fn lock_sweep_area(theta_lock: f64, params: &SystemParams, n_b: f64) -> f64 {
    let o = &params.optical;
    let delta = params.drive.delta;
    let theta = lock_to_quadrature(theta_lock, o, delta).theta;
    let u = model::cavity_d(delta, o.kappa, params.omega_m).inv();
    let v = model::cavity_d(delta, o.kappa, -params.omega_m).inv();
    let t = Complex64::from_polar(1.0, -theta) * u - Complex64::from_polar(1.0, theta) * v.conj();
    let g = params.drive.g;
    (n_b + 1.0) * (params.mechanical.gamma_i / params.gamma) * o.kappa_e * g * g * t.norm_sqr()
}

/// Peak areas over `theta_locks` with additive noise of standard deviation
/// `rel_noise` times the largest area.
pub fn synth_lock_sweep<R: Rng + ?Sized>(
    params: &SystemParams,
    n_b: f64,
    theta_locks: &[f64],
    rel_noise: f64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let clean: Vec<f64> = theta_locks.iter().map(|t| lock_sweep_area(*t, params, n_b)).collect();
    let peak = clean.iter().copied().fold(0.0, f64::max);
    Ok(theta_locks
        .iter()
        .zip(clean)
        .map(|(t, a)| (*t, a + rel_noise * peak * gauss(rng)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MechanicalMode;
    use crate::units::hz_to_rad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lock_sweep_vanishes_at_critical_angle() {
        let o = OpticalMode::new(hz_to_rad(194e12), hz_to_rad(3.42e9), hz_to_rad(1.8468e9)).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), hz_to_rad(750e3)).unwrap();
        let p = SystemParams::new(o, m, 0.044 * o.kappa, 790.0).unwrap();
        let tl = super::super::detuning::model_critical_lock(p.drive.delta, &o, p.omega_m);
        let at = lock_sweep_area(tl, &p, 1e4);
        let off = lock_sweep_area(tl + 0.5, &p, 1e4);
        assert!(at < 1e-4 * off, "{at} {off}");
    }

    #[test]
    fn deterministic_per_seed() {
        let o = OpticalMode::new(hz_to_rad(194e12), hz_to_rad(3.42e9), hz_to_rad(1.8468e9)).unwrap();
        let t = ThermometryTruth {
            g0: hz_to_rad(750e3),
            gamma_i: hz_to_rad(172.0),
            n_b: 1.2e4,
            omega_m0: hz_to_rad(28e6),
        };
        let d = detuning_grid(-0.2 * o.kappa, 0.2 * o.kappa, 9);
        let a = synth_thermometry(&t, &o, 6.0, &d, 0.01, &mut ChaCha8Rng::seed_from_u64(3));
        let b = synth_thermometry(&t, &o, 6.0, &d, 0.01, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
