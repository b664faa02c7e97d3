//! Independent reference computations for the closed-form spectra.

pub mod matrix;
pub mod sde;

pub use matrix::{matrix_solve_spectrum, matrix_solve_spectrum_with, InputCorrelationMatrix, Treatment};
pub use sde::{sde_time_domain_psd, CavityTreatment, SdeConfig, SdeEstimate};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::spectrum_full;
use crate::params::{MechanicalMode, OpticalMode, SystemParams};

/// One random evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub params: SystemParams,
    pub omega: f64,
    pub theta: f64,
    pub nbar: f64,
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, centre: f64, decades: f64) -> f64 {
    centre * 10f64.powf(decades * (rng.random::<f64>() - 0.5))
}

/// Parameters scattered log-uniformly over `decades` around `base`. The
/// coupling efficiency is drawn uniformly in (0.05, 1] and the detuning
/// stays red so the mechanics remain damped.
pub fn random_draw<R: Rng + ?Sized>(rng: &mut R, base: &SystemParams, decades: f64) -> Result<Draw> {
    loop {
        let o = &base.optical;
        let kappa = log_uniform(rng, o.kappa, decades);
        let eta = 0.05 + 0.95 * rng.random::<f64>();
        let optical = OpticalMode::new(o.omega_o, kappa, eta * kappa)?;
        let m = &base.mechanical;
        let mech = MechanicalMode::new(
            log_uniform(rng, m.omega_m0, decades),
            log_uniform(rng, m.gamma_i, decades),
            log_uniform(rng, m.g0, decades),
        )?;
        let rel_delta = (base.drive.delta / o.kappa).abs().max(1e-3);
        let delta = log_uniform(rng, rel_delta, decades).min(2.0) * kappa;
        let n_c = log_uniform(rng, base.drive.n_c, decades);
        let params = match SystemParams::new(optical, mech, delta, n_c) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let omega = log_uniform(rng, params.omega_m, 2.0);
        let theta = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
        let nbar = log_uniform(rng, 1e2, 4.0);
        return Ok(Draw { params, omega, theta, nbar });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub draws: usize,
    pub max_rel_error: f64,
    pub worst: Draw,
}

/// Compare the closed form against the linear solve on `draws` random
/// points.
pub fn closed_form_equivalence(base: &SystemParams, draws: usize, decades: f64, seed: u64) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = None;
    let mut max_rel_error = 0.0;
    for _ in 0..draws {
        let d = random_draw(&mut rng, base, decades)?;
        let a = spectrum_full(d.omega, d.theta, &d.params, d.nbar).total;
        let b = matrix_solve_spectrum(d.omega, d.theta, &d.params, &InputCorrelationMatrix::vacuum_thermal(d.nbar))?;
        let e = ((a - b) / b).abs();
        if worst.is_none() || !(e <= max_rel_error) {
            max_rel_error = e;
            worst = Some(d);
        }
    }
    Ok(EquivalenceReport {
        draws,
        max_rel_error,
        worst: worst.unwrap_or(Draw {
            params: *base,
            omega: base.omega_m,
            theta: 0.0,
            nbar: 0.0,
        }),
    })
}
