//! Laser detuning from the lock angle at which the mechanical signal
//! vanishes.

use crate::error::{Error, Result};
use crate::instrument::reflection_phase;
use crate::model;
use crate::params::OpticalMode;
use crate::units::wrap_half_pi;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningSearch {
    pub delta_min: f64,
    pub delta_max: f64,
    pub samples: usize,
}

impl DetuningSearch {
    /// Red detunings up to a quarter linewidth.
    pub fn red(kappa: f64) -> Self {
        Self {
            delta_min: 0.0,
            delta_max: 0.25 * kappa,
            samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningEstimate {
    pub delta: f64,
    /// Critical lock angle found in the data.
    pub theta_star_lock: f64,
    /// Model zero-transduction input angle at the recovered detuning.
    pub theta_star: f64,
}

pub const MIN_LOCK_ANGLES: usize = 7;

/// Vertex of the parabola through the smallest sample and its two
/// neighbours. The smallest sample must not sit at either end.
pub fn critical_lock_angle(data: &[(f64, f64)]) -> Result<f64> {
    if data.len() < MIN_LOCK_ANGLES {
        return Err(Error::DegenerateData(format!(
            "need at least {MIN_LOCK_ANGLES} lock angles, got {}",
            data.len()
        )));
    }
    if data.iter().any(|(t, a)| !(t.is_finite() && a.is_finite())) {
        return Err(Error::DegenerateData("lock sweep has non-finite entries".into()));
    }
    let mut d = data.to_vec();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    if d.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::DegenerateData("lock angles must be distinct".into()));
    }
    let k = d
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    if k == 0 || k + 1 == d.len() {
        return Err(Error::DegenerateData(
            "no interior minimum: lock angles do not bracket the critical angle".into(),
        ));
    }
    let (x0, y0) = d[k - 1];
    let (x1, y1) = d[k];
    let (x2, y2) = d[k + 1];
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return Ok(x1);
    }
    Ok(x1 - 0.5 * num / den)
}

/// `θ*(Δ) − φ(Δ)`: the lock angle at which a device at detuning `delta`
/// shows no mechanical signal, reduced modulo π.
pub fn model_critical_lock(delta: f64, optical: &OpticalMode, omega_m: f64) -> f64 {
    let ts = model::zero_transduction_angle(omega_m, delta, optical.kappa);
    wrap_half_pi(ts - reflection_phase(optical, delta))
}

/// Solve `θ*_lock = θ*(Δ) − φ(Δ)` (mod π) for `Δ` inside `search`.
/// When several detunings match, the smallest one is returned.
pub fn infer_detuning(
    data: &[(f64, f64)],
    optical: &OpticalMode,
    omega_m: f64,
    search: &DetuningSearch,
) -> Result<DetuningEstimate> {
    let theta_star_lock = critical_lock_angle(data)?;
    if !(search.delta_max > search.delta_min) || search.samples < 2 {
        return Err(Error::DegenerateData("empty detuning search range".into()));
    }
    let resid = |d: f64| wrap_half_pi(model_critical_lock(d, optical, omega_m) - theta_star_lock);
    let step = (search.delta_max - search.delta_min) / (search.samples - 1) as f64;
    let mut prev = (search.delta_min, resid(search.delta_min));
    let mut root = (prev.1 == 0.0).then_some(prev.0);
    for k in 1..search.samples {
        if root.is_some() {
            break;
        }
        let d = search.delta_min + step * k as f64;
        let r = resid(d);
        if r == 0.0 {
            root = Some(d);
        } else if prev.1.signum() != r.signum() && (r - prev.1).abs() < std::f64::consts::FRAC_PI_2 {
            let (mut a, mut fa, mut b) = (prev.0, prev.1, d);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = resid(m);
                if fm == 0.0 || (b - a) <= 1e-15 * b.abs().max(1.0) {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            root = Some(0.5 * (a + b));
        }
        prev = (d, r);
    }
    let delta = root.ok_or_else(|| {
        Error::DegenerateData(format!(
            "no detuning in [{:.6e}, {:.6e}] rad/s matches critical lock angle {theta_star_lock:.6}",
            search.delta_min, search.delta_max
        ))
    })?;
    Ok(DetuningEstimate {
        delta,
        theta_star_lock,
        theta_star: model::zero_transduction_angle(omega_m, delta, optical.kappa),
    })
}
