//! Damped least squares with finite-difference Jacobians.
//!
//! Parameters are rescaled by their starting values so that a single
//! relative finite-difference step and step tolerance apply to all of them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once the scaled step is below this relative size.
    pub step_tolerance: f64,
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Standard errors from `s² (JᵀJ)⁻¹`, `s²` the residual variance.
    pub stderr: Vec<f64>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn eval<F>(f: &F, scale: &[f64], p: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let x: Vec<f64> = p.iter().zip(scale).map(|(a, s)| a * s).collect();
    let r = f(&x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("model produced non-finite residuals".into()));
    }
    Ok(DVector::from_vec(r))
}

fn jacobian<F>(f: &F, scale: &[f64], p: &DVector<f64>, r0: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut j = DMatrix::zeros(r0.len(), p.len());
    for k in 0..p.len() {
        let step = h * p[k].abs().max(1.0);
        let mut q = p.clone();
        q[k] += step;
        let rp = eval(f, scale, &q)?;
        q[k] = p[k] - step;
        let rm = eval(f, scale, &q)?;
        j.set_column(k, &((rp - rm) / (2.0 * step)));
    }
    Ok(j)
}

/// Minimize `Σ r_i(x)²` starting from `x0`. Every entry of `x0` must be
/// nonzero; it sets the scale of that parameter.
pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if x0.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateData("starting point has zero or non-finite entries".into()));
    }
    let scale: Vec<f64> = x0.iter().map(|v| v.abs()).collect();
    let n = x0.len();
    let mut p = DVector::from_iterator(n, x0.iter().zip(&scale).map(|(a, s)| a / s));
    let mut r = eval(&f, &scale, &p)?;
    if r.len() < n {
        return Err(Error::DegenerateData(format!(
            "{} residuals cannot determine {} parameters",
            r.len(),
            n
        )));
    }
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let j = jacobian(&f, &scale, &p, &r, opts.fd_step)?;
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let rt = match eval(&f, &scale, &trial) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let ct = rt.norm_squared();
            if ct <= cost {
                let small = step.norm() <= opts.step_tolerance * (p.norm() + opts.step_tolerance);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // No downhill step at any damping: a stationary point to working
        // precision.
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitDidNotConverge {
            iterations,
            residual_norm: cost.sqrt(),
        });
    }

    let j = jacobian(&f, &scale, &p, &r, opts.fd_step)?;
    let dof = (r.len() - n).max(1) as f64;
    let s2 = cost / dof;
    let cov = (j.transpose() * &j).try_inverse();
    let stderr = (0..n)
        .map(|k| match &cov {
            Some(c) => (c[(k, k)].max(0.0) * s2).sqrt() * scale[k],
            None => f64::INFINITY,
        })
        .collect();
    Ok(LmOutcome {
        params: p.iter().zip(&scale).map(|(a, s)| a * s).collect(),
        stderr,
        residual_norm: cost.sqrt(),
        residuals: r.iter().copied().collect(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let t: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp() + 0.2).collect();
        let out = levenberg_marquardt(
            |x: &[f64]| Ok(t.iter().zip(&y).map(|(t, y)| x[0] * (-x[1] * t).exp() + x[2] - y).collect()),
            &[1.0, 1.0, 0.5],
            &LmOptions::default(),
        )
        .unwrap();
        assert!((out.params[0] - 3.0).abs() < 1e-8);
        assert!((out.params[1] - 1.7).abs() < 1e-8);
        assert!((out.params[2] - 0.2).abs() < 1e-8);
        assert!(out.residual_norm < 1e-8);
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let opts = LmOptions {
            max_iterations: 1,
            ..LmOptions::default()
        };
        let r = levenberg_marquardt(
            |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]),
            &[-1.2, 1.0],
            &opts,
        );
        assert!(matches!(r, Err(Error::FitDidNotConverge { .. })));
    }

    #[test]
    fn rejects_zero_start() {
        assert!(levenberg_marquardt(|x: &[f64]| Ok(x.to_vec()), &[0.0], &LmOptions::default()).is_err());
    }
}
