//! Cavity reflection, lock-angle bookkeeping and spectrum-analyzer emulation.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model;
use crate::params::OpticalMode;

/// `1 − κ_e / (i(Δ − ω) + κ/2)`.
pub fn reflection_coefficient(omega: f64, optical: &OpticalMode, delta: f64) -> Complex64 {
    1.0 - optical.kappa_e / model::cavity_d(delta, optical.kappa, omega)
}

/// Phase imparted on the drive upon reflection, `Arg r(0)`.
pub fn reflection_phase(optical: &OpticalMode, delta: f64) -> f64 {
    reflection_coefficient(0.0, optical, delta).arg()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSetting {
    /// Input-to-LO angle.
    pub theta: f64,
    /// Reflected-signal-to-LO angle.
    pub theta_lock: f64,
    pub phi: f64,
}

pub fn lock_to_quadrature(theta_lock: f64, optical: &OpticalMode, delta: f64) -> QuadratureSetting {
    let phi = reflection_phase(optical, delta);
    QuadratureSetting {
        theta: theta_lock + phi,
        theta_lock,
        phi,
    }
}

pub fn quadrature_to_lock(theta: f64, optical: &OpticalMode, delta: f64) -> QuadratureSetting {
    let phi = reflection_phase(optical, delta);
    QuadratureSetting {
        theta,
        theta_lock: theta - phi,
        phi,
    }
}

/// Per-contribution columns of a trace. Each entry is the detected
/// contribution, so the columns sum to the trace values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceComponents {
    pub s_vac: Vec<f64>,
    pub s_thermal: Vec<f64>,
    pub s_phase: Vec<f64>,
    pub s_extra: Vec<f64>,
    pub s_absorptive: Vec<f64>,
}

impl TraceComponents {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            s_vac: Vec::with_capacity(n),
            s_thermal: Vec::with_capacity(n),
            s_phase: Vec::with_capacity(n),
            s_extra: Vec::with_capacity(n),
            s_absorptive: Vec::with_capacity(n),
        }
    }

    pub fn columns(&self) -> [&[f64]; 5] {
        [
            &self.s_vac,
            &self.s_thermal,
            &self.s_phase,
            &self.s_extra,
            &self.s_absorptive,
        ]
    }

    fn map(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        Self {
            s_vac: f(&self.s_vac),
            s_thermal: f(&self.s_thermal),
            s_phase: f(&self.s_phase),
            s_extra: f(&self.s_extra),
            s_absorptive: f(&self.s_absorptive),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumTrace {
    pub freqs_hz: Vec<f64>,
    pub values: Vec<f64>,
    /// Resolution bandwidth (FWHM of the Gaussian window), if resampled.
    pub rbw_hz: Option<f64>,
    pub components: Option<TraceComponents>,
    pub stderr: Option<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl SpectrumTrace {
    pub fn new(freqs_hz: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let t = Self {
            freqs_hz,
            values,
            ..Self::default()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.freqs_hz.len();
        if self.values.len() != n {
            return Err(Error::Grid(format!(
                "{} frequencies but {} values",
                n,
                self.values.len()
            )));
        }
        check_increasing(&self.freqs_hz)?;
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Grid(format!("spectrum value {v} is not a finite non-negative number")));
        }
        if let Some(c) = &self.components {
            if c.columns().iter().any(|col| col.len() != n) {
                return Err(Error::Grid("component column length mismatch".into()));
            }
        }
        if let Some(s) = &self.stderr {
            if s.len() != n {
                return Err(Error::Grid("stderr column length mismatch".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Index and value of the smallest entry.
    pub fn min(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn check_increasing(f: &[f64]) -> Result<()> {
    if let Some(v) = f.iter().find(|v| !v.is_finite()) {
        return Err(Error::Grid(format!("frequency {v} is not finite")));
    }
    if let Some(w) = f.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!(
            "frequencies not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `n` points `start, start + step, ...`.
pub fn linear_grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + step * k as f64).collect()
}

/// Centers of `n` equal cells tiling `[lo, hi]`.
pub fn cell_centered_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|k| lo + h * (k as f64 + 0.5)).collect()
}

/// Gaussian standard deviation for a window of full width at half maximum
/// `rbw`.
pub fn rbw_sigma(rbw: f64) -> f64 {
    rbw / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

const KERNEL_HALF_WIDTH_SIGMAS: f64 = 8.0;

/// Convolve with a Gaussian analyzer window and sample at `out_freqs`.
///
/// Fine-grid samples are treated as cell centers, so output frequencies may
/// lie up to half a cell beyond the outermost sample. The kernel is
/// truncated at the grid edges and renormalized, which keeps a white
/// spectrum exactly white.
pub fn rbw_resample(fine: &SpectrumTrace, rbw: f64, out_freqs: &[f64]) -> Result<SpectrumTrace> {
    fine.validate()?;
    if !(rbw.is_finite() && rbw > 0.0) {
        return Err(Error::Grid(format!("resolution bandwidth must be positive, got {rbw}")));
    }
    check_increasing(out_freqs)?;
    let f = &fine.freqs_hz;
    let n = f.len();
    if n < 2 {
        return Err(Error::Grid("fine grid needs at least two points".into()));
    }
    let cell: Vec<f64> = (0..n)
        .map(|k| {
            let lo = if k == 0 { f[1] - f[0] } else { f[k] - f[k - 1] };
            let hi = if k + 1 == n { f[n - 1] - f[n - 2] } else { f[k + 1] - f[k] };
            0.5 * (lo + hi)
        })
        .collect();
    let lo = f[0] - 0.5 * cell[0];
    let hi = f[n - 1] + 0.5 * cell[n - 1];
    if let Some(x) = out_freqs.iter().find(|x| **x < lo || **x > hi) {
        return Err(Error::Grid(format!(
            "output frequency {x} Hz outside fine grid span [{lo}, {hi}] Hz"
        )));
    }
    if out_freqs.len() > 1 {
        let out_step = out_freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let fine_step = cell.iter().copied().fold(0.0, f64::max);
        if fine_step * 10.0 > out_step * (1.0 + 1e-9) {
            return Err(Error::Grid(format!(
                "fine spacing {fine_step} Hz is not 10x denser than output spacing {out_step} Hz"
            )));
        }
    }

    let sigma = rbw_sigma(rbw);
    let reach = KERNEL_HALF_WIDTH_SIGMAS * sigma;
    let weights: Vec<(usize, Vec<f64>)> = out_freqs
        .iter()
        .map(|&x| {
            let a = f.partition_point(|v| *v < x - reach);
            let b = f.partition_point(|v| *v <= x + reach);
            let mut w: Vec<f64> = (a..b)
                .map(|k| {
                    let z = (f[k] - x) / sigma;
                    (-0.5 * z * z).exp() * cell[k]
                })
                .collect();
            let norm: f64 = w.iter().sum();
            if norm > 0.0 {
                w.iter_mut().for_each(|v| *v /= norm);
            }
            (a, w)
        })
        .collect();

    let apply = |col: &[f64]| -> Vec<f64> {
        weights
            .iter()
            .map(|(a, w)| w.iter().zip(&col[*a..]).map(|(wi, v)| wi * v).sum())
            .collect()
    };

    let mut meta = fine.meta.clone();
    meta.insert("rbw_hz".into(), format!("{rbw}"));
    meta.insert("rbw_window".into(), "gaussian_fwhm".into());
    Ok(SpectrumTrace {
        freqs_hz: out_freqs.to_vec(),
        values: apply(&fine.values),
        rbw_hz: Some(rbw),
        components: fine.components.as_ref().map(|c| c.map(apply)),
        stderr: None,
        meta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingMap {
    pub theta_locks: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// One row per lock angle.
    pub values: Vec<Vec<f64>>,
}

impl SqueezingMap {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.theta_locks.len() {
            return Err(Error::Grid("map row count differs from lock-angle axis".into()));
        }
        for row in &self.values {
            if row.len() != self.freqs_hz.len() {
                return Err(Error::Grid("map row length differs from frequency axis".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Grid("map contains non-finite values".into()));
            }
        }
        Ok(())
    }

    /// `(row, column, value)` of the smallest cell.
    pub fn min(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if best.is_none_or(|b| v < b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn optical(eta: f64) -> OpticalMode {
        OpticalMode::from_coupling_efficiency(1e15, 2e10, eta).unwrap()
    }

    #[test]
    fn reflection_limits() {
        assert!(reflection_coefficient(0.0, &optical(0.5), 0.0).norm() < 1e-15);
        let r = reflection_coefficient(0.0, &optical(0.54), 0.0);
        assert_relative_eq!(r.re, -0.08, epsilon = 1e-12);
        assert_relative_eq!(r.arg(), std::f64::consts::PI, epsilon = 1e-12);
        let far = reflection_coefficient(0.0, &optical(0.54), 1e3 * 2e10);
        assert!((far - 1.0).norm() < 1e-3);
    }

    #[test]
    fn lock_round_trip() {
        let o = optical(0.54);
        for k in 0..20 {
            let tl = k as f64 * 0.3;
            let q = lock_to_quadrature(tl, &o, 0.044 * o.kappa);
            let back = quadrature_to_lock(q.theta, &o, 0.044 * o.kappa);
            assert!((back.theta_lock - tl).abs() < 1e-12);
        }
    }

    #[test]
    fn white_stays_white() {
        let f = cell_centered_grid(0.0, 40e6, 50_000);
        let fine = SpectrumTrace::new(f, vec![1.0; 50_000]).unwrap();
        let out = linear_grid(0.0, 80e3, 501);
        let r = rbw_resample(&fine, 300e3, &out).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_out_of_span_and_coarse_grid() {
        let f = cell_centered_grid(0.0, 1e6, 1000);
        let fine = SpectrumTrace::new(f, vec![1.0; 1000]).unwrap();
        assert!(rbw_resample(&fine, 1e4, &[2e6]).is_err());
        assert!(rbw_resample(&fine, 1e4, &[1e5, 1.05e5]).is_err());
        assert!(rbw_resample(&fine, 1e4, &[1e5, 2e5]).is_ok());
    }
}
