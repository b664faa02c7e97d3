//! Joint fit of spring shift, linewidth and calibrated mode area against
//! laser detuning.

use crate::error::{Error, Result};
use crate::model;
use crate::params::OpticalMode;

use super::lm::{levenberg_marquardt, LmOptions, LmOutcome};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThermometryCurve {
    pub detunings: Vec<f64>,
    pub eff_freqs: Vec<f64>,
    pub eff_linewidths: Vec<f64>,
    /// Peak area in the maximum-transduction quadrature, referenced to the
    /// waveguide output and normalized to shot noise (Hz).
    pub areas: Vec<f64>,
}

impl ThermometryCurve {
    pub const MIN_POINTS: usize = 5;

    pub fn validate(&self) -> Result<()> {
        let n = self.detunings.len();
        if n < Self::MIN_POINTS {
            return Err(Error::DegenerateData(format!(
                "thermometry curve needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if [self.eff_freqs.len(), self.eff_linewidths.len(), self.areas.len()]
            .iter()
            .any(|l| *l != n)
        {
            return Err(Error::DegenerateData("thermometry columns differ in length".into()));
        }
        let all = self
            .detunings
            .iter()
            .chain(&self.eff_freqs)
            .chain(&self.eff_linewidths)
            .chain(&self.areas);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateData("thermometry curve has non-finite entries".into()));
        }
        if self.eff_linewidths.iter().any(|v| *v <= 0.0) {
            return Err(Error::DegenerateData("linewidths must be positive".into()));
        }
        if self.areas.iter().any(|v| *v <= 0.0) {
            return Err(Error::DegenerateData("areas must be positive".into()));
        }
        let (lo, hi) = min_max(&self.detunings);
        if !(hi > lo) {
            return Err(Error::DegenerateData("detunings have zero span".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }
}

/// Device parameters a thermometry curve depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermometryTruth {
    pub g0: f64,
    pub gamma_i: f64,
    pub n_b: f64,
    pub omega_m0: f64,
}

/// Effective frequency, effective linewidth and peak area at one detuning.
pub fn thermometry_point(
    delta: f64,
    truth: &ThermometryTruth,
    optical: &OpticalMode,
    n_c: f64,
) -> (f64, f64, f64) {
    let g = truth.g0 * n_c.sqrt();
    let (dw, gom) = model::optical_spring(g, delta, optical.kappa, truth.omega_m0);
    let omega_m = truth.omega_m0 + dw;
    let gamma = truth.gamma_i + gom;
    let u = model::cavity_d(delta, optical.kappa, omega_m).inv().norm();
    let v = model::cavity_d(delta, optical.kappa, -omega_m).inv().norm();
    let area = (truth.n_b + 1.0) * (truth.gamma_i / gamma) * optical.kappa_e * g * g * (u + v).powi(2);
    (omega_m, gamma, area)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Joint,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub g0: Estimate,
    pub gamma_i: Estimate,
    pub n_b: Estimate,
    pub omega_m0: Estimate,
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: FitMethod,
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

/// Least-squares line `y ≈ c0 + c1 x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let c1 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - c1 * mx, c1)
}

struct Panels<'a> {
    curve: &'a ThermometryCurve,
    optical: &'a OpticalMode,
    n_c: f64,
    freq_scale: f64,
}

impl Panels<'_> {
    fn model(&self, x: &[f64], k: usize) -> (f64, f64, f64) {
        let t = ThermometryTruth {
            g0: x[0],
            gamma_i: x[1],
            n_b: x[2],
            omega_m0: x[3],
        };
        thermometry_point(self.curve.detunings[k], &t, self.optical, self.n_c)
    }

    /// Residual blocks (frequency, linewidth, area), each scaled to order
    /// one per unit relative error.
    fn blocks(&self, x: &[f64]) -> [Vec<f64>; 3] {
        let c = self.curve;
        let mut out = [
            Vec::with_capacity(c.len()),
            Vec::with_capacity(c.len()),
            Vec::with_capacity(c.len()),
        ];
        for k in 0..c.len() {
            let (f, l, a) = self.model(x, k);
            out[0].push((f - c.eff_freqs[k]) / self.freq_scale);
            out[1].push((l - c.eff_linewidths[k]) / c.eff_linewidths[k]);
            out[2].push((a - c.areas[k]) / c.areas[k]);
        }
        out
    }
}

/// Start values from the linear structure of the spring and damping laws.
fn initial_guess(p: &Panels) -> [f64; 4] {
    let c = p.curve;
    let omega_ref = {
        let mut f = c.eff_freqs.clone();
        f.sort_by(f64::total_cmp);
        f[f.len() / 2]
    };
    let kappa = p.optical.kappa;
    // Shift and damping per unit g0².
    let (s, h): (Vec<f64>, Vec<f64>) = c
        .detunings
        .iter()
        .map(|d| model::optical_spring(p.n_c.sqrt(), *d, kappa, omega_ref))
        .unzip();
    let (w0, g2_f) = linear_fit(&s, &c.eff_freqs);
    let (gi, g2_l) = linear_fit(&h, &c.eff_linewidths);
    let g2 = [g2_f, g2_l]
        .into_iter()
        .find(|v| *v > 0.0 && v.is_finite())
        .unwrap_or(1.0);
    let g0 = g2.sqrt();
    let gamma_i = if gi > 0.0 {
        gi
    } else {
        c.eff_linewidths.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let omega_m0 = if w0 > 0.0 { w0 } else { omega_ref };
    let t = ThermometryTruth {
        g0,
        gamma_i,
        n_b: 0.0,
        omega_m0,
    };
    let ratios: Vec<f64> = (0..c.len())
        .map(|k| {
            let (_, _, a1) = thermometry_point(c.detunings[k], &t, p.optical, p.n_c);
            c.areas[k] / a1
        })
        .collect();
    let n_b = (ratios.iter().sum::<f64>() / ratios.len() as f64 - 1.0).max(1.0);
    [g0, gamma_i, n_b, omega_m0]
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn estimates(out: &LmOutcome, method: FitMethod) -> FitResult {
    let e = |k: usize| Estimate {
        value: out.params[k].abs(),
        stderr: out.stderr[k],
    };
    FitResult {
        g0: e(0),
        gamma_i: e(1),
        n_b: e(2),
        omega_m0: e(3),
        residual_norm: out.residual_norm,
        iterations: out.iterations,
        method,
    }
}

/// Fit `(g0, γ_i, n_b)` jointly to the three panels, with the bare
/// mechanical frequency as a nuisance parameter.
///
/// A first pass uses relative residuals; the panels are then reweighted by
/// the inverse of their residual scatter and refit. If the joint fit fails
/// the panels are fitted one after another.
pub fn fit_thermometry(
    curve: &ThermometryCurve,
    optical: &OpticalMode,
    n_c: f64,
    opts: &LmOptions,
) -> Result<FitResult> {
    curve.validate()?;
    if !(n_c > 0.0) {
        return Err(Error::DegenerateData("thermometry needs n_c > 0".into()));
    }
    let (flo, fhi) = min_max(&curve.eff_freqs);
    let freq_scale = if fhi > flo { fhi - flo } else { 1e-9 * fhi.abs().max(1.0) };
    let panels = Panels {
        curve,
        optical,
        n_c,
        freq_scale,
    };
    let x0 = initial_guess(&panels);
    match joint(&panels, &x0, opts) {
        Ok(r) => Ok(r),
        Err(_) => sequential(&panels, &x0, opts),
    }
}

fn joint(p: &Panels, x0: &[f64; 4], opts: &LmOptions) -> Result<FitResult> {
    let stage = |w: [f64; 3], start: &[f64]| {
        levenberg_marquardt(
            |x: &[f64]| {
                let b = p.blocks(x);
                Ok(b.iter()
                    .zip(w)
                    .flat_map(|(blk, wk)| blk.iter().map(move |v| v * wk))
                    .collect())
            },
            start,
            opts,
        )
    };
    let first = stage([1.0; 3], x0)?;
    let b = p.blocks(&first.params);
    let scatter: Vec<f64> = b.iter().map(|blk| rms(blk)).collect();
    let floor = scatter.iter().copied().fold(0.0, f64::max) * 1e-6;
    if !(floor > 0.0) {
        return Ok(estimates(&first, FitMethod::Joint));
    }
    let w = [
        1.0 / scatter[0].max(floor),
        1.0 / scatter[1].max(floor),
        1.0 / scatter[2].max(floor),
    ];
    let second = stage(w, &first.params)?;
    Ok(estimates(&second, FitMethod::Joint))
}

fn sequential(p: &Panels, x0: &[f64; 4], opts: &LmOptions) -> Result<FitResult> {
    let freq = levenberg_marquardt(
        |x: &[f64]| Ok(p.blocks(&[x[0], x0[1], x0[2], x[1]])[0].clone()),
        &[x0[0], x0[3]],
        opts,
    )?;
    let (g0, omega_m0) = (freq.params[0], freq.params[1]);
    let lw = levenberg_marquardt(
        |x: &[f64]| Ok(p.blocks(&[g0, x[0], x0[2], omega_m0])[1].clone()),
        &[x0[1]],
        opts,
    )?;
    let gamma_i = lw.params[0];
    let area = levenberg_marquardt(
        |x: &[f64]| Ok(p.blocks(&[g0, gamma_i, x[0], omega_m0])[2].clone()),
        &[x0[2]],
        opts,
    )?;
    let all = p.blocks(&[g0, gamma_i, area.params[0], omega_m0]);
    let residual_norm = all.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    Ok(FitResult {
        g0: Estimate {
            value: g0.abs(),
            stderr: freq.stderr[0],
        },
        gamma_i: Estimate {
            value: gamma_i,
            stderr: lw.stderr[0],
        },
        n_b: Estimate {
            value: area.params[0],
            stderr: area.stderr[0],
        },
        omega_m0: Estimate {
            value: omega_m0,
            stderr: freq.stderr[1],
        },
        residual_norm,
        iterations: freq.iterations + lw.iterations + area.iterations,
        method: FitMethod::Sequential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;

    fn optical() -> OpticalMode {
        OpticalMode::new(hz_to_rad(194e12), hz_to_rad(3.42e9), hz_to_rad(1.8468e9)).unwrap()
    }

    fn truth() -> ThermometryTruth {
        ThermometryTruth {
            g0: hz_to_rad(750e3),
            gamma_i: hz_to_rad(172.0),
            n_b: 1.19e4,
            omega_m0: hz_to_rad(28e6),
        }
    }

    fn curve(n: usize) -> ThermometryCurve {
        let o = optical();
        let t = truth();
        let mut c = ThermometryCurve::default();
        for k in 0..n {
            let d = o.kappa * (-0.25 + 0.5 * k as f64 / (n - 1) as f64);
            let (f, l, a) = thermometry_point(d, &t, &o, 6.0);
            c.detunings.push(d);
            c.eff_freqs.push(f);
            c.eff_linewidths.push(l);
            c.areas.push(a);
        }
        c
    }

    #[test]
    fn noiseless_recovery() {
        let r = fit_thermometry(&curve(21), &optical(), 6.0, &LmOptions::default()).unwrap();
        let t = truth();
        assert!((r.g0.value / t.g0 - 1.0).abs() < 1e-6, "{:?}", r);
        assert!((r.gamma_i.value / t.gamma_i - 1.0).abs() < 1e-6);
        assert!((r.n_b.value / t.n_b - 1.0).abs() < 1e-6);
        assert!(r.g0.stderr >= 0.0 && r.residual_norm.is_finite());
    }

    #[test]
    fn sequential_path_recovers_noiseless() {
        let c = curve(15);
        let o = optical();
        let (flo, fhi) = min_max(&c.eff_freqs);
        let p = Panels {
            curve: &c,
            optical: &o,
            n_c: 6.0,
            freq_scale: fhi - flo,
        };
        let x0 = initial_guess(&p);
        let r = sequential(&p, &x0, &LmOptions::default()).unwrap();
        assert_eq!(r.method, FitMethod::Sequential);
        assert!((r.g0.value / truth().g0 - 1.0).abs() < 1e-6);
        assert!((r.n_b.value / truth().n_b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_curves_rejected() {
        let mut c = curve(7);
        c.detunings.iter_mut().for_each(|d| *d = 0.0);
        assert!(fit_thermometry(&c, &optical(), 6.0, &LmOptions::default()).is_err());
        let short = curve(4);
        assert!(short.validate().is_err());
    }
}
