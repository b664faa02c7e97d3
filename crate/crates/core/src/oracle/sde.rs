//! Time-domain Monte-Carlo of the linearized equations.
//!
//! Quantum inputs are replaced by classical Gaussian noise whose
//! correlators equal the symmetrized quantum ones: vacuum gets variance 1/2
//! per quadrature and the mechanical bath n̄ + 1/2. Because the output
//! spectrum of a linear system is linear in the input correlation matrix,
//! this reproduces every symmetrized output spectrum, squeezed ones
//! included. It says nothing about non-symmetrized spectra.
//!
//! When `κ > 50 ω_m` the cavity is adiabatically eliminated and the
//! mechanics run with their renormalized frequency and damping. Otherwise
//! cavity and mechanics are integrated together with bare parameters.
//! Each linear step uses the exact propagator of the uncoupled mode with
//! the coupling and noise held constant over the step (Euler-Maruyama in
//! the interaction picture).
//!
//! Every segment is an independent trajectory with its own burn-in, so the
//! inter-segment scatter is a fair error estimate even when the mechanical
//! coherence time is comparable to the segment length.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::instrument::SpectrumTrace;
use crate::model::spectrum_full;
use crate::params::SystemParams;
use crate::units::{rad_to_hz, TWO_PI};

use super::matrix::{matrix_solve_spectrum_with, InputCorrelationMatrix, Treatment};

type C = Complex64;

/// Cavity is eliminated above this `κ/ω_m`.
pub const ADIABATIC_RATIO: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityTreatment {
    Adiabatic,
    Full,
}

impl CavityTreatment {
    pub fn for_params(params: &SystemParams) -> Self {
        if params.optical.kappa > ADIABATIC_RATIO * params.omega_m {
            Self::Adiabatic
        } else {
            Self::Full
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Adiabatic => "adiabatic",
            Self::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    /// Total analysed time over all segments (s), burn-in excluded.
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub segments: usize,
    /// Boxcar decimation factor ahead of the FFT. `None` picks one giving
    /// a sample rate of about eight times the top of the band.
    pub decimation: Option<usize>,
    /// Burn-in per segment in units of `1/γ`.
    pub burn_in: f64,
    /// Analysis band (Hz). `None` centres a bin on `ω_m`.
    pub band_hz: Option<(f64, f64)>,
    pub bins: usize,
}

impl SdeConfig {
    pub fn new(duration: f64, dt: f64, seed: u64) -> Self {
        Self {
            duration,
            dt,
            seed,
            segments: 40,
            decimation: None,
            burn_in: 8.0,
            band_hz: None,
            bins: 20,
        }
    }

    /// Largest step allowed by the stability precondition, together with a
    /// duration of `gammas / γ`.
    pub fn for_params(params: &SystemParams, gammas: f64, seed: u64) -> Self {
        Self::new(gammas / params.gamma, max_stable_dt(params), seed)
    }
}

/// Bandwidth of the fastest cavity process that is integrated explicitly.
/// After elimination only the mechanics remain, whose fastest rate is the
/// total damping.
pub fn kappa_eff(params: &SystemParams) -> f64 {
    match CavityTreatment::for_params(params) {
        CavityTreatment::Adiabatic => params.gamma,
        CavityTreatment::Full => params.optical.kappa,
    }
}

/// `0.01 / max(κ_eff, ω_m)`.
pub fn max_stable_dt(params: &SystemParams) -> f64 {
    0.01 / kappa_eff(params).max(params.omega_m)
}

/// Coarse-binned PSD estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeEstimate {
    /// Bin centres, bin means and inter-segment standard errors.
    pub trace: SpectrumTrace,
    pub treatment: CavityTreatment,
    pub sample_rate_hz: f64,
    /// Periodogram resolution `1/T_segment` (Hz).
    pub resolution_hz: f64,
    pub decimation: usize,
    pub dt: f64,
    /// Periodogram indices `[k0, k1)` averaged into each bin.
    pub bin_members: Vec<(usize, usize)>,
    /// Per-segment bin means, row per segment.
    pub per_segment: Vec<Vec<f64>>,
}

impl SdeEstimate {
    /// Analytic expectation of each bin: the spectrum averaged over the
    /// same periodogram frequencies, with the excess over shot noise
    /// attenuated by the boxcar decimation response.
    pub fn expected(&self, params: &SystemParams, nbar: f64, theta: f64) -> Result<Vec<f64>> {
        let corr = InputCorrelationMatrix::vacuum_thermal(nbar);
        self.bin_members
            .iter()
            .map(|&(k0, k1)| {
                let mut acc = 0.0;
                for k in k0..k1 {
                    let f = k as f64 * self.resolution_hz;
                    let w = TWO_PI * f;
                    let s = match self.treatment {
                        CavityTreatment::Adiabatic => spectrum_full(w, theta, params, nbar).total,
                        CavityTreatment::Full => {
                            matrix_solve_spectrum_with(w, theta, params, &corr, Treatment::Exact)?
                        }
                    };
                    acc += 1.0 + boxcar_response(f, self.decimation, self.dt) * (s - 1.0);
                }
                Ok(acc / (k1 - k0) as f64)
            })
            .collect()
    }

    /// Bin means of the first `n` segments with their standard errors.
    pub fn subset(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        mean_and_stderr(&self.per_segment[..n.min(self.per_segment.len())])
    }
}

/// Power response `|sin(π f M dt) / (M sin(π f dt))|²` of an `M`-sample
/// boxcar average.
pub fn boxcar_response(f: f64, m: usize, dt: f64) -> f64 {
    let x = std::f64::consts::PI * f * dt;
    if x.sin().abs() < 1e-300 {
        return 1.0;
    }
    let r = (m as f64 * x).sin() / (m as f64 * x.sin());
    r * r
}

fn mean_and_stderr(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let bins = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; bins];
    let mut se = vec![f64::NAN; bins];
    if n == 0 {
        return (mean, se);
    }
    for (b, m) in mean.iter_mut().enumerate() {
        *m = rows.iter().map(|r| r[b]).sum::<f64>() / n as f64;
    }
    if n > 1 {
        for (b, s) in se.iter_mut().enumerate() {
            let var = rows.iter().map(|r| (r[b] - mean[b]).powi(2)).sum::<f64>() / (n - 1) as f64;
            *s = (var / n as f64).sqrt();
        }
    }
    (mean, se)
}

/// One integrator state plus the constants it needs.
struct Stepper {
    treatment: CavityTreatment,
    theta_phase: C,
    ske: f64,
    ski: f64,
    sgi: f64,
    g: f64,
    sa: f64,
    sb: f64,
    inv_d0: C,
    ea: C,
    pa: C,
    eb: C,
    pb: C,
    bound: f64,
}

impl Stepper {
    fn new(params: &SystemParams, nbar: f64, theta: f64, dt: f64) -> Self {
        let o = &params.optical;
        let treatment = CavityTreatment::for_params(params);
        let la = C::new(0.5 * o.kappa, params.drive.delta);
        let (wm, gm) = match treatment {
            CavityTreatment::Adiabatic => (params.omega_m, params.gamma),
            CavityTreatment::Full => (params.mechanical.omega_m0, params.mechanical.gamma_i),
        };
        let lb = C::new(0.5 * gm, wm);
        let prop = |l: C| {
            let e = (-l * dt).exp();
            (e, (1.0 - e) / l)
        };
        let (ea, pa) = prop(la);
        let (eb, pb) = prop(lb);
        let g = params.drive.g;
        let gmin = params.gamma.min(params.mechanical.gamma_i);
        Self {
            treatment,
            theta_phase: C::from_polar(1.0, -theta),
            ske: o.kappa_e.sqrt(),
            ski: o.kappa_i.sqrt(),
            sgi: params.mechanical.gamma_i.sqrt(),
            g,
            sa: 0.5 / dt.sqrt(),
            sb: ((nbar + 0.5) / (2.0 * dt)).sqrt(),
            inv_d0: la.inv(),
            ea,
            pa,
            eb,
            pb,
            bound: 1e6 * (nbar + 1.0) * (1.0 + 4.0 * g * g / (o.kappa * gmin)),
        }
    }

    fn gauss_pair(rng: &mut ChaCha8Rng) -> C {
        C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Advance one step; returns the homodyne current sample.
    #[inline]
    fn step(&self, a: &mut C, b: &mut C, rng: &mut ChaCha8Rng) -> f64 {
        let a_in = Self::gauss_pair(rng) * self.sa;
        let a_i = if self.ski > 0.0 {
            Self::gauss_pair(rng) * self.sa
        } else {
            C::new(0.0, 0.0)
        };
        let b_in = Self::gauss_pair(rng) * self.sb;
        let ig = C::new(0.0, self.g);
        let a_out = match self.treatment {
            CavityTreatment::Adiabatic => {
                let af = -(a_in * self.ske + a_i * self.ski) * self.inv_d0;
                let force = -ig * (2.0 * af.re) - b_in * self.sgi;
                let nb = self.eb * *b + self.pb * force;
                let x_mid = b.re + nb.re;
                *b = nb;
                a_in + self.ske * (af - ig * x_mid * self.inv_d0)
            }
            CavityTreatment::Full => {
                let fa = -ig * (2.0 * b.re) - a_in * self.ske - a_i * self.ski;
                let fb = -ig * (2.0 * a.re) - b_in * self.sgi;
                let na = self.ea * *a + self.pa * fa;
                let nb = self.eb * *b + self.pb * fb;
                let a_mid = 0.5 * (*a + na);
                *a = na;
                *b = nb;
                a_in + self.ske * a_mid
            }
        };
        2.0 * (self.theta_phase * a_out).re
    }

    fn healthy(&self, a: C, b: C) -> bool {
        let e = a.norm_sqr() + b.norm_sqr();
        e.is_finite() && e <= self.bound
    }
}

/// Homodyne-current PSD from seeded stochastic trajectories, averaged into
/// `cfg.bins` coarse bins and normalized so shot noise is 1.
pub fn sde_time_domain_psd(params: &SystemParams, nbar: f64, theta: f64, cfg: &SdeConfig) -> Result<SdeEstimate> {
    let treatment = CavityTreatment::for_params(params);
    let dt_max = max_stable_dt(params);
    let precondition = format!(
        "dt <= 0.01/max(kappa_eff, omega_m) = {dt_max:.4e} s ({} cavity, dt = {:.4e} s)",
        treatment.name(),
        cfg.dt
    );
    if !(cfg.dt > 0.0 && cfg.dt <= dt_max * (1.0 + 1e-12)) {
        return Err(Error::UnstableIntegration(format!("step-size precondition violated: {precondition}")));
    }
    if !(params.gamma > 0.0) {
        return Err(Error::UnstableIntegration("total mechanical damping is not positive".into()));
    }
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::invalid("sde", format!("bath occupation {nbar} must be finite and >= 0")));
    }
    let min_duration = 100.0 / params.gamma;
    if !(cfg.duration >= min_duration * (1.0 - 1e-12)) {
        return Err(Error::invalid(
            "sde",
            format!("duration {:.4e} s is shorter than 100/gamma = {min_duration:.4e} s", cfg.duration),
        ));
    }
    if cfg.segments < 2 || cfg.bins == 0 {
        return Err(Error::invalid("sde", "need at least 2 segments and 1 bin"));
    }
    let (lo, hi) = cfg.band_hz.unwrap_or_else(|| {
        let fm = rad_to_hz(params.omega_m);
        let w = fm / 70.0;
        let lo = fm - ((cfg.bins / 2) as f64 + 0.5) * w;
        (lo, lo + cfg.bins as f64 * w)
    });
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("sde", format!("analysis band [{lo}, {hi}] Hz is empty or negative")));
    }
    let m = cfg
        .decimation
        .unwrap_or_else(|| ((1.0 / (cfg.dt * 8.0 * hi)).floor() as usize).max(1));
    if m == 0 {
        return Err(Error::invalid("sde", "decimation must be at least 1"));
    }
    let dt_out = cfg.dt * m as f64;
    let fs = 1.0 / dt_out;
    if hi >= 0.5 * fs {
        return Err(Error::invalid(
            "sde",
            format!("band top {hi:.4e} Hz is above the decimated Nyquist frequency {:.4e} Hz", 0.5 * fs),
        ));
    }
    let t_seg = cfg.duration / cfg.segments as f64;
    let n = (t_seg / dt_out).round() as usize;
    let df = fs / n as f64;
    let width = (hi - lo) / cfg.bins as f64;
    let mut bin_members = Vec::with_capacity(cfg.bins);
    for j in 0..cfg.bins {
        let a = lo + width * j as f64;
        let k0 = (a / df).ceil() as usize;
        let k1 = ((a + width) / df).ceil() as usize;
        if k1 <= k0 {
            return Err(Error::invalid(
                "sde",
                format!("bin width {width:.4e} Hz is below the periodogram resolution {df:.4e} Hz"),
            ));
        }
        bin_members.push((k0, k1));
    }

    let stepper = Stepper::new(params, nbar, theta, cfg.dt);
    let burn_steps = (cfg.burn_in / params.gamma / cfg.dt).ceil() as usize;
    let window: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (TWO_PI * k as f64 / n as f64).cos())
        .collect();
    let w2: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let per_segment = (0..cfg.segments)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s as u64);
            let (mut a, mut b) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
            for k in 0..burn_steps {
                stepper.step(&mut a, &mut b, &mut rng);
                if k % 4096 == 0 && !stepper.healthy(a, b) {
                    return Err(unstable(&precondition, k as f64 * cfg.dt));
                }
            }
            let mut buf: Vec<C> = Vec::with_capacity(n);
            for (j, wj) in window.iter().enumerate() {
                let mut acc = 0.0;
                for _ in 0..m {
                    acc += stepper.step(&mut a, &mut b, &mut rng);
                }
                if !stepper.healthy(a, b) {
                    return Err(unstable(&precondition, (burn_steps + j * m) as f64 * cfg.dt));
                }
                buf.push(C::new(wj * acc / m as f64, 0.0));
            }
            fft.process(&mut buf);
            let scale = dt_out / w2;
            Ok(bin_members
                .iter()
                .map(|&(k0, k1)| buf[k0..k1].iter().map(|z| z.norm_sqr()).sum::<f64>() * scale / (k1 - k0) as f64)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let (mean, se) = mean_and_stderr(&per_segment);
    let centres = (0..cfg.bins).map(|j| lo + width * (j as f64 + 0.5)).collect();
    let mut trace = SpectrumTrace::new(centres, mean)?;
    trace.stderr = Some(se);
    for (k, v) in [
        ("source", "sde".to_string()),
        ("cavity", treatment.name().to_string()),
        ("seed", cfg.seed.to_string()),
        ("segments", cfg.segments.to_string()),
        ("resolution_hz", format!("{df:.9e}")),
        ("bin_width_hz", format!("{width:.9e}")),
        ("sample_rate_hz", format!("{fs:.9e}")),
        ("dt_s", format!("{:.9e}", cfg.dt)),
    ] {
        trace.meta.insert(k.to_string(), v);
    }
    Ok(SdeEstimate {
        trace,
        treatment,
        sample_rate_hz: fs,
        resolution_hz: df,
        decimation: m,
        dt: cfg.dt,
        bin_members,
        per_segment,
    })
}

fn unstable(precondition: &str, t: f64) -> Error {
    Error::UnstableIntegration(format!(
        "mode energy exceeded its bound at t = {t:.4e} s; check {precondition} and that the drive is dynamically stable"
    ))
}
