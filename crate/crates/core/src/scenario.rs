//! Full parameter bundle tying the ideal model, the noise stack and the
//! instrument together.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instrument::{
    cell_centered_grid, linear_grid, lock_to_quadrature, rbw_resample, SpectrumTrace,
    SqueezingMap, TraceComponents,
};
use crate::model;
use crate::noise::{
    self, AbsorptiveNoiseModel, BathModel, DetectionChain, ExtraModeNoise, LaserNoiseModel,
};
use crate::params::SystemParams;
use crate::units::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEnvironment {
    pub bath: BathModel,
    pub extra_mode: Option<ExtraModeNoise>,
    pub laser: LaserNoiseModel,
    pub absorptive: AbsorptiveNoiseModel,
}

/// Which contributions enter the detected spectrum. With `thermal` off the
/// principal mode sees a zero-temperature bath; the zero-point mechanical
/// terms stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseToggles {
    pub thermal: bool,
    pub extra_mode: bool,
    pub phase: bool,
    pub absorptive: bool,
}

impl NoiseToggles {
    pub const ALL: Self = Self {
        thermal: true,
        extra_mode: true,
        phase: true,
        absorptive: true,
    };
    pub const QUANTUM_ONLY: Self = Self {
        thermal: false,
        extra_mode: false,
        phase: false,
        absorptive: false,
    };
    pub const THERMAL_ONLY: Self = Self {
        thermal: true,
        ..Self::QUANTUM_ONLY
    };
}

impl Default for NoiseToggles {
    fn default() -> Self {
        Self::ALL
    }
}

/// Detected contributions at one frequency. They sum to the detected
/// normalized spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointComponents {
    pub vac: f64,
    pub thermal: f64,
    pub phase: f64,
    pub extra: f64,
    pub absorptive: f64,
}

impl PointComponents {
    pub fn total(&self) -> f64 {
        self.vac + self.thermal + self.phase + self.extra + self.absorptive
    }
}

/// Fine evaluation grid, analyzer output grid and resolution bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumGrid {
    pub fine_lo_hz: f64,
    pub fine_hi_hz: f64,
    pub fine_points: usize,
    pub out_start_hz: f64,
    pub out_step_hz: f64,
    pub out_points: usize,
    pub rbw_hz: f64,
}

impl Default for SpectrumGrid {
    fn default() -> Self {
        Self {
            fine_lo_hz: 0.0,
            fine_hi_hz: 40e6,
            fine_points: 50_000,
            out_start_hz: 0.0,
            out_step_hz: 80e3,
            out_points: 501,
            rbw_hz: 300e3,
        }
    }
}

impl SpectrumGrid {
    pub fn fine_freqs(&self) -> Vec<f64> {
        cell_centered_grid(self.fine_lo_hz, self.fine_hi_hz, self.fine_points)
    }

    pub fn out_freqs(&self) -> Vec<f64> {
        linear_grid(self.out_start_hz, self.out_step_hz, self.out_points)
    }

    /// Same fine density and output spacing restricted to `[lo, hi]` Hz,
    /// with enough fine-grid margin for the analyzer window.
    pub fn band(&self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Grid(format!("empty band [{lo}, {hi}] Hz")));
        }
        let h = (self.fine_hi_hz - self.fine_lo_hz) / self.fine_points as f64;
        let margin = 3.0 * self.rbw_hz;
        let f_lo = (lo - margin).max(self.fine_lo_hz);
        let f_hi = hi + margin;
        let first = ((lo - self.out_start_hz) / self.out_step_hz).ceil().max(0.0);
        let last = ((hi - self.out_start_hz) / self.out_step_hz).floor();
        if last < first {
            return Err(Error::Grid(format!("no output frequency in [{lo}, {hi}] Hz")));
        }
        Ok(Self {
            fine_lo_hz: f_lo,
            fine_hi_hz: f_hi,
            fine_points: ((f_hi - f_lo) / h).round() as usize,
            out_start_hz: self.out_start_hz + first * self.out_step_hz,
            out_points: (last - first) as usize + 1,
            ..*self
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub noise: NoiseEnvironment,
    pub detection: DetectionChain,
    pub toggles: NoiseToggles,
    perfect: SystemParams,
    lump: Option<SystemParams>,
}

impl Scenario {
    pub fn new(
        params: SystemParams,
        noise: NoiseEnvironment,
        detection: DetectionChain,
        toggles: NoiseToggles,
    ) -> Result<Self> {
        detection.validate()?;
        let perfect = params.perfectly_coupled();
        let lump = match noise.extra_mode {
            Some(l) => Some(l.lump_params(&perfect)?),
            None => None,
        };
        Ok(Self {
            params,
            noise,
            detection,
            toggles,
            perfect,
            lump,
        })
    }

    pub fn with_toggles(&self, toggles: NoiseToggles) -> Self {
        Self {
            toggles,
            ..self.clone()
        }
    }

    pub fn with_n_c(&self, n_c: f64) -> Result<Self> {
        Self::new(self.params.with_n_c(n_c)?, self.noise, self.detection, self.toggles)
    }

    pub fn eta_tot(&self) -> f64 {
        self.detection.eta_tot(self.params.optical.eta_kappa())
    }

    pub fn theta_for_lock(&self, theta_lock: f64) -> f64 {
        lock_to_quadrature(theta_lock, &self.params.optical, self.params.drive.delta).theta
    }

    pub fn bath_occupation(&self, omega: f64) -> Result<f64> {
        self.noise.bath.occupation(omega, self.params.drive.n_c)
    }

    /// Detected contributions at angular frequency `omega` and input-LO
    /// angle `theta`.
    ///
    /// Cavity-port loss is applied as a beam splitter of transmission
    /// `eta_kappa` on the perfectly coupled spectrum, which equals the
    /// two-port result. Phase noise is referenced to the waveguide output
    /// and only sees the setup losses.
    pub fn components(&self, omega: f64, theta: f64) -> Result<PointComponents> {
        let eta = self.eta_tot();
        let nbar_env = self.bath_occupation(omega)?;
        let nbar = if self.toggles.thermal { nbar_env } else { 0.0 };
        let q = model::spectrum_full(omega, theta, &self.perfect, nbar);
        let extra = match (&self.lump, self.toggles.extra_mode) {
            (Some(lp), true) => model::spectrum_full(omega, theta, lp, nbar_env).thermal,
            _ => 0.0,
        };
        let absorptive = if self.toggles.absorptive {
            noise::absorptive_psd(omega, theta, &self.params, &self.noise.absorptive)?
        } else {
            0.0
        };
        let phase = if self.toggles.phase {
            noise::phase_noise_psd(omega, theta, &self.params, &self.noise.laser)
        } else {
            0.0
        };
        Ok(PointComponents {
            vac: eta * q.vac + (1.0 - eta),
            thermal: eta * q.thermal,
            phase: self.detection.eta_detection() * phase,
            extra: eta * extra,
            absorptive: eta * absorptive,
        })
    }

    pub fn detected(&self, omega: f64, theta: f64) -> Result<f64> {
        Ok(self.components(omega, theta)?.total())
    }

    /// Unresampled detected trace at `freqs_hz` for one lock angle.
    pub fn fine_trace(&self, theta_lock: f64, freqs_hz: &[f64]) -> Result<SpectrumTrace> {
        let theta = self.theta_for_lock(theta_lock);
        let mut values = Vec::with_capacity(freqs_hz.len());
        let mut comp = TraceComponents::with_capacity(freqs_hz.len());
        for &f in freqs_hz {
            let c = self.components(TWO_PI * f, theta)?;
            values.push(c.total());
            comp.s_vac.push(c.vac);
            comp.s_thermal.push(c.thermal);
            comp.s_phase.push(c.phase);
            comp.s_extra.push(c.extra);
            comp.s_absorptive.push(c.absorptive);
        }
        let mut t = SpectrumTrace::new(freqs_hz.to_vec(), values)?;
        t.components = Some(comp);
        t.meta.insert("theta_lock_rad".into(), format!("{theta_lock}"));
        t.meta.insert("theta_rad".into(), format!("{theta}"));
        t.meta.insert("n_c".into(), format!("{}", self.params.drive.n_c));
        Ok(t)
    }

    /// Analyzer trace at one lock angle.
    pub fn trace(&self, theta_lock: f64, grid: &SpectrumGrid) -> Result<SpectrumTrace> {
        let fine = self.fine_trace(theta_lock, &grid.fine_freqs())?;
        rbw_resample(&fine, grid.rbw_hz, &grid.out_freqs())
    }
}

/// Analyzer traces for every lock angle, one row each. Rows are evaluated
/// in parallel and assembled in axis order.
pub fn assemble_density_map(
    theta_locks: &[f64],
    grid: &SpectrumGrid,
    scenario: &Scenario,
) -> Result<SqueezingMap> {
    let fine = grid.fine_freqs();
    let out = grid.out_freqs();
    let rows = theta_locks
        .par_iter()
        .map(|&tl| {
            let t = scenario.fine_trace(tl, &fine)?;
            Ok(rbw_resample(&t, grid.rbw_hz, &out)?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    let map = SqueezingMap {
        theta_locks: theta_locks.to_vec(),
        freqs_hz: out,
        values: rows,
    };
    map.validate()?;
    Ok(map)
}

/// `n` lock angles evenly covering one period `[-π/2, π/2)`.
pub fn lock_angle_axis(n: usize) -> Vec<f64> {
    let step = std::f64::consts::PI / n as f64;
    (0..n).map(|k| -std::f64::consts::FRAC_PI_2 + step * k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMinimum {
    pub theta_lock: f64,
    pub freq_hz: f64,
    pub value: f64,
}

/// Smallest detected value over the lock angles and the analyzer band
/// `[lo, hi]` Hz.
pub fn band_minimum(
    scenario: &Scenario,
    theta_locks: &[f64],
    grid: &SpectrumGrid,
    lo: f64,
    hi: f64,
) -> Result<BandMinimum> {
    let g = grid.band(lo, hi)?;
    let map = assemble_density_map(theta_locks, &g, scenario)?;
    let (i, j, v) = map
        .min()
        .ok_or_else(|| Error::Grid("empty density map".into()))?;
    Ok(BandMinimum {
        theta_lock: map.theta_locks[i],
        freq_hz: map.freqs_hz[j],
        value: v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n_c: f64,
    pub full: BandMinimum,
    pub no_thermal: BandMinimum,
}

/// Band minimum of the configured model and of the zero-temperature,
/// technical-noise-free model at each photon number.
pub fn power_sweep(
    scenario: &Scenario,
    n_cs: &[f64],
    theta_locks: &[f64],
    grid: &SpectrumGrid,
    band_hz: (f64, f64),
) -> Result<Vec<SweepPoint>> {
    n_cs.iter()
        .map(|&n_c| {
            let s = scenario.with_n_c(n_c)?;
            let full = band_minimum(&s, theta_locks, grid, band_hz.0, band_hz.1)?;
            let quiet = s.with_toggles(NoiseToggles::QUANTUM_ONLY);
            let no_thermal = band_minimum(&quiet, theta_locks, grid, band_hz.0, band_hz.1)?;
            Ok(SweepPoint {
                n_c,
                full,
                no_thermal,
            })
        })
        .collect()
}

/// The sweep point with the deepest squeezing in the configured model.
pub fn saturation_point(sweep: &[SweepPoint]) -> Option<SweepPoint> {
    sweep
        .iter()
        .copied()
        .min_by(|a, b| a.full.value.total_cmp(&b.full.value))
}
