//! Environment and technical noise beyond the single-mode model, and the
//! lossy detection chain.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instrument::reflection_coefficient;
use crate::model;
use crate::params::{MechanicalMode, SystemParams};
use crate::units::{HBAR, K_B, TWO_PI};

/// High-temperature occupation `k_B T / (ħ ω)`.
pub fn bath_occupation(omega: f64, t_b: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    Ok(K_B * t_b / (HBAR * omega))
}

/// Coherent oscillations before one thermal phonon enters,
/// `Q_m ħ ω_m / (k_B T)`.
pub fn coherence_ratio(q_m: f64, omega_m: f64, t_b: f64) -> Result<f64> {
    Ok(q_m / bath_occupation(omega_m, t_b)?)
}

/// Structural damping is the only law implemented: `gamma_i` is flat in
/// frequency and the bath occupation is evaluated per frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingLaw {
    #[default]
    Structural,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathModel {
    pub t_b0: f64,
    /// Heating per intracavity photon (K).
    pub c0: f64,
    pub damping_law: DampingLaw,
}

impl BathModel {
    pub fn new(t_b0: f64, c0: f64) -> Result<Self> {
        if !(t_b0.is_finite() && t_b0 > 0.0) {
            return Err(Error::invalid("BathModel", format!("t_b0 must be positive, got {t_b0}")));
        }
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::invalid("BathModel", format!("c0 must be non-negative, got {c0}")));
        }
        Ok(Self {
            t_b0,
            c0,
            damping_law: DampingLaw::Structural,
        })
    }

    pub fn effective_temperature(&self, n_c: f64) -> f64 {
        self.t_b0 + self.c0 * n_c
    }

    /// Occupation at `omega` with the photon-dependent heating applied.
    pub fn occupation(&self, omega: f64, n_c: f64) -> Result<f64> {
        bath_occupation(omega, self.effective_temperature(n_c))
    }
}

pub fn effective_temperature(bath: &BathModel, n_c: f64) -> f64 {
    bath.effective_temperature(n_c)
}

/// Low-Q mechanical resonance standing in for the family of weakly coupled
/// modes that set the broadband thermal floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraModeNoise {
    pub omega_lump: f64,
    pub q_lump: f64,
    pub g0_lump: f64,
}

impl ExtraModeNoise {
    pub fn new(omega_lump: f64, q_lump: f64, g0_lump: f64) -> Result<Self> {
        MechanicalMode::from_quality_factor(omega_lump, q_lump, g0_lump)?;
        Ok(Self {
            omega_lump,
            q_lump,
            g0_lump,
        })
    }

    /// The lumped mode driven by the same optical mode and drive as `params`.
    pub fn lump_params(&self, params: &SystemParams) -> Result<SystemParams> {
        let mech = MechanicalMode::from_quality_factor(self.omega_lump, self.q_lump, self.g0_lump)?;
        params.with_mechanical(mech)
    }
}

/// Thermal contribution of the lumped mode at `omega`.
pub fn extra_mode_psd(
    omega: f64,
    theta: f64,
    params: &SystemParams,
    lump: &ExtraModeNoise,
    nbar_lump: f64,
) -> Result<f64> {
    let lp = lump.lump_params(params)?;
    Ok(model::spectrum_full(omega, theta, &lp, nbar_lump).thermal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserNoiseModel {
    /// Flat frequency-noise PSD (rad²·Hz).
    pub s_omega_omega: f64,
}

impl LaserNoiseModel {
    pub fn new(s_omega_omega: f64) -> Result<Self> {
        if !(s_omega_omega.is_finite() && s_omega_omega >= 0.0) {
            return Err(Error::invalid(
                "LaserNoiseModel",
                format!("s_omega_omega must be non-negative, got {s_omega_omega}"),
            ));
        }
        Ok(Self { s_omega_omega })
    }
}

/// Laser phase noise converted to amplitude noise by the cavity dispersion,
/// normalized to shot noise at the waveguide output.
pub fn phase_noise_psd(omega: f64, theta: f64, params: &SystemParams, laser: &LaserNoiseModel) -> f64 {
    if laser.s_omega_omega == 0.0 || omega == 0.0 {
        return 0.0;
    }
    let o = &params.optical;
    let delta = params.drive.delta;
    let r0 = reflection_coefficient(0.0, o, delta);
    let rp = reflection_coefficient(omega, o, delta) - r0;
    let rm = reflection_coefficient(-omega, o, delta) - r0;
    let f = Complex64::from_polar(1.0, -theta) * rp - Complex64::from_polar(1.0, theta) * rm.conj();
    // Input photon flux that sustains n_c photons in the cavity.
    let flux = params.drive.n_c * model::cavity_d(delta, o.kappa, 0.0).norm_sqr() / o.kappa_e;
    flux * f.norm_sqr() * laser.s_omega_omega / (omega * omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptiveNoiseModel {
    /// Normalized PSD per intracavity photon at `omega_ref`.
    pub amp_coeff: f64,
    pub omega_ref: f64,
}

impl AbsorptiveNoiseModel {
    pub const EXPONENT: f64 = -0.5;

    pub fn new(amp_coeff: f64, ref_freq_hz: f64) -> Result<Self> {
        if !(amp_coeff.is_finite() && amp_coeff >= 0.0) {
            return Err(Error::invalid(
                "AbsorptiveNoiseModel",
                format!("amp_coeff must be non-negative, got {amp_coeff}"),
            ));
        }
        if !(ref_freq_hz.is_finite() && ref_freq_hz > 0.0) {
            return Err(Error::invalid(
                "AbsorptiveNoiseModel",
                format!("reference frequency must be positive, got {ref_freq_hz}"),
            ));
        }
        Ok(Self {
            amp_coeff,
            omega_ref: TWO_PI * ref_freq_hz,
        })
    }
}

/// Linewidth-fluctuation noise, `amp · n_c · (ω_ref/ω)^½ · cos²(θ − θ*)`,
/// where `θ*` is the angle at which the mechanical signal vanishes.
pub fn absorptive_psd(
    omega: f64,
    theta: f64,
    params: &SystemParams,
    model_: &AbsorptiveNoiseModel,
) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    if model_.amp_coeff == 0.0 {
        return Ok(0.0);
    }
    let theta_star =
        model::zero_transduction_angle(params.omega_m, params.drive.delta, params.optical.kappa);
    let c = (theta - theta_star).cos();
    Ok(model_.amp_coeff * params.drive.n_c * (model_.omega_ref / omega).sqrt() * c * c)
}

/// Beam-splitter loss: `eta · s + (1 − eta)`.
pub fn mix_loss(s: f64, eta: f64) -> f64 {
    eta * s + (1.0 - eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain {
    pub eta_cp: f64,
    pub eta_12: f64,
    pub eta_23: f64,
    pub eta_3h: f64,
    pub eta_hd: f64,
    pub dark_ratio_db: f64,
    /// Fold the dark-noise equivalent efficiency into `eta_tot`.
    pub fold_dark: bool,
    pub gain_slope_per_volt: f64,
}

impl Default for DetectionChain {
    fn default() -> Self {
        Self {
            eta_cp: 0.90,
            eta_12: 0.85,
            eta_23: 0.88,
            eta_3h: 0.92,
            eta_hd: 0.66,
            dark_ratio_db: 10.4,
            fold_dark: false,
            gain_slope_per_volt: -0.0096,
        }
    }
}

impl DetectionChain {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_cp", self.eta_cp),
            ("eta_12", self.eta_12),
            ("eta_23", self.eta_23),
            ("eta_3h", self.eta_3h),
            ("eta_hd", self.eta_hd),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid("DetectionChain", format!("{name} = {v} outside (0, 1]")));
            }
        }
        if !(self.dark_ratio_db.is_finite() && self.dark_ratio_db > 0.0) {
            return Err(Error::invalid(
                "DetectionChain",
                format!("dark_ratio_db must be positive, got {}", self.dark_ratio_db),
            ));
        }
        if !self.gain_slope_per_volt.is_finite() {
            return Err(Error::invalid("DetectionChain", "gain slope must be finite"));
        }
        Ok(())
    }

    /// Waveguide-to-detector efficiency. The circulator input leg `eta_12`
    /// sits before the cavity and does not dilute the reflected signal.
    pub fn eta_setup(&self) -> f64 {
        self.eta_cp * self.eta_23 * self.eta_3h * self.eta_hd
    }

    /// Efficiency equivalent of dark noise `dark_ratio_db` below shot noise.
    pub fn eta_dark(&self) -> f64 {
        1.0 / (1.0 + 10f64.powf(-self.dark_ratio_db / 10.0))
    }

    /// Setup efficiency with the dark-noise equivalent folded in if enabled.
    pub fn eta_detection(&self) -> f64 {
        if self.fold_dark {
            self.eta_setup() * self.eta_dark()
        } else {
            self.eta_setup()
        }
    }

    pub fn eta_tot(&self, eta_kappa: f64) -> f64 {
        self.eta_detection() * eta_kappa
    }

    /// Undo the gain drop of an unbalanced detector at DC voltage `v_dc`.
    pub fn correct_gain(&self, s_meas: f64, v_dc: f64) -> Result<f64> {
        gain_unbalance_correction(s_meas, v_dc, self.gain_slope_per_volt)
    }
}

/// `η_tot · s_out + (1 − η_tot)` with `η_tot = η_setup · η_κ`.
pub fn apply_detection_chain(s_out: f64, chain: &DetectionChain, eta_kappa: f64) -> f64 {
    mix_loss(s_out, chain.eta_tot(eta_kappa))
}

/// `s_meas / (1 + slope · v_dc)`.
pub fn gain_unbalance_correction(s_meas: f64, v_dc: f64, slope_per_volt: f64) -> Result<f64> {
    let denom = 1.0 + slope_per_volt * v_dc;
    if !(denom > 0.0) {
        return Err(Error::GainCorrectionDomain(denom));
    }
    Ok(s_meas / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::OpticalMode;
    use crate::units::hz_to_rad;
    use approx::assert_relative_eq;

    fn params(kappa_e_frac: f64, delta_frac: f64, n_c: f64) -> SystemParams {
        let k = hz_to_rad(3.42e9);
        let o = OpticalMode::new(hz_to_rad(194e12), k, kappa_e_frac * k).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), hz_to_rad(750e3)).unwrap();
        SystemParams::new(o, m, delta_frac * k, n_c).unwrap()
    }

    #[test]
    fn occupation() {
        let n = bath_occupation(hz_to_rad(28e6), 16.0).unwrap();
        assert!((n - 1.19e4).abs() < 0.01e4);
        let n50 = bath_occupation(hz_to_rad(50e6), 16.0).unwrap();
        assert_relative_eq!(n50, n * 28.0 / 50.0, max_relative = 1e-12);
        assert_relative_eq!(
            bath_occupation(1e8, 32.0).unwrap(),
            2.0 * bath_occupation(1e8, 16.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(bath_occupation(0.0, 16.0).is_err());
    }

    #[test]
    fn heating() {
        let b = BathModel::new(16.0, 3.2e-4).unwrap();
        assert_eq!(b.effective_temperature(0.0), 16.0);
        assert!(b.effective_temperature(4.4e4) > 30.0);
        assert_eq!(BathModel::new(16.0, 0.0).unwrap().effective_temperature(1e4), 16.0);
    }

    #[test]
    fn phase_noise_small_frequency_form() {
        let p = params(1.0, 0.0, 790.0);
        let laser = LaserNoiseModel::new(6e3).unwrap();
        let k = p.optical.kappa;
        let flux = 790.0 * k / 4.0;
        for theta in [0.3f64, 1.0, -0.7] {
            let w = hz_to_rad(1e6);
            let expect = flux * 64.0 * theta.sin().powi(2) * 6e3 / (k * k);
            assert_relative_eq!(phase_noise_psd(w, theta, &p, &laser), expect, max_relative = 1e-3);
        }
        assert!(phase_noise_psd(1e7, 0.0, &p, &laser) < 1e-12);
    }

    #[test]
    fn absorptive_law() {
        let p = params(0.54, 0.044, 790.0);
        let a = AbsorptiveNoiseModel::new(5e-4, 1e6).unwrap();
        let s1 = absorptive_psd(1e7, 0.4, &p, &a).unwrap();
        let s2 = absorptive_psd(2e7, 0.4, &p, &a).unwrap();
        assert_relative_eq!(s2 / s1, 1.0 / 2f64.sqrt(), max_relative = 1e-12);
        assert!(absorptive_psd(0.0, 0.4, &p, &a).is_err());
        let zero = AbsorptiveNoiseModel::new(0.0, 1e6).unwrap();
        assert_eq!(absorptive_psd(1e7, 0.4, &p, &zero).unwrap(), 0.0);
    }

    #[test]
    fn extra_mode_tail() {
        let p = params(0.54, 0.044, 790.0);
        let lump = ExtraModeNoise::new(hz_to_rad(50e6), 100.0, hz_to_rad(100e3)).unwrap();
        let w = hz_to_rad(2e6);
        let nb = |w: f64| bath_occupation(w, 16.0).unwrap();
        let s1 = extra_mode_psd(w, 1.0, &p, &lump, nb(w)).unwrap();
        let s2 = extra_mode_psd(w / 2.0, 1.0, &p, &lump, nb(w / 2.0)).unwrap();
        assert!(s1 > 0.0);
        assert_relative_eq!(s2 / s1, 2.0, max_relative = 0.05);
        let none = ExtraModeNoise::new(hz_to_rad(50e6), 100.0, 0.0).unwrap();
        assert_eq!(extra_mode_psd(w, 1.0, &p, &none, nb(w)).unwrap(), 0.0);
    }

    #[test]
    fn detection_chain() {
        let c = DetectionChain::default();
        c.validate().unwrap();
        assert_relative_eq!(c.eta_setup(), 0.9 * 0.88 * 0.92 * 0.66, max_relative = 1e-12);
        assert!((c.eta_tot(0.54) - 0.26).abs() < 0.005);
        assert_eq!(apply_detection_chain(1.0, &c, 0.54), 1.0);
        let out = mix_loss(0.931, 0.26);
        assert!((out - 0.982).abs() < 5e-4);
        let bad = DetectionChain { eta_hd: 1.2, ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gain_correction() {
        assert_eq!(gain_unbalance_correction(0.97, 0.0, -0.0096).unwrap(), 0.97);
        let c = gain_unbalance_correction(0.97, 1.0, -0.0096).unwrap();
        assert!(c > 0.97 && c < 0.97 * 1.02);
        assert!(gain_unbalance_correction(0.97, 200.0, -0.0096).is_err());
    }
}
