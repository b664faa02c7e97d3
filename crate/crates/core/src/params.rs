//! Parameter records for the optical mode, the mechanical mode and the drive.
//!
//! Positions are measured in units of the zero-point amplitude, so the
//! effective mass never appears. All rates are angular (rad/s).

use crate::error::{Error, Result};
use crate::model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalMode {
    pub omega_o: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub kappa_i: f64,
}

impl OpticalMode {
    pub fn new(omega_o: f64, kappa: f64, kappa_e: f64) -> Result<Self> {
        const R: &str = "OpticalMode";
        if !(omega_o.is_finite() && omega_o > 0.0) {
            return Err(Error::invalid(R, format!("omega_o must be positive, got {omega_o}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid(R, format!("kappa must be positive, got {kappa}")));
        }
        if !(kappa_e.is_finite() && kappa_e > 0.0) {
            return Err(Error::invalid(R, format!("kappa_e must be positive, got {kappa_e}")));
        }
        if kappa_e > kappa {
            return Err(Error::invalid(
                R,
                format!("kappa_e ({kappa_e}) exceeds total kappa ({kappa})"),
            ));
        }
        Ok(Self {
            omega_o,
            kappa,
            kappa_e,
            kappa_i: kappa - kappa_e,
        })
    }

    pub fn from_coupling_efficiency(omega_o: f64, kappa: f64, eta_kappa: f64) -> Result<Self> {
        Self::new(omega_o, kappa, eta_kappa * kappa)
    }

    /// Cavity-waveguide coupling efficiency `kappa_e / kappa`.
    pub fn eta_kappa(&self) -> f64 {
        self.kappa_e / self.kappa
    }

    pub fn q_optical(&self) -> f64 {
        self.omega_o / self.kappa
    }

    /// Same total linewidth with every photon leaving through the waveguide.
    pub fn perfectly_coupled(&self) -> Self {
        Self {
            kappa_e: self.kappa,
            kappa_i: 0.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalMode {
    pub omega_m0: f64,
    pub gamma_i: f64,
    pub q_m: f64,
    pub g0: f64,
}

impl MechanicalMode {
    /// `g0 = 0` is accepted (an uncoupled mode); the damping must be
    /// strictly positive for the transfer functions to stay finite.
    pub fn new(omega_m0: f64, gamma_i: f64, g0: f64) -> Result<Self> {
        const R: &str = "MechanicalMode";
        if !(omega_m0.is_finite() && omega_m0 > 0.0) {
            return Err(Error::invalid(R, format!("omega_m0 must be positive, got {omega_m0}")));
        }
        if !(gamma_i.is_finite() && gamma_i > 0.0) {
            return Err(Error::invalid(R, format!("gamma_i must be positive, got {gamma_i}")));
        }
        if !(g0.is_finite() && g0 >= 0.0) {
            return Err(Error::invalid(R, format!("g0 must be non-negative, got {g0}")));
        }
        Ok(Self {
            omega_m0,
            gamma_i,
            q_m: omega_m0 / gamma_i,
            g0,
        })
    }

    pub fn from_quality_factor(omega_m0: f64, q_m: f64, g0: f64) -> Result<Self> {
        if !(q_m.is_finite() && q_m > 0.0) {
            return Err(Error::invalid("MechanicalMode", format!("q_m must be positive, got {q_m}")));
        }
        let mut m = Self::new(omega_m0, omega_m0 / q_m, g0)?;
        m.q_m = q_m;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCondition {
    /// Laser detuning `omega_o - omega_L`; red detuning is positive.
    pub delta: f64,
    /// Mean intracavity photon number.
    pub n_c: f64,
    /// Parametric coupling `g0 sqrt(n_c)`.
    pub g: f64,
    /// Measurement rate `4 G^2 / kappa`.
    pub gamma_meas: f64,
}

impl DriveCondition {
    pub fn new(delta: f64, n_c: f64, g0: f64, kappa: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid("DriveCondition", "detuning must be finite"));
        }
        if !(n_c.is_finite() && n_c >= 0.0) {
            return Err(Error::invalid(
                "DriveCondition",
                format!("n_c must be non-negative, got {n_c}"),
            ));
        }
        let g = g0 * n_c.sqrt();
        Ok(Self {
            delta,
            n_c,
            g,
            gamma_meas: 4.0 * g * g / kappa,
        })
    }
}

/// Optical mode, mechanical mode and drive, with the renormalized
/// mechanical frequency and damping evaluated once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub optical: OpticalMode,
    pub mechanical: MechanicalMode,
    pub drive: DriveCondition,
    /// `omega_m0 + delta_omega_m`.
    pub omega_m: f64,
    /// `gamma_i + gamma_om`.
    pub gamma: f64,
}

impl SystemParams {
    pub fn new(
        optical: OpticalMode,
        mechanical: MechanicalMode,
        delta: f64,
        n_c: f64,
    ) -> Result<Self> {
        let drive = DriveCondition::new(delta, n_c, mechanical.g0, optical.kappa)?;
        let (d_omega, gamma_om) =
            model::optical_spring(drive.g, delta, optical.kappa, mechanical.omega_m0);
        let gamma = mechanical.gamma_i + gamma_om;
        if !(gamma > 0.0) {
            return Err(Error::invalid(
                "SystemParams",
                format!(
                    "total mechanical damping {gamma:.6e} rad/s is not positive (parametric instability)"
                ),
            ));
        }
        Ok(Self {
            optical,
            mechanical,
            drive,
            omega_m: mechanical.omega_m0 + d_omega,
            gamma,
        })
    }

    pub fn with_n_c(&self, n_c: f64) -> Result<Self> {
        Self::new(self.optical, self.mechanical, self.drive.delta, n_c)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.optical, self.mechanical, delta, self.drive.n_c)
    }

    pub fn with_mechanical(&self, mechanical: MechanicalMode) -> Result<Self> {
        Self::new(self.optical, mechanical, self.drive.delta, self.drive.n_c)
    }

    pub fn with_optical(&self, optical: OpticalMode) -> Result<Self> {
        Self::new(optical, self.mechanical, self.drive.delta, self.drive.n_c)
    }

    /// Perfect waveguide coupling at the same total linewidth.
    pub fn perfectly_coupled(&self) -> Self {
        Self {
            optical: self.optical.perfectly_coupled(),
            ..*self
        }
    }

    pub fn measurement_ratio(&self) -> f64 {
        self.drive.gamma_meas / self.omega_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;

    #[test]
    fn optical_invariants() {
        let o = OpticalMode::new(1e15, 10.0, 6.0).unwrap();
        assert_eq!(o.kappa_i, 4.0);
        assert!((o.eta_kappa() - 0.6).abs() < 1e-15);
        assert!(OpticalMode::new(1e15, 10.0, 11.0).is_err());
        assert!(OpticalMode::new(1e15, 10.0, 0.0).is_err());
        assert!(OpticalMode::new(1e15, -1.0, 0.5).is_err());
    }

    #[test]
    fn mechanical_rejects_zero_damping() {
        assert!(MechanicalMode::new(1.0, 0.0, 0.1).is_err());
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), 0.0).unwrap();
        assert!((m.q_m - m.omega_m0 / m.gamma_i).abs() / m.q_m < 1e-9);
    }

    #[test]
    fn drive_rates() {
        let d = DriveCondition::new(0.0, 790.0, hz_to_rad(750e3), hz_to_rad(3.42e9)).unwrap();
        assert!((d.g - hz_to_rad(750e3) * 790f64.sqrt()).abs() / d.g < 1e-12);
        assert!((d.gamma_meas - 4.0 * d.g * d.g / hz_to_rad(3.42e9)).abs() / d.gamma_meas < 1e-12);
        // Roughly 0.52 MHz measurement rate at the reference operating point.
        assert!((d.gamma_meas / hz_to_rad(1.0) - 0.52e6).abs() < 0.01e6);
        assert!(DriveCondition::new(0.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn unstable_blue_drive_rejected() {
        let o = OpticalMode::new(1e15, hz_to_rad(3.42e9), hz_to_rad(3.42e9)).unwrap();
        let m = MechanicalMode::new(hz_to_rad(28e6), hz_to_rad(172.0), hz_to_rad(750e3)).unwrap();
        assert!(SystemParams::new(o, m, -0.1 * o.kappa, 790.0).is_err());
        assert!(SystemParams::new(o, m, 0.1 * o.kappa, 790.0).is_ok());
    }
}
