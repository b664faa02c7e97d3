//! Homodyne efficiency from an injected calibration tone.

use crate::error::{Error, Result};
use crate::noise::DetectionChain;
use crate::units::HBAR;

/// A coherent tone of known optical power injected ahead of the circulator,
/// reflected off the chip far from resonance and detected on the homodyne
/// receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneCalibration {
    /// Optical tone power at injection (W).
    pub tone_power_w: f64,
    /// Integrated detected tone power divided by the shot-noise PSD (Hz).
    /// An ideal receiver reads the detected photon flux.
    pub detected_tone_over_shot_hz: f64,
    pub lo_power_w: f64,
    /// Optical carrier angular frequency.
    pub omega_o: f64,
}

/// The LO must exceed the tone by at least this factor for the shot-noise
/// reference to be LO-dominated.
pub const MIN_LO_TO_TONE: f64 = 10.0;

/// Efficiency between injection point and the homodyne input:
/// circulator 1→2, chip coupling twice, circulator 2→3 and the path to the
/// receiver.
pub fn tone_path_upstream(chain: &DetectionChain) -> f64 {
    chain.eta_12 * chain.eta_cp * chain.eta_cp * chain.eta_23 * chain.eta_3h
}

pub fn homodyne_efficiency_from_tone(cal: &ToneCalibration, chain_upstream: &DetectionChain) -> Result<f64> {
    let ToneCalibration {
        tone_power_w,
        detected_tone_over_shot_hz,
        lo_power_w,
        omega_o,
    } = *cal;
    if !(tone_power_w > 0.0 && omega_o > 0.0 && detected_tone_over_shot_hz.is_finite()) {
        return Err(Error::Calibration("tone power and carrier frequency must be positive".into()));
    }
    if !(lo_power_w >= MIN_LO_TO_TONE * tone_power_w) {
        return Err(Error::Calibration(format!(
            "LO power {lo_power_w:.3e} W does not dominate tone power {tone_power_w:.3e} W"
        )));
    }
    let ideal = tone_path_upstream(chain_upstream) * tone_power_w / (HBAR * omega_o);
    let eta = detected_tone_over_shot_hz / ideal;
    if !(eta > 0.0 && eta <= 1.0 + 1e-12) {
        return Err(Error::Calibration(format!(
            "homodyne efficiency {eta:.4} outside (0, 1]: inconsistent calibration"
        )));
    }
    Ok(eta.min(1.0))
}
