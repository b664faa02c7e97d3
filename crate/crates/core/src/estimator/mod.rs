//! Inverse problems: device parameters from thermometry curves, detuning
//! from the critical lock angle, homodyne efficiency from a calibration
//! tone.

pub mod detuning;
pub mod lm;
pub mod synth;
pub mod thermometry;
pub mod tone;

pub use detuning::{infer_detuning, DetuningEstimate, DetuningSearch};
pub use lm::{levenberg_marquardt, LmOptions, LmOutcome};
pub use thermometry::{
    fit_thermometry, thermometry_point, Estimate, FitMethod, FitResult, ThermometryCurve,
    ThermometryTruth,
};
pub use tone::{homodyne_efficiency_from_tone, ToneCalibration};
