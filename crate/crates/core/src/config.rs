//! Scenario configuration: sectioned `key = value` text (TOML syntax) with
//! the unit spelled out in every key name.
//!
//! Loading never stops at the first problem. Missing keys, wrong types,
//! unknown keys and record invariant violations are all collected and
//! reported together, each prefixed with its `section.key` path.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimator::{DetuningSearch, LmOptions};
use crate::noise::{AbsorptiveNoiseModel, BathModel, DetectionChain, ExtraModeNoise, LaserNoiseModel};
use crate::params::{MechanicalMode, OpticalMode, SystemParams};
use crate::scenario::{NoiseEnvironment, NoiseToggles, Scenario, SpectrumGrid};
use crate::units::hz_to_rad;

/// How the external coupling is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    EtaKappa(f64),
    KappaEOver2piHz(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    pub omega_o_over_2pi_hz: f64,
    pub kappa_over_2pi_hz: f64,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalConfig {
    pub omega_m0_over_2pi_hz: f64,
    pub gamma_i_over_2pi_hz: f64,
    pub g0_over_2pi_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub delta_over_kappa: f64,
    pub n_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathConfig {
    pub t_b0_k: f64,
    pub c0_k_per_photon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtraModeConfig {
    pub enabled: bool,
    pub freq_hz: f64,
    pub q: f64,
    pub g0_over_2pi_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptiveConfig {
    pub amp_coeff_per_photon: f64,
    pub ref_freq_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub spectrum: SpectrumGrid,
    pub theta_lock_rad: f64,
    pub lock_points: usize,
    /// Band searched for the squeezing minimum (Hz).
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumGrid::default(),
            theta_lock_rad: 0.0,
            lock_points: 91,
            band_lo_hz: 25e6,
            band_hi_hz: 31e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Thermometry curve CSV, relative to the config file.
    pub curve_csv: Option<String>,
    /// Lock-angle sweep CSV, relative to the config file.
    pub lock_sweep_csv: Option<String>,
    /// Intracavity photon number during the thermometry sweep.
    pub thermometry_n_c: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub delta_max_over_kappa: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            curve_csv: None,
            lock_sweep_csv: None,
            thermometry_n_c: 6.0,
            max_iterations: 200,
            step_tolerance: 1e-10,
            delta_max_over_kappa: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub seed: u64,
    pub draws: usize,
    pub decades: f64,
    pub sde: bool,
    /// SDE duration in units of `1/γ`.
    pub sde_gammas: f64,
    pub sde_segments: usize,
    pub sde_theta_rad: f64,
    pub sde_nbar: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            draws: 1000,
            decades: 3.0,
            sde: false,
            sde_gammas: 400.0,
            sde_segments: 40,
            sde_theta_rad: 0.3,
            sde_nbar: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub rel_noise: f64,
    pub detuning_points: usize,
    pub detuning_max_over_kappa: f64,
    pub lock_angles: usize,
    pub lock_span_rad: f64,
    pub lock_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            rel_noise: 0.01,
            detuning_points: 21,
            detuning_max_over_kappa: 0.2,
            lock_angles: 21,
            lock_span_rad: 0.6,
            lock_noise: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub optical: OpticalConfig,
    pub mechanical: MechanicalConfig,
    pub drive: DriveConfig,
    pub bath: BathConfig,
    pub extra_mode: ExtraModeConfig,
    pub laser_s_omega_omega_rad2_hz: f64,
    pub absorptive: AbsorptiveConfig,
    pub detection: DetectionChain,
    pub toggles: NoiseToggles,
    pub grid: GridConfig,
    pub fit: FitConfig,
    pub oracle: OracleConfig,
    pub synth: SynthConfig,
}

impl ScenarioConfig {
    pub fn optical_mode(&self) -> Result<OpticalMode> {
        let o = &self.optical;
        let kappa = hz_to_rad(o.kappa_over_2pi_hz);
        let kappa_e = match o.coupling {
            Coupling::EtaKappa(e) => e * kappa,
            Coupling::KappaEOver2piHz(k) => hz_to_rad(k),
        };
        OpticalMode::new(hz_to_rad(o.omega_o_over_2pi_hz), kappa, kappa_e)
    }

    pub fn mechanical_mode(&self) -> Result<MechanicalMode> {
        let m = &self.mechanical;
        MechanicalMode::new(
            hz_to_rad(m.omega_m0_over_2pi_hz),
            hz_to_rad(m.gamma_i_over_2pi_hz),
            hz_to_rad(m.g0_over_2pi_hz),
        )
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let o = self.optical_mode()?;
        SystemParams::new(o, self.mechanical_mode()?, self.drive.delta_over_kappa * o.kappa, self.drive.n_c)
    }

    pub fn noise_environment(&self) -> Result<NoiseEnvironment> {
        let e = &self.extra_mode;
        Ok(NoiseEnvironment {
            bath: BathModel::new(self.bath.t_b0_k, self.bath.c0_k_per_photon)?,
            extra_mode: if e.enabled {
                Some(ExtraModeNoise::new(hz_to_rad(e.freq_hz), e.q, hz_to_rad(e.g0_over_2pi_hz))?)
            } else {
                None
            },
            laser: LaserNoiseModel::new(self.laser_s_omega_omega_rad2_hz)?,
            absorptive: AbsorptiveNoiseModel::new(self.absorptive.amp_coeff_per_photon, self.absorptive.ref_freq_hz)?,
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.system_params()?, self.noise_environment()?, self.detection, self.toggles)
    }

    pub fn lm_options(&self) -> LmOptions {
        LmOptions {
            max_iterations: self.fit.max_iterations,
            step_tolerance: self.fit.step_tolerance,
            ..LmOptions::default()
        }
    }

    pub fn detuning_search(&self) -> Result<DetuningSearch> {
        let kappa = self.optical_mode()?.kappa;
        Ok(DetuningSearch {
            delta_max: self.fit.delta_max_over_kappa * kappa,
            ..DetuningSearch::red(kappa)
        })
    }

    /// Check every record invariant, collecting all failures.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut check = |path: &str, r: Result<()>| {
            if let Err(e) = r {
                errs.push(format!("{path}: {e}"));
            }
        };
        check("optical", self.optical_mode().map(|_| ()));
        check("mechanical", self.mechanical_mode().map(|_| ()));
        if self.optical_mode().is_ok() && self.mechanical_mode().is_ok() {
            check("drive", self.system_params().map(|_| ()));
        }
        check("noise", self.noise_environment().map(|_| ()));
        check("detection", self.detection.validate());
        let g = &self.grid;
        let s = &g.spectrum;
        if !(s.fine_hi_hz > s.fine_lo_hz && s.fine_lo_hz >= 0.0 && s.fine_points >= 2) {
            check("grid", Err(Error::Grid("fine grid must span a positive range with >= 2 points".into())));
        }
        if !(s.out_step_hz > 0.0 && s.out_points >= 1 && s.rbw_hz > 0.0) {
            check("grid", Err(Error::Grid("output step, point count and rbw must be positive".into())));
        }
        if !(g.band_hi_hz > g.band_lo_hz && g.band_lo_hz >= 0.0) {
            check("grid", Err(Error::Grid("band_hi_hz must exceed band_lo_hz".into())));
        }
        if g.lock_points < 2 {
            check("grid", Err(Error::Grid("lock_points must be at least 2".into())));
        }
        if !(self.fit.thermometry_n_c > 0.0 && self.fit.delta_max_over_kappa > 0.0 && self.fit.max_iterations > 0) {
            check("fit", Err(Error::invalid("FitConfig", "thermometry_n_c, delta_max_over_kappa and max_iterations must be positive")));
        }
        let y = &self.synth;
        if !(y.rel_noise >= 0.0 && y.lock_noise >= 0.0 && y.detuning_points >= 5 && y.lock_angles >= 7) {
            check("synth", Err(Error::invalid("SynthConfig", "need >= 5 detunings, >= 7 lock angles and non-negative noise")));
        }
        let o = &self.oracle;
        if !(o.draws > 0 && o.decades > 0.0 && o.sde_segments >= 2 && o.sde_gammas >= 100.0 && o.sde_nbar >= 0.0) {
            check("oracle", Err(Error::invalid("OracleConfig", "need draws > 0, decades > 0, sde_segments >= 2, sde_gammas >= 100")));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Canonical text form. Loading it gives back an equal config.
    pub fn to_canonical_string(&self) -> String {
        let mut w = Writer::default();
        let o = &self.optical;
        w.section("optical");
        w.f("omega_o_over_2pi_hz", o.omega_o_over_2pi_hz);
        w.f("kappa_over_2pi_hz", o.kappa_over_2pi_hz);
        match o.coupling {
            Coupling::EtaKappa(e) => w.f("eta_kappa", e),
            Coupling::KappaEOver2piHz(k) => w.f("kappa_e_over_2pi_hz", k),
        }
        let m = &self.mechanical;
        w.section("mechanical");
        w.f("omega_m0_over_2pi_hz", m.omega_m0_over_2pi_hz);
        w.f("gamma_i_over_2pi_hz", m.gamma_i_over_2pi_hz);
        w.f("g0_over_2pi_hz", m.g0_over_2pi_hz);
        w.section("drive");
        w.f("delta_over_kappa", self.drive.delta_over_kappa);
        w.f("n_c", self.drive.n_c);
        w.section("bath");
        w.f("t_b0_k", self.bath.t_b0_k);
        w.f("c0_k_per_photon", self.bath.c0_k_per_photon);
        let e = &self.extra_mode;
        w.section("extra_mode");
        w.b("enabled", e.enabled);
        w.f("freq_hz", e.freq_hz);
        w.f("q", e.q);
        w.f("g0_over_2pi_hz", e.g0_over_2pi_hz);
        w.section("laser");
        w.f("s_omega_omega_rad2_hz", self.laser_s_omega_omega_rad2_hz);
        w.section("absorptive");
        w.f("amp_coeff_per_photon", self.absorptive.amp_coeff_per_photon);
        w.f("ref_freq_hz", self.absorptive.ref_freq_hz);
        let d = &self.detection;
        w.section("detection");
        w.f("eta_cp", d.eta_cp);
        w.f("eta_12", d.eta_12);
        w.f("eta_23", d.eta_23);
        w.f("eta_3h", d.eta_3h);
        w.f("eta_hd", d.eta_hd);
        w.f("dark_ratio_db", d.dark_ratio_db);
        w.b("fold_dark", d.fold_dark);
        w.f("gain_slope_per_volt", d.gain_slope_per_volt);
        let t = &self.toggles;
        w.section("toggles");
        w.b("thermal", t.thermal);
        w.b("extra_mode", t.extra_mode);
        w.b("phase", t.phase);
        w.b("absorptive", t.absorptive);
        let g = &self.grid;
        w.section("grid");
        w.f("fine_lo_hz", g.spectrum.fine_lo_hz);
        w.f("fine_hi_hz", g.spectrum.fine_hi_hz);
        w.u("fine_points", g.spectrum.fine_points as u64);
        w.f("out_start_hz", g.spectrum.out_start_hz);
        w.f("out_step_hz", g.spectrum.out_step_hz);
        w.u("out_points", g.spectrum.out_points as u64);
        w.f("rbw_hz", g.spectrum.rbw_hz);
        w.f("theta_lock_rad", g.theta_lock_rad);
        w.u("lock_points", g.lock_points as u64);
        w.f("band_lo_hz", g.band_lo_hz);
        w.f("band_hi_hz", g.band_hi_hz);
        let f = &self.fit;
        w.section("fit");
        if let Some(p) = &f.curve_csv {
            w.s("curve_csv", p);
        }
        if let Some(p) = &f.lock_sweep_csv {
            w.s("lock_sweep_csv", p);
        }
        w.f("thermometry_n_c", f.thermometry_n_c);
        w.u("max_iterations", f.max_iterations as u64);
        w.f("step_tolerance", f.step_tolerance);
        w.f("delta_max_over_kappa", f.delta_max_over_kappa);
        let o = &self.oracle;
        w.section("oracle");
        w.u("seed", o.seed);
        w.u("draws", o.draws as u64);
        w.f("decades", o.decades);
        w.b("sde", o.sde);
        w.f("sde_gammas", o.sde_gammas);
        w.u("sde_segments", o.sde_segments as u64);
        w.f("sde_theta_rad", o.sde_theta_rad);
        w.f("sde_nbar", o.sde_nbar);
        let y = &self.synth;
        w.section("synth");
        w.u("seed", y.seed);
        w.f("rel_noise", y.rel_noise);
        w.u("detuning_points", y.detuning_points as u64);
        w.f("detuning_max_over_kappa", y.detuning_max_over_kappa);
        w.u("lock_angles", y.lock_angles as u64);
        w.f("lock_span_rad", y.lock_span_rad);
        w.f("lock_noise", y.lock_noise);
        w.out
    }
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn section(&mut self, name: &str) {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "[{name}]");
    }
    fn f(&mut self, k: &str, v: f64) {
        // Debug formatting is the shortest repr that round-trips and always
        // carries a '.' or an exponent, so it reads back as a float.
        let _ = writeln!(self.out, "{k} = {v:?}");
    }
    fn u(&mut self, k: &str, v: u64) {
        let _ = writeln!(self.out, "{k} = {v}");
    }
    fn b(&mut self, k: &str, v: bool) {
        let _ = writeln!(self.out, "{k} = {v}");
    }
    fn s(&mut self, k: &str, v: &str) {
        let _ = writeln!(self.out, "{k} = {}", Value::String(v.to_string()));
    }
}

/// One `[section]` being read: remembers which keys were consumed so that
/// the rest can be reported as unknown.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errs: &mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errs.push(format!("{name}: expected a [{name}] section"));
                None
            }
        };
        Self {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn opt_f64(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Float(x) => {
                errs.push(format!("{}.{key}: must be finite, got {x}", self.name));
                None
            }
            Value::Integer(i) => Some(*i as f64),
            other => {
                errs.push(format!("{}.{key}: expected a number, got {}", self.name, other.type_str()));
                None
            }
        }
    }

    fn f64(&mut self, key: &'static str, errs: &mut Vec<String>) -> f64 {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        match self.opt_f64(key, errs) {
            Some(x) => x,
            None => {
                if !present {
                    errs.push(format!("{}.{key}: missing required key", self.name));
                }
                f64::NAN
            }
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.opt_f64(key, errs).unwrap_or(default)
    }

    fn u64_or(&mut self, key: &'static str, default: u64, errs: &mut Vec<String>) -> u64 {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(other) => {
                errs.push(format!("{}.{key}: expected a non-negative integer, got {other}", self.name));
                default
            }
        }
    }

    fn usize_or(&mut self, key: &'static str, default: usize, errs: &mut Vec<String>) -> usize {
        self.u64_or(key, default as u64, errs) as usize
    }

    fn bool_or(&mut self, key: &'static str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                errs.push(format!("{}.{key}: expected true or false, got {other}", self.name));
                default
            }
        }
    }

    fn opt_string(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                errs.push(format!("{}.{key}: expected a string, got {other}", self.name));
                None
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(k.as_str()) {
                    errs.push(format!("{}.{k}: unknown key", self.name));
                }
            }
        }
    }
}

const SECTIONS: &[&str] = &[
    "optical",
    "mechanical",
    "drive",
    "bath",
    "extra_mode",
    "laser",
    "absorptive",
    "detection",
    "toggles",
    "grid",
    "fit",
    "oracle",
    "synth",
];

/// Parse and validate config text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut errs = Vec::new();
    for k in root.keys() {
        if !SECTIONS.contains(&k.as_str()) {
            errs.push(format!("{k}: unknown section or top-level key"));
        }
    }

    let mut s = Section::new(&root, "optical", &mut errs);
    let omega_o_over_2pi_hz = s.f64("omega_o_over_2pi_hz", &mut errs);
    let kappa_over_2pi_hz = s.f64("kappa_over_2pi_hz", &mut errs);
    let eta = s.opt_f64("eta_kappa", &mut errs);
    let ke = s.opt_f64("kappa_e_over_2pi_hz", &mut errs);
    let coupling = match (eta, ke) {
        (Some(e), None) => Coupling::EtaKappa(e),
        (None, Some(k)) => Coupling::KappaEOver2piHz(k),
        (Some(_), Some(_)) => {
            errs.push("optical: give only one of eta_kappa and kappa_e_over_2pi_hz".into());
            Coupling::EtaKappa(f64::NAN)
        }
        (None, None) => {
            errs.push("optical.eta_kappa: missing required key (or kappa_e_over_2pi_hz)".into());
            Coupling::EtaKappa(f64::NAN)
        }
    };
    s.finish(&mut errs);
    let optical = OpticalConfig {
        omega_o_over_2pi_hz,
        kappa_over_2pi_hz,
        coupling,
    };

    let mut s = Section::new(&root, "mechanical", &mut errs);
    let mechanical = MechanicalConfig {
        omega_m0_over_2pi_hz: s.f64("omega_m0_over_2pi_hz", &mut errs),
        gamma_i_over_2pi_hz: s.f64("gamma_i_over_2pi_hz", &mut errs),
        g0_over_2pi_hz: s.f64("g0_over_2pi_hz", &mut errs),
    };
    s.finish(&mut errs);

    let mut s = Section::new(&root, "drive", &mut errs);
    let drive = DriveConfig {
        delta_over_kappa: s.f64("delta_over_kappa", &mut errs),
        n_c: s.f64("n_c", &mut errs),
    };
    s.finish(&mut errs);

    let mut s = Section::new(&root, "bath", &mut errs);
    let bath = BathConfig {
        t_b0_k: s.f64("t_b0_k", &mut errs),
        c0_k_per_photon: s.f64("c0_k_per_photon", &mut errs),
    };
    s.finish(&mut errs);

    let mut s = Section::new(&root, "extra_mode", &mut errs);
    let extra_mode = ExtraModeConfig {
        enabled: s.bool_or("enabled", true, &mut errs),
        freq_hz: s.f64_or("freq_hz", 50e6, &mut errs),
        q: s.f64_or("q", 100.0, &mut errs),
        g0_over_2pi_hz: s.f64_or("g0_over_2pi_hz", 100e3, &mut errs),
    };
    s.finish(&mut errs);

    let mut s = Section::new(&root, "laser", &mut errs);
    let laser_s_omega_omega_rad2_hz = s.f64("s_omega_omega_rad2_hz", &mut errs);
    s.finish(&mut errs);

    let mut s = Section::new(&root, "absorptive", &mut errs);
    let absorptive = AbsorptiveConfig {
        amp_coeff_per_photon: s.f64("amp_coeff_per_photon", &mut errs),
        ref_freq_hz: s.f64_or("ref_freq_hz", 1e6, &mut errs),
    };
    s.finish(&mut errs);

    let dd = DetectionChain::default();
    let mut s = Section::new(&root, "detection", &mut errs);
    let detection = DetectionChain {
        eta_cp: s.f64("eta_cp", &mut errs),
        eta_12: s.f64("eta_12", &mut errs),
        eta_23: s.f64("eta_23", &mut errs),
        eta_3h: s.f64("eta_3h", &mut errs),
        eta_hd: s.f64("eta_hd", &mut errs),
        dark_ratio_db: s.f64_or("dark_ratio_db", dd.dark_ratio_db, &mut errs),
        fold_dark: s.bool_or("fold_dark", dd.fold_dark, &mut errs),
        gain_slope_per_volt: s.f64_or("gain_slope_per_volt", dd.gain_slope_per_volt, &mut errs),
    };
    s.finish(&mut errs);

    let td = NoiseToggles::default();
    let mut s = Section::new(&root, "toggles", &mut errs);
    let toggles = NoiseToggles {
        thermal: s.bool_or("thermal", td.thermal, &mut errs),
        extra_mode: s.bool_or("extra_mode", td.extra_mode, &mut errs),
        phase: s.bool_or("phase", td.phase, &mut errs),
        absorptive: s.bool_or("absorptive", td.absorptive, &mut errs),
    };
    s.finish(&mut errs);

    let gd = GridConfig::default();
    let sd = gd.spectrum;
    let mut s = Section::new(&root, "grid", &mut errs);
    let grid = GridConfig {
        spectrum: SpectrumGrid {
            fine_lo_hz: s.f64_or("fine_lo_hz", sd.fine_lo_hz, &mut errs),
            fine_hi_hz: s.f64_or("fine_hi_hz", sd.fine_hi_hz, &mut errs),
            fine_points: s.usize_or("fine_points", sd.fine_points, &mut errs),
            out_start_hz: s.f64_or("out_start_hz", sd.out_start_hz, &mut errs),
            out_step_hz: s.f64_or("out_step_hz", sd.out_step_hz, &mut errs),
            out_points: s.usize_or("out_points", sd.out_points, &mut errs),
            rbw_hz: s.f64_or("rbw_hz", sd.rbw_hz, &mut errs),
        },
        theta_lock_rad: s.f64_or("theta_lock_rad", gd.theta_lock_rad, &mut errs),
        lock_points: s.usize_or("lock_points", gd.lock_points, &mut errs),
        band_lo_hz: s.f64_or("band_lo_hz", gd.band_lo_hz, &mut errs),
        band_hi_hz: s.f64_or("band_hi_hz", gd.band_hi_hz, &mut errs),
    };
    s.finish(&mut errs);

    let fd = FitConfig::default();
    let mut s = Section::new(&root, "fit", &mut errs);
    let fit = FitConfig {
        curve_csv: s.opt_string("curve_csv", &mut errs),
        lock_sweep_csv: s.opt_string("lock_sweep_csv", &mut errs),
        thermometry_n_c: s.f64_or("thermometry_n_c", fd.thermometry_n_c, &mut errs),
        max_iterations: s.usize_or("max_iterations", fd.max_iterations, &mut errs),
        step_tolerance: s.f64_or("step_tolerance", fd.step_tolerance, &mut errs),
        delta_max_over_kappa: s.f64_or("delta_max_over_kappa", fd.delta_max_over_kappa, &mut errs),
    };
    s.finish(&mut errs);

    let od = OracleConfig::default();
    let mut s = Section::new(&root, "oracle", &mut errs);
    let oracle = OracleConfig {
        seed: s.u64_or("seed", od.seed, &mut errs),
        draws: s.usize_or("draws", od.draws, &mut errs),
        decades: s.f64_or("decades", od.decades, &mut errs),
        sde: s.bool_or("sde", od.sde, &mut errs),
        sde_gammas: s.f64_or("sde_gammas", od.sde_gammas, &mut errs),
        sde_segments: s.usize_or("sde_segments", od.sde_segments, &mut errs),
        sde_theta_rad: s.f64_or("sde_theta_rad", od.sde_theta_rad, &mut errs),
        sde_nbar: s.f64_or("sde_nbar", od.sde_nbar, &mut errs),
    };
    s.finish(&mut errs);

    let yd = SynthConfig::default();
    let mut s = Section::new(&root, "synth", &mut errs);
    let synth = SynthConfig {
        seed: s.u64_or("seed", yd.seed, &mut errs),
        rel_noise: s.f64_or("rel_noise", yd.rel_noise, &mut errs),
        detuning_points: s.usize_or("detuning_points", yd.detuning_points, &mut errs),
        detuning_max_over_kappa: s.f64_or("detuning_max_over_kappa", yd.detuning_max_over_kappa, &mut errs),
        lock_angles: s.usize_or("lock_angles", yd.lock_angles, &mut errs),
        lock_span_rad: s.f64_or("lock_span_rad", yd.lock_span_rad, &mut errs),
        lock_noise: s.f64_or("lock_noise", yd.lock_noise, &mut errs),
    };
    s.finish(&mut errs);

    let cfg = ScenarioConfig {
        optical,
        mechanical,
        drive,
        bath,
        extra_mode,
        laser_s_omega_omega_rad2_hz,
        absorptive,
        detection,
        toggles,
        grid,
        fit,
        oracle,
        synth,
    };
    // Invariant checks only make sense once every required number is in.
    if errs.is_empty() {
        if let Err(Error::Config(v)) = cfg.validate() {
            errs.extend(v);
        }
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errs))
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// The shipped default configuration text.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");
