//! Command runner behind the `optosqueeze` binary.
//!
//! Every command reads one config file and writes CSV files into an output
//! directory. Relative data paths in the config resolve against the
//! directory holding the config file.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use optosqueeze::config::{load_config, ScenarioConfig};
use optosqueeze::csvio::{
    read_curve, read_lock_sweep, write_curve, write_fit, write_lock_sweep, write_map, write_trace,
};
use optosqueeze::estimator::detuning::model_critical_lock;
use optosqueeze::estimator::synth::{detuning_grid, synth_lock_sweep, synth_thermometry};
use optosqueeze::estimator::{fit_thermometry, infer_detuning, ThermometryTruth};
use optosqueeze::model::quasi_static_spectrum;
use optosqueeze::oracle::{closed_form_equivalence, sde_time_domain_psd, SdeConfig};
use optosqueeze::scenario::{assemble_density_map, lock_angle_axis};
use optosqueeze::units::rad_to_hz;
use optosqueeze::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest relative disagreement tolerated by `oracle-check`.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    DensityMap,
    QuasiStatic,
    ThermometryFit,
    InferDetuning,
    OracleCheck,
    Synth,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::DensityMap,
        Command::QuasiStatic,
        Command::ThermometryFit,
        Command::InferDetuning,
        Command::OracleCheck,
        Command::Synth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::DensityMap => "densitymap",
            Command::QuasiStatic => "quasistatic",
            Command::ThermometryFit => "thermometry-fit",
            Command::InferDetuning => "infer-detuning",
            Command::OracleCheck => "oracle-check",
            Command::Synth => "synth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Command-line values that shadow config keys.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    /// Replaces both the oracle and the synthetic-data seed.
    pub seed: Option<u64>,
    pub n_c: Option<f64>,
    pub theta_lock: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.oracle.seed = s;
            cfg.synth.seed = s;
        }
        if let Some(n) = self.n_c {
            cfg.drive.n_c = n;
        }
        if let Some(t) = self.theta_lock {
            cfg.grid.theta_lock_rad = t;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical(_) => 2,
            RunError::Io(_) => 3,
        }
    }

    /// File and CSV problems count as I/O; everything else that fails
    /// after the config was accepted is numerical.
    fn from_run(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => RunError::Io(e.to_string()),
            Error::Config(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }

    fn config(e: Error) -> Self {
        match e {
            Error::Io(_) => RunError::Io(e.to_string()),
            Error::Config(list) => RunError::Config(list.join("\n")),
            other => RunError::Config(other.to_string()),
        }
    }

    fn io(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }

    fn context(self, what: &str) -> Self {
        match self {
            RunError::Config(m) => RunError::Config(format!("{what}: {m}")),
            RunError::Numerical(m) => RunError::Numerical(format!("{what}: {m}")),
            RunError::Io(m) => RunError::Io(format!("{what}: {m}")),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, m) = match self {
            RunError::Config(m) => ("config", m),
            RunError::Numerical(m) => ("numerical", m),
            RunError::Io(m) => ("i/o", m),
        };
        write!(f, "{kind} error: {m}")
    }
}

impl std::error::Error for RunError {}

/// Files written by one command and a short human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Load `config_path`, apply `overrides`, validate.
pub fn prepare_config(config_path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, RunError> {
    let mut cfg = load_config(config_path)
        .map_err(|e| RunError::config(e).context(&config_path.display().to_string()))?;
    overrides.apply(&mut cfg);
    cfg.validate().map_err(RunError::config)?;
    Ok(cfg)
}

pub fn run_scenario(
    cfg: &ScenarioConfig,
    command: Command,
    base_dir: &Path,
    out_dir: &Path,
) -> Result<RunReport, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::io(e).context(&out_dir.display().to_string()))?;
    let mut ctx = Ctx {
        cfg,
        base_dir,
        out_dir,
        report: RunReport {
            files: Vec::new(),
            summary: Vec::new(),
        },
    };
    let r = match command {
        Command::Spectrum => spectrum(&mut ctx),
        Command::DensityMap => density_map(&mut ctx),
        Command::QuasiStatic => quasi_static(&mut ctx),
        Command::ThermometryFit => thermometry(&mut ctx),
        Command::InferDetuning => detuning(&mut ctx),
        Command::OracleCheck => oracle_check(&mut ctx),
        Command::Synth => synth(&mut ctx),
    };
    r?;
    Ok(ctx.report)
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    base_dir: &'a Path,
    out_dir: &'a Path,
    report: RunReport,
}

type Run = Result<(), RunError>;

impl Ctx<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> optosqueeze::Result<()>) -> Run {
        let path = self.out_dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::io(e).context(&path.display().to_string()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(RunError::from_run)?;
        w.flush().map_err(RunError::io)?;
        self.report.files.push(path);
        Ok(())
    }

    fn input(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn note(&mut self, s: String) {
        self.report.summary.push(s);
    }
}

fn scenario(cfg: &ScenarioConfig) -> Result<optosqueeze::scenario::Scenario, RunError> {
    cfg.scenario().map_err(RunError::config)
}

/// Two-column `key,value` report.
fn write_kv<W: Write>(w: &mut W, rows: &[(&str, String)]) -> optosqueeze::Result<()> {
    writeln!(w, "key,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

fn spectrum(ctx: &mut Ctx) -> Run {
    let s = scenario(ctx.cfg)?;
    let tl = ctx.cfg.grid.theta_lock_rad;
    let trace = s.trace(tl, &ctx.cfg.grid.spectrum).map_err(RunError::from_run)?;
    let (k, v) = trace.min().unwrap_or((0, f64::NAN));
    ctx.write("spectrum.csv", |w| write_trace(w, &trace))?;
    ctx.note(format!(
        "spectrum at theta_lock = {tl} rad: minimum {v:.6} at {:.4} MHz",
        trace.freqs_hz.get(k).copied().unwrap_or(f64::NAN) / 1e6
    ));
    Ok(())
}

fn density_map(ctx: &mut Ctx) -> Run {
    let s = scenario(ctx.cfg)?;
    let axis = lock_angle_axis(ctx.cfg.grid.lock_points);
    let map = assemble_density_map(&axis, &ctx.cfg.grid.spectrum, &s).map_err(RunError::from_run)?;
    ctx.write("densitymap.csv", |w| write_map(w, &map))?;
    if let Some((i, j, v)) = map.min() {
        ctx.note(format!(
            "density map {}x{}: minimum {v:.6} at theta_lock = {:.4} rad, {:.4} MHz",
            map.theta_locks.len(),
            map.freqs_hz.len(),
            map.theta_locks[i],
            map.freqs_hz[j] / 1e6
        ));
    }
    Ok(())
}

/// Quasi-static spectrum against quadrature angle, without thermal noise
/// and with the bath occupation at the mechanical frequency.
fn quasi_static(ctx: &mut Ctx) -> Run {
    let s = scenario(ctx.cfg)?;
    let p = s.params;
    let nbar = s.bath_occupation(p.omega_m).map_err(RunError::from_run)?;
    let n = ctx.cfg.grid.lock_points;
    let thetas: Vec<f64> = lock_angle_axis(n);
    let rows: Vec<(f64, f64, f64)> = thetas
        .iter()
        .map(|&t| (t, quasi_static_spectrum(t, &p, 0.0), quasi_static_spectrum(t, &p, nbar)))
        .collect();
    ctx.write("quasistatic.csv", |w| {
        writeln!(w, "# gamma_meas_over_omega_m={}", p.measurement_ratio())?;
        writeln!(w, "# nbar={nbar}")?;
        writeln!(w, "theta_rad,s_quantum,s_thermal")?;
        for (t, a, b) in &rows {
            writeln!(w, "{},{},{}", sci(*t), sci(*a), sci(*b))?;
        }
        Ok(())
    })?;
    ctx.note(format!(
        "quasi-static: Γ_meas/ω_m = {:.4e}, n̄ = {nbar:.4e}, {n} angles",
        p.measurement_ratio()
    ));
    Ok(())
}

fn thermometry(ctx: &mut Ctx) -> Run {
    let rel = ctx.cfg.fit.curve_csv.clone().ok_or_else(|| {
        RunError::Config("fit.curve_csv: required by thermometry-fit".into())
    })?;
    let path = ctx.input(&rel);
    let curve = read_curve(&path).map_err(|e| RunError::from_run(e).context(&path.display().to_string()))?;
    let optical = ctx.cfg.optical_mode().map_err(RunError::config)?;
    let fit = fit_thermometry(&curve, &optical, ctx.cfg.fit.thermometry_n_c, &ctx.cfg.lm_options())
        .map_err(RunError::from_run)?;
    ctx.write("thermometry_fit.csv", |w| write_fit(w, &fit))?;
    ctx.note(format!(
        "thermometry fit: g0/2π = {:.4e} Hz, γ_i/2π = {:.4e} Hz, n_b = {:.4e}",
        rad_to_hz(fit.g0.value),
        rad_to_hz(fit.gamma_i.value),
        fit.n_b.value
    ));
    Ok(())
}

fn detuning(ctx: &mut Ctx) -> Run {
    let rel = ctx.cfg.fit.lock_sweep_csv.clone().ok_or_else(|| {
        RunError::Config("fit.lock_sweep_csv: required by infer-detuning".into())
    })?;
    let path = ctx.input(&rel);
    let data = read_lock_sweep(&path).map_err(|e| RunError::from_run(e).context(&path.display().to_string()))?;
    let p = ctx.cfg.system_params().map_err(RunError::config)?;
    let search = ctx.cfg.detuning_search().map_err(RunError::config)?;
    let est = infer_detuning(&data, &p.optical, p.omega_m, &search).map_err(RunError::from_run)?;
    let kappa = p.optical.kappa;
    ctx.write("detuning.csv", |w| {
        write_kv(
            w,
            &[
                ("delta_over_2pi_hz", sci(rad_to_hz(est.delta))),
                ("delta_over_kappa", sci(est.delta / kappa)),
                ("theta_star_lock_rad", sci(est.theta_star_lock)),
                ("theta_star_rad", sci(est.theta_star)),
            ],
        )
    })?;
    ctx.note(format!(
        "detuning: Δ = {:.5}κ from critical lock angle {:.5} rad",
        est.delta / kappa,
        est.theta_star_lock
    ));
    Ok(())
}

fn oracle_check(ctx: &mut Ctx) -> Run {
    let o = ctx.cfg.oracle;
    let p = ctx.cfg.system_params().map_err(RunError::config)?;
    let rep = closed_form_equivalence(&p, o.draws, o.decades, o.seed).map_err(RunError::from_run)?;
    let mut rows = vec![
        ("draws", rep.draws.to_string()),
        ("max_rel_error", sci(rep.max_rel_error)),
        ("tolerance", sci(ORACLE_TOLERANCE)),
    ];
    rows.push(("worst_omega_over_2pi_hz", sci(rad_to_hz(rep.worst.omega))));
    rows.push(("worst_theta_rad", sci(rep.worst.theta)));
    rows.push(("worst_nbar", sci(rep.worst.nbar)));
    let mut failure = None;
    if rep.max_rel_error > ORACLE_TOLERANCE {
        failure = Some(format!(
            "closed form and matrix solve differ by {:.3e} (tolerance {ORACLE_TOLERANCE:.0e})",
            rep.max_rel_error
        ));
    }
    if o.sde {
        let mut sc = SdeConfig::for_params(&p, o.sde_gammas, o.seed);
        sc.segments = o.sde_segments;
        let est = sde_time_domain_psd(&p, o.sde_nbar, o.sde_theta_rad, &sc).map_err(RunError::from_run)?;
        let want = est.expected(&p, o.sde_nbar, o.sde_theta_rad).map_err(RunError::from_run)?;
        let se = est.trace.stderr.clone().unwrap_or_default();
        let z: Vec<f64> = est.trace.values.iter().zip(&want).zip(&se).map(|((v, e), s)| (v - e) / s).collect();
        let max_z = z.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let within = z.iter().filter(|x| x.abs() <= 3.0).count();
        rows.push(("sde_treatment", est.treatment.name().to_string()));
        rows.push(("sde_bins", z.len().to_string()));
        rows.push(("sde_bins_within_3_sigma", within.to_string()));
        rows.push(("sde_max_abs_z", sci(max_z)));
        let mut trace = est.trace.clone();
        trace.meta.insert("treatment".into(), est.treatment.name().into());
        ctx.write("sde_trace.csv", |w| write_trace(w, &trace))?;
        ctx.note(format!("sde: {within}/{} bins within 3σ, max |z| = {max_z:.3}", z.len()));
    }
    ctx.write("oracle.csv", |w| write_kv(w, &rows))?;
    ctx.note(format!(
        "oracle: max relative error {:.3e} over {} draws",
        rep.max_rel_error, rep.draws
    ));
    match failure {
        Some(msg) => Err(RunError::Numerical(msg)),
        None => Ok(()),
    }
}

fn synth(ctx: &mut Ctx) -> Run {
    let cfg = ctx.cfg;
    let y = cfg.synth;
    let p = cfg.system_params().map_err(RunError::config)?;
    let s = scenario(cfg)?;
    let n_c = cfg.fit.thermometry_n_c;
    let m = p.mechanical;
    let truth = ThermometryTruth {
        g0: m.g0,
        gamma_i: m.gamma_i,
        n_b: s.noise.bath.occupation(m.omega_m0, n_c).map_err(RunError::from_run)?,
        omega_m0: m.omega_m0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(y.seed);
    let span = y.detuning_max_over_kappa * p.optical.kappa;
    let grid = detuning_grid(-span, span, y.detuning_points);
    let curve = synth_thermometry(&truth, &p.optical, n_c, &grid, y.rel_noise, &mut rng);
    let crit = model_critical_lock(p.drive.delta, &p.optical, p.omega_m);
    let locks = detuning_grid(crit - y.lock_span_rad, crit + y.lock_span_rad, y.lock_angles);
    let n_b = s.bath_occupation(p.omega_m).map_err(RunError::from_run)?;
    let sweep = synth_lock_sweep(&p, n_b, &locks, y.lock_noise, &mut rng).map_err(RunError::from_run)?;
    ctx.write("thermometry.csv", |w| write_curve(w, &curve))?;
    ctx.write("lock_sweep.csv", |w| write_lock_sweep(w, &sweep))?;
    ctx.note(format!(
        "synth: {} detunings at n_c = {n_c}, {} lock angles around {crit:.5} rad, seed {}",
        curve.len(),
        sweep.len(),
        y.seed
    ));
    Ok(())
}
