use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use optosqueeze_cli::{prepare_config, run_scenario, Command, Overrides};

const THREADS_VAR: &str = "OPTOSQUEEZE_THREADS";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Spectrum,
    Densitymap,
    Quasistatic,
    ThermometryFit,
    InferDetuning,
    OracleCheck,
    Synth,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Densitymap => Command::DensityMap,
            Cmd::Quasistatic => Command::QuasiStatic,
            Cmd::ThermometryFit => Command::ThermometryFit,
            Cmd::InferDetuning => Command::InferDetuning,
            Cmd::OracleCheck => Command::OracleCheck,
            Cmd::Synth => Command::Synth,
        }
    }
}

/// Homodyne noise spectra of a linearized optomechanical cavity.
#[derive(Debug, Parser)]
#[command(name = "optosqueeze", version)]
struct Args {
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides oracle.seed and synth.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides drive.n_c.
    #[arg(long = "n-c")]
    n_c: Option<f64>,
    /// Overrides grid.theta_lock_rad.
    #[arg(long = "theta-lock", allow_negative_numbers = true)]
    theta_lock: Option<f64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size thread pool: {e}");
                }
            }
            _ => {
                eprintln!("config error: {THREADS_VAR} must be a positive integer, got '{v}'");
                return ExitCode::from(1);
            }
        }
    }
    let overrides = Overrides {
        seed: args.seed,
        n_c: args.n_c,
        theta_lock: args.theta_lock,
    };
    let result = prepare_config(&args.config, &overrides).and_then(|cfg| {
        let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
        run_scenario(&cfg, args.command.into(), &base, &args.out)
    });
    match result {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            for line in &report.summary {
                let _ = writeln!(out, "{line}");
            }
            for f in &report.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
