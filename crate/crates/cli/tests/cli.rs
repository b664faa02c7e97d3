use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optosqueeze::config::DEFAULT_CONFIG;
use optosqueeze::csvio::{parse_map, parse_trace};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optosqueeze"))
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

/// Default config with `(from, to)` text substitutions, written into `dir`.
fn config_with(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = DEFAULT_CONFIG.to_string();
    for (from, to) in edits {
        assert!(text.contains(from), "config has no '{from}'");
        text = text.replace(from, to);
    }
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Small output grid so map commands stay fast.
const SMALL_GRID: [(&str, &str); 4] = [
    ("fine_points = 50000", "fine_points = 8000"),
    ("lock_points = 91", "lock_points = 24"),
    ("out_points = 501", "out_points = 101"),
    ("out_step_hz = 80.0e3", "out_step_hz = 400.0e3"),
];

#[test]
fn uncoupled_spectrum_is_shot_noise() {
    let d = TempDir::new().unwrap();
    let cfg = config_with(
        d.path(),
        "g0.toml",
        &[
            ("g0_over_2pi_hz = 750.0e3", "g0_over_2pi_hz = 0.0"),
            ("extra_mode = true\nphase = true\nabsorptive = true", "extra_mode = false\nphase = false\nabsorptive = false"),
        ],
    );
    let o = run(&["spectrum"], &cfg, &d.path().join("out"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_trace(&fs::read_to_string(d.path().join("out/spectrum.csv")).unwrap()).unwrap();
    assert_eq!(t.len(), 501);
    assert!(t.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn oracle_check_passes_on_defaults() {
    let d = TempDir::new().unwrap();
    let cfg = config_with(d.path(), "c.toml", &[]);
    let o = run(&["oracle-check"], &cfg, d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = fs::read_to_string(d.path().join("oracle.csv")).unwrap();
    let err: f64 = rep
        .lines()
        .find_map(|l| l.strip_prefix("max_rel_error,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-9, "{err}");
}

#[test]
fn density_map_dips_below_shot_noise_near_resonance() {
    let d = TempDir::new().unwrap();
    let cfg = config_with(d.path(), "c.toml", &SMALL_GRID);
    let o = run(&["densitymap"], &cfg, d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let map = parse_map(&fs::read_to_string(d.path().join("densitymap.csv")).unwrap()).unwrap();
    let (_, j, v) = map.min().unwrap();
    assert!(v < 1.0, "{v}");
    assert!((map.freqs_hz[j] - 28e6).abs() < 1.5e6, "{}", map.freqs_hz[j]);
}

#[test]
fn outputs_are_byte_identical_and_thread_independent() {
    let d = TempDir::new().unwrap();
    let cfg = config_with(d.path(), "c.toml", &SMALL_GRID);
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        for cmd in ["synth", "densitymap"] {
            let o = bin()
                .env("OPTOSQUEEZE_THREADS", threads)
                .args([cmd, "--seed", "5", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(dir)
                .output()
                .unwrap();
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for f in ["thermometry.csv", "lock_sweep.csv", "densitymap.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = run(&["synth", "--seed", "6"], &cfg, &c);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(a.join("thermometry.csv")).unwrap(), fs::read(c.join("thermometry.csv")).unwrap());
}

#[test]
fn fits_read_data_relative_to_config() {
    let d = TempDir::new().unwrap();
    let data = d.path().join("data");
    let gen = config_with(d.path(), "gen.toml", &[]);
    assert_eq!(code(&run(&["synth"], &gen, &data)), 0);
    let cfg = config_with(
        d.path(),
        "fit.toml",
        &[(
            "[fit]\n",
            "[fit]\ncurve_csv = \"data/thermometry.csv\"\nlock_sweep_csv = \"data/lock_sweep.csv\"\n",
        )],
    );
    let out = d.path().join("out");
    // Run from an unrelated working directory.
    for cmd in ["thermometry-fit", "infer-detuning"] {
        let o = bin()
            .current_dir(std::env::temp_dir())
            .args([cmd, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let fit = optosqueeze::csvio::read_fit(&out.join("thermometry_fit.csv")).unwrap();
    assert!((fit.g0.value / (2.0 * std::f64::consts::PI * 750e3) - 1.0).abs() < 0.02);
    let det = fs::read_to_string(out.join("detuning.csv")).unwrap();
    let dk: f64 = det
        .lines()
        .find_map(|l| l.strip_prefix("delta_over_kappa,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((dk - 0.044).abs() < 0.01, "{dk}");
}

#[test]
fn overrides_shadow_config_keys() {
    let d = TempDir::new().unwrap();
    let cfg = config_with(d.path(), "c.toml", &[]);
    let o = run(&["spectrum", "--n-c", "200", "--theta-lock", "-0.4"], &cfg, d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_trace(&fs::read_to_string(d.path().join("spectrum.csv")).unwrap()).unwrap();
    assert_eq!(t.meta.get("n_c").map(String::as_str), Some("200"));
    assert_eq!(t.meta.get("theta_lock_rad").map(String::as_str), Some("-0.4"));
}

#[test]
fn exit_codes_follow_failure_class() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");

    let missing = run(&["spectrum"], &d.path().join("absent.toml"), &out);
    assert_eq!(code(&missing), 3);

    let bad = d.path().join("bad.toml");
    fs::write(&bad, "[optical]\nkappa_over_2pi_hz = -1\nmystery = 2\n").unwrap();
    let o = run(&["spectrum"], &bad, &out);
    assert_eq!(code(&o), 1);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("optical.mystery") && msg.contains("mechanical.g0_over_2pi_hz"), "{msg}");

    let neg = config_with(d.path(), "neg.toml", &[]);
    assert_eq!(code(&run(&["spectrum", "--n-c", "-5"], &neg, &out)), 1);

    // Lock sweep whose minimum sits on the edge: the estimator refuses it.
    let sweep = d.path().join("edge.csv");
    let rows: String = (0..9).map(|k| format!("{},{}\n", 0.1 * k as f64, 1.0 + k as f64)).collect();
    fs::write(&sweep, format!("theta_lock_rad,area_rad_per_s\n{rows}")).unwrap();
    let cfg = config_with(d.path(), "edge.toml", &[("[fit]\n", "[fit]\nlock_sweep_csv = \"edge.csv\"\n")]);
    assert_eq!(code(&run(&["infer-detuning"], &cfg, &out)), 2);

    let garbage = d.path().join("garbage.csv");
    fs::write(&garbage, "not,a,sweep\n").unwrap();
    let cfg = config_with(d.path(), "garbage.toml", &[("[fit]\n", "[fit]\nlock_sweep_csv = \"garbage.csv\"\n")]);
    assert_eq!(code(&run(&["infer-detuning"], &cfg, &out)), 3);
}
