//! CSV files for traces, maps, fit reports and thermometry data.
//!
//! Numbers are written with 9 significant digits. Frequencies are in Hz and
//! angles in radians. A trace may start with `# key=value` lines carrying its
//! metadata.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{Estimate, FitMethod, FitResult, ThermometryCurve};
use crate::instrument::{SpectrumTrace, SqueezingMap, TraceComponents};
use crate::units::{hz_to_rad, rad_to_hz};

const COMPONENT_COLS: [&str; 5] = ["s_vac", "s_thermal", "s_phase", "s_extra", "s_absorptive"];

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Csv(msg.into())
}

/// Split leading `# key=value` lines off `text`.
fn split_meta(text: &str) -> Result<(BTreeMap<String, String>, &str)> {
    let mut meta = BTreeMap::new();
    let mut rest = text;
    while let Some(after) = rest.strip_prefix('#') {
        let (line, next) = match after.find('\n') {
            Some(i) => (&after[..i], &after[i + 1..]),
            None => (after, ""),
        };
        let line = line.trim();
        if !line.is_empty() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("metadata line without '=': {line}")))?;
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
        rest = next;
    }
    Ok((meta, rest))
}

/// Header and numeric rows of a headed CSV body.
fn numeric_table(body: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(bad(format!("row {}: {} fields, header has {}", i + 1, rec.len(), header.len())));
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(format!("row {}: '{f}' is not a number", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

pub fn write_trace<W: Write>(w: W, trace: &SpectrumTrace) -> Result<()> {
    trace.validate()?;
    let mut w = w;
    for (k, v) in &trace.meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["freq_hz", "s_norm"];
    if trace.components.is_some() {
        header.extend(COMPONENT_COLS);
    }
    if trace.stderr.is_some() {
        header.push("stderr");
    }
    out.write_record(&header)?;
    for k in 0..trace.len() {
        let mut row = vec![num(trace.freqs_hz[k]), num(trace.values[k])];
        if let Some(c) = &trace.components {
            row.extend(c.columns().iter().map(|col| num(col[k])));
        }
        if let Some(se) = &trace.stderr {
            row.push(num(se[k]));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_trace(text: &str) -> Result<SpectrumTrace> {
    let (meta, body) = split_meta(text)?;
    let (header, rows) = numeric_table(body)?;
    if header.first().map(String::as_str) != Some("freq_hz") || header.get(1).map(String::as_str) != Some("s_norm") {
        return Err(bad("trace header must start with freq_hz,s_norm"));
    }
    let comp_idx: Vec<Option<usize>> = COMPONENT_COLS.iter().map(|c| column(&header, c)).collect();
    let have = comp_idx.iter().filter(|c| c.is_some()).count();
    if have != 0 && have != COMPONENT_COLS.len() {
        return Err(bad("trace has some but not all component columns"));
    }
    let se_idx = column(&header, "stderr");
    let known = 2 + have + usize::from(se_idx.is_some());
    if header.len() != known {
        return Err(bad(format!("unexpected columns in trace header: {}", header.join(","))));
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let mut trace = SpectrumTrace::new(col(0), col(1))?;
    if have > 0 {
        let c: Vec<Vec<f64>> = comp_idx.iter().map(|j| col(j.unwrap_or(0))).collect();
        trace.components = Some(TraceComponents {
            s_vac: c[0].clone(),
            s_thermal: c[1].clone(),
            s_phase: c[2].clone(),
            s_extra: c[3].clone(),
            s_absorptive: c[4].clone(),
        });
    }
    trace.stderr = se_idx.map(col);
    if let Some(r) = meta.get("rbw_hz") {
        trace.rbw_hz = Some(r.parse().map_err(|_| bad(format!("rbw_hz metadata '{r}' is not a number")))?);
    }
    trace.meta = meta;
    trace.validate()?;
    Ok(trace)
}

/// Long form, one row per (lock angle, frequency).
pub fn write_map<W: Write>(w: W, map: &SqueezingMap) -> Result<()> {
    map.validate()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta_lock_rad", "freq_hz", "s_norm"])?;
    for (i, t) in map.theta_locks.iter().enumerate() {
        for (j, f) in map.freqs_hz.iter().enumerate() {
            out.write_record([num(*t), num(*f), num(map.values[i][j])])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows must cover the full rectangular grid, lock angle major.
pub fn parse_map(text: &str) -> Result<SqueezingMap> {
    let (header, rows) = numeric_table(text)?;
    if header != ["theta_lock_rad", "freq_hz", "s_norm"] {
        return Err(bad("map header must be theta_lock_rad,freq_hz,s_norm"));
    }
    let mut theta_locks: Vec<f64> = Vec::new();
    for r in &rows {
        if theta_locks.last() != Some(&r[0]) {
            theta_locks.push(r[0]);
        }
    }
    if theta_locks.is_empty() || rows.len() % theta_locks.len() != 0 {
        return Err(bad("map rows do not form a rectangular grid"));
    }
    let nf = rows.len() / theta_locks.len();
    let freqs_hz: Vec<f64> = rows[..nf].iter().map(|r| r[1]).collect();
    let mut values = Vec::with_capacity(theta_locks.len());
    for (i, chunk) in rows.chunks(nf).enumerate() {
        if chunk.iter().any(|r| r[0] != theta_locks[i]) || chunk.iter().zip(&freqs_hz).any(|(r, f)| r[1] != *f) {
            return Err(bad(format!("map block {i} does not repeat the frequency axis")));
        }
        values.push(chunk.iter().map(|r| r[2]).collect());
    }
    let map = SqueezingMap {
        theta_locks,
        freqs_hz,
        values,
    };
    map.validate()?;
    Ok(map)
}

/// `param,estimate,stderr` rows in file units, then `residual_norm` and
/// `iterations` with an empty error column.
pub fn write_fit<W: Write>(w: W, fit: &FitResult) -> Result<()> {
    let mut w = w;
    writeln!(w, "# method={}", method_name(fit.method))?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "estimate", "stderr"])?;
    let hz = |e: &Estimate| (rad_to_hz(e.value), rad_to_hz(e.stderr));
    for (name, (v, s)) in [
        ("g0_over_2pi_hz", hz(&fit.g0)),
        ("gamma_i_over_2pi_hz", hz(&fit.gamma_i)),
        ("n_b", (fit.n_b.value, fit.n_b.stderr)),
        ("omega_m0_over_2pi_hz", hz(&fit.omega_m0)),
    ] {
        out.write_record([name.to_string(), num(v), num(s)])?;
    }
    out.write_record(["residual_norm".to_string(), num(fit.residual_norm), String::new()])?;
    out.write_record(["iterations".to_string(), fit.iterations.to_string(), String::new()])?;
    out.flush()?;
    Ok(())
}

fn method_name(m: FitMethod) -> &'static str {
    match m {
        FitMethod::Joint => "joint",
        FitMethod::Sequential => "sequential",
    }
}

pub fn parse_fit(text: &str) -> Result<FitResult> {
    let (meta, body) = split_meta(text)?;
    let method = match meta.get("method").map(String::as_str) {
        Some("joint") | None => FitMethod::Joint,
        Some("sequential") => FitMethod::Sequential,
        Some(other) => return Err(bad(format!("unknown fit method '{other}'"))),
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["param", "estimate", "stderr"] {
        return Err(bad("fit header must be param,estimate,stderr"));
    }
    let mut vals: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(bad("fit rows need three fields"));
        }
        let v: f64 = rec[1].parse().map_err(|_| bad(format!("'{}' is not a number", &rec[1])))?;
        let s: f64 = if rec[2].is_empty() {
            f64::NAN
        } else {
            rec[2].parse().map_err(|_| bad(format!("'{}' is not a number", &rec[2])))?
        };
        if vals.insert(rec[0].to_string(), (v, s)).is_some() {
            return Err(bad(format!("duplicate fit row '{}'", &rec[0])));
        }
    }
    let mut get = |k: &str| vals.remove(k).ok_or_else(|| bad(format!("fit report lacks '{k}'")));
    let est_hz = |(v, s): (f64, f64)| Estimate {
        value: hz_to_rad(v),
        stderr: hz_to_rad(s),
    };
    let g0 = est_hz(get("g0_over_2pi_hz")?);
    let gamma_i = est_hz(get("gamma_i_over_2pi_hz")?);
    let (nb, nbs) = get("n_b")?;
    let omega_m0 = est_hz(get("omega_m0_over_2pi_hz")?);
    let residual_norm = get("residual_norm")?.0;
    let it = get("iterations")?.0;
    if !(it >= 0.0 && it.fract() == 0.0 && it < 1e12) {
        return Err(bad("iterations must be a non-negative integer"));
    }
    if let Some(k) = vals.keys().next() {
        return Err(bad(format!("unknown fit row '{k}'")));
    }
    Ok(FitResult {
        g0,
        gamma_i,
        n_b: Estimate { value: nb, stderr: nbs },
        omega_m0,
        residual_norm,
        iterations: it as usize,
        method,
    })
}

const CURVE_HEADER: [&str; 4] = ["detuning_hz", "eff_freq_hz", "eff_linewidth_hz", "area_rad_per_s"];

pub fn write_curve<W: Write>(w: W, curve: &ThermometryCurve) -> Result<()> {
    curve.validate()?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_HEADER)?;
    for k in 0..curve.len() {
        out.write_record([
            num(rad_to_hz(curve.detunings[k])),
            num(rad_to_hz(curve.eff_freqs[k])),
            num(rad_to_hz(curve.eff_linewidths[k])),
            num(curve.areas[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_curve(text: &str) -> Result<ThermometryCurve> {
    let (header, rows) = numeric_table(text)?;
    if header != CURVE_HEADER {
        return Err(bad(format!("thermometry header must be {}", CURVE_HEADER.join(","))));
    }
    let curve = ThermometryCurve {
        detunings: rows.iter().map(|r| hz_to_rad(r[0])).collect(),
        eff_freqs: rows.iter().map(|r| hz_to_rad(r[1])).collect(),
        eff_linewidths: rows.iter().map(|r| hz_to_rad(r[2])).collect(),
        areas: rows.iter().map(|r| r[3]).collect(),
    };
    curve.validate()?;
    Ok(curve)
}

pub fn write_lock_sweep<W: Write>(w: W, data: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta_lock_rad", "area_rad_per_s"])?;
    for (t, a) in data {
        out.write_record([num(*t), num(*a)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_lock_sweep(text: &str) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = numeric_table(text)?;
    if header != ["theta_lock_rad", "area_rad_per_s"] {
        return Err(bad("lock sweep header must be theta_lock_rad,area_rad_per_s"));
    }
    let data: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    if data.iter().any(|(t, a)| !(t.is_finite() && a.is_finite())) {
        return Err(bad("lock sweep has non-finite entries"));
    }
    Ok(data)
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn read_trace(path: &Path) -> Result<SpectrumTrace> {
    parse_trace(&read(path)?)
}

pub fn read_map(path: &Path) -> Result<SqueezingMap> {
    parse_map(&read(path)?)
}

pub fn read_fit(path: &Path) -> Result<FitResult> {
    parse_fit(&read(path)?)
}

pub fn read_curve(path: &Path) -> Result<ThermometryCurve> {
    parse_curve(&read(path)?)
}

pub fn read_lock_sweep(path: &Path) -> Result<Vec<(f64, f64)>> {
    parse_lock_sweep(&read(path)?)
}
