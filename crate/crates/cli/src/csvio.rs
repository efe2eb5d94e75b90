//! CSV readers and writers.
//!
//! All numeric output uses 17 significant digits so a rerun is byte-identical
//! and values round-trip through `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use eddikit::{SampledSignal, Trajectory};

use crate::errors::{with_path, CliError, Result};

pub const TRAJECTORY_HEADER: &str = "t,x,v,a,f_ext";
pub const ACCEL_HEADER: &str = "t,a";

/// Relative tolerance on sample spacing when reading a time column.
const DT_TOL: f64 = 1e-6;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(with_path(File::create(path), path)?))
}

/// Writes aligned columns under a comma-separated header.
pub fn write_columns(path: &Path, header: &str, columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    debug_assert!(columns.iter().all(|c| c.len() == n));
    let mut w = create(path)?;
    let io = |r: std::io::Result<()>| with_path(r, path);
    io(writeln!(w, "{header}"))?;
    for k in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt(c[k])).collect();
        io(writeln!(w, "{}", row.join(",")))?;
    }
    io(w.flush())
}

pub fn write_pairs(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let (a, b): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    write_columns(path, header, &[&a, &b])
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let a = traj.a().ok_or(eddikit::Error::MissingAcceleration)?;
    let t: Vec<f64> = (0..traj.len()).map(|k| traj.x().time(k)).collect();
    write_columns(
        path,
        TRAJECTORY_HEADER,
        &[&t, traj.x().values(), traj.v().values(), a.values(), traj.f_ext().values()],
    )
}

#[cfg(test)]
pub fn write_accel(path: &Path, a: &SampledSignal) -> Result<()> {
    let t: Vec<f64> = (0..a.len()).map(|k| a.time(k)).collect();
    write_columns(path, ACCEL_HEADER, &[&t, a.values()])
}

/// Scalogram grid: first row is the frequency axis, first column the time
/// axis, body cell `(i, j)` the magnitude at `(times[i], freqs[j])`.
pub fn write_grid(path: &Path, freqs: &[f64], times: &[f64], magnitude: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    let io = |r: std::io::Result<()>| with_path(r, path);
    let header: Vec<String> = std::iter::once("t".to_string()).chain(freqs.iter().map(|&f| fmt(f))).collect();
    io(writeln!(w, "{}", header.join(",")))?;
    for (ti, &t) in times.iter().enumerate() {
        let row: Vec<String> = std::iter::once(fmt(t))
            .chain(magnitude.iter().map(|per_freq| fmt(per_freq[ti])))
            .collect();
        io(writeln!(w, "{}", row.join(",")))?;
    }
    io(w.flush())
}

/// A parsed input record: either a complete state/force record or a bare
/// acceleration measurement that still needs reconstruction.
#[derive(Debug)]
pub enum InputRecord {
    Trajectory(Trajectory),
    Acceleration(SampledSignal),
}

pub fn read_record(path: &Path, mass: f64) -> Result<InputRecord> {
    let file = with_path(File::open(path), path)?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => with_path(line, path)?,
        None => return Err(CliError::config(format!("{}: empty file", path.display()))),
    };
    let n_cols = match header.trim() {
        TRAJECTORY_HEADER => 5,
        ACCEL_HEADER => 2,
        other => {
            return Err(CliError::config(format!(
                "{}: unrecognized header '{other}'; expected '{TRAJECTORY_HEADER}' or '{ACCEL_HEADER}'",
                path.display()
            )))
        }
    };

    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); n_cols];
    for (idx, line) in lines {
        let line = with_path(line, path)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = 0;
        for (j, field) in line.split(',').enumerate() {
            fields += 1;
            if j >= n_cols {
                break;
            }
            let value: f64 = field.trim().parse().map_err(|_| {
                CliError::config(format!(
                    "{}:{}: cannot parse '{}' as a number",
                    path.display(),
                    idx + 1,
                    field.trim()
                ))
            })?;
            cols[j].push(value);
        }
        if fields != n_cols {
            return Err(CliError::config(format!(
                "{}:{}: expected {n_cols} fields, found {fields}",
                path.display(),
                idx + 1
            )));
        }
    }

    let t = &cols[0];
    if t.len() < 2 {
        return Err(CliError::config(format!(
            "{}: need at least 2 samples, found {}",
            path.display(),
            t.len()
        )));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(CliError::config(format!("{}: time column is not increasing", path.display())));
    }
    for (k, &tk) in t.iter().enumerate() {
        let expected = t[0] + k as f64 * dt;
        if (tk - expected).abs() > DT_TOL * dt {
            return Err(CliError::config(format!(
                "{}: non-uniform sample spacing at row {} (t = {tk}, expected {expected})",
                path.display(),
                k + 2
            )));
        }
    }

    let t0 = t[0];
    let signal = |values: Vec<f64>| SampledSignal::new(t0, dt, values).map_err(CliError::from);
    if n_cols == 2 {
        let a = signal(cols.swap_remove(1))?;
        return Ok(InputRecord::Acceleration(a));
    }
    let f_ext = signal(cols.pop().unwrap())?;
    let a = signal(cols.pop().unwrap())?;
    let v = signal(cols.pop().unwrap())?;
    let x = signal(cols.pop().unwrap())?;
    Trajectory::new(x, v, Some(a), f_ext, mass)
        .map(InputRecord::Trajectory)
        .map_err(CliError::from)
}
