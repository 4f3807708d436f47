//! Trajectory CSV and per-observer plot data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use geo_uio::sim::Trajectory;

/// 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_header(n: usize, names: &[String]) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    for name in names {
        header.extend((1..=n).map(|i| format!("{name}_xhat_{i}")));
    }
    header.extend(names.iter().map(|name| format!("{name}_err")));
    header
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, names: &[String]) -> Result<()> {
    let n = traj.x.first().map_or(0, |x| x.len());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(csv_header(n, names))?;
    for k in 0..traj.len() {
        let mut row = vec![fmt(traj.times[k])];
        row.extend(traj.x[k].iter().map(|&v| fmt(v)));
        for xhat in &traj.xhat {
            row.extend(xhat[k].iter().map(|&v| fmt(v)));
        }
        row.extend(traj.err_norm.iter().map(|e| fmt(e[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Two whitespace-separated columns `t err` under a `#` header line.
pub fn write_plot_data(path: &Path, times: &[f64], values: &[f64]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# t err")?;
    for (t, v) in times.iter().zip(values) {
        writeln!(w, "{} {}", fmt(*t), fmt(*v))?;
    }
    w.flush()?;
    Ok(())
}
