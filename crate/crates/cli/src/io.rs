//! CSV and JSON emission for loops, solutions and trajectories.
//!
//! All floating-point values are written with 17 significant digits, which
//! round-trips f64 exactly in decimal.

use std::fs;
use std::io::Write;
use std::path::Path;

use relorbit_core::integrator::{angular_momentum, hamiltonian, IntegrationResult};
use relorbit_core::loopspace::DiscreteLoop;
use relorbit_core::potentials::PotentialConfig;
use relorbit_core::reparam::PeriodicSolution;
use relorbit_core::Vec2;
use serde_json::{json, Value};

use crate::jobs::{CliError, CliResult};

/// 17-significant-digit decimal rendering (exact f64 round trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Invalid(format!("json encode: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// --- loops -----------------------------------------------------------------

/// CSV rows `j,x,y`.
pub fn write_loop_csv(path: &Path, lp: &DiscreteLoop) -> CliResult<()> {
    let mut out = String::from("j,x,y\n");
    for (j, u) in lp.samples().iter().enumerate() {
        out.push_str(&format!("{j},{},{}\n", fmt17(u.x), fmt17(u.y)));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_loop_csv(path: &Path) -> CliResult<DiscreteLoop> {
    let text = fs::read_to_string(path)?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with('j') {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Parse(format!(
                "{}: line {}: expected j,x,y",
                path.display(),
                lineno + 1
            )));
        }
        let x: f64 = fields[1].trim().parse().map_err(|e| {
            CliError::Parse(format!("{}: line {}: {e}", path.display(), lineno + 1))
        })?;
        let y: f64 = fields[2].trim().parse().map_err(|e| {
            CliError::Parse(format!("{}: line {}: {e}", path.display(), lineno + 1))
        })?;
        samples.push(Vec2::new(x, y));
    }
    DiscreteLoop::new(samples).map_err(CliError::Core)
}

pub fn loop_to_json(lp: &DiscreteLoop) -> Value {
    json!({
        "grid_size": lp.grid_size(),
        "samples": lp.samples().iter().map(|u| json!([u.x, u.y])).collect::<Vec<_>>(),
    })
}

pub fn loop_from_json(value: &Value) -> CliResult<DiscreteLoop> {
    let samples = value
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Parse("loop json: missing `samples`".into()))?;
    let mut out = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let pair = s
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| CliError::Parse(format!("loop json: sample {i} is not [x, y]")))?;
        let x = pair[0]
            .as_f64()
            .ok_or_else(|| CliError::Parse(format!("loop json: sample {i}.x not a number")))?;
        let y = pair[1]
            .as_f64()
            .ok_or_else(|| CliError::Parse(format!("loop json: sample {i}.y not a number")))?;
        out.push(Vec2::new(x, y));
    }
    DiscreteLoop::new(out).map_err(CliError::Core)
}

// --- periodic solutions ------------------------------------------------------

/// CSV rows `t,x,y,vx,vy`.
pub fn write_solution_csv(path: &Path, sol: &PeriodicSolution) -> CliResult<()> {
    let mut out = String::from("t,x,y,vx,vy\n");
    for k in 0..sol.n_samples() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(sol.times[k]),
            fmt17(sol.positions[k].x),
            fmt17(sol.positions[k].y),
            fmt17(sol.velocities[k].x),
            fmt17(sol.velocities[k].y),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Metadata JSON `{T, h, E, lambda, residuals}` plus the samples.
pub fn solution_to_json(sol: &PeriodicSolution, residuals: &Value) -> Value {
    json!({
        "T": sol.period,
        "h": sol.h,
        "E": sol.energy,
        "lambda": sol.lambda,
        "n_samples": sol.n_samples(),
        "residuals": residuals,
        "samples": (0..sol.n_samples()).map(|k| json!({
            "t": sol.times[k],
            "x": [sol.positions[k].x, sol.positions[k].y],
            "v": [sol.velocities[k].x, sol.velocities[k].y],
        })).collect::<Vec<_>>(),
    })
}

// --- trajectories -------------------------------------------------------------

/// CSV rows `t,x,y,px,py,H,L` (`L` about the first centre).
pub fn write_trajectory_csv(
    path: &Path,
    res: &IntegrationResult,
    cfg: &PotentialConfig,
) -> CliResult<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "t,x,y,px,py,H,L")?;
    let center = cfg.centers()[0];
    for (t, s) in res.times.iter().zip(&res.states) {
        let h = hamiltonian(cfg, s).map_err(CliError::Core)?;
        let l = angular_momentum(center, s);
        writeln!(
            file,
            "{},{},{},{},{},{},{}",
            fmt17(*t),
            fmt17(s.position.x),
            fmt17(s.position.y),
            fmt17(s.momentum.x),
            fmt17(s.momentum.y),
            fmt17(h),
            fmt17(l),
        )?;
    }
    Ok(())
}

/// Generic numeric table with a header row.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> CliResult<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|&v| fmt17(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
