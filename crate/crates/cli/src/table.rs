use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::Engine;
use crate::error::{CliError, CliResult};

pub const RESULT_COLUMNS: [&str; 9] = [
    "t_hold",
    "phi",
    "mean_n2",
    "mean_n2_sq",
    "v",
    "stderr_v",
    "engine",
    "n_traj",
    "seed",
];

pub const DENSITY_COLUMNS: [&str; 6] = ["t_hold", "x", "n1_t1", "n2_t1", "n1_t2", "n2_t2"];

/// One `(t_hold, φ)` cell. `n_traj`, `seed` and `stderr_v` are zero for the
/// exact engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub t_hold: f64,
    pub phi: f64,
    pub mean_n2: f64,
    pub mean_n2_sq: f64,
    pub v: f64,
    pub stderr_v: f64,
    pub engine: Engine,
    pub n_traj: u64,
    pub seed: u64,
}

/// Seventeen significant digits, exponent form; round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_results<W: Write>(mut w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{}", RESULT_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            format_float(r.t_hold),
            format_float(r.phi),
            format_float(r.mean_n2),
            format_float(r.mean_n2_sq),
            format_float(r.v),
            format_float(r.stderr_v),
            r.engine.name(),
            r.n_traj,
            r.seed
        )?;
    }
    Ok(())
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> CliResult<()> {
    let found: Vec<&str> = found.iter().collect();
    if found != expected {
        let missing: Vec<&str> = expected.iter().copied().filter(|c| !found.contains(c)).collect();
        let extra: Vec<&str> = found.iter().copied().filter(|c| !expected.contains(c)).collect();
        return Err(CliError::config(format!(
            "column mismatch: expected [{}], found [{}] (missing [{}], unexpected [{}])",
            expected.join(","),
            found.join(","),
            missing.join(","),
            extra.join(",")
        )));
    }
    Ok(())
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

pub fn read_results<R: Read>(r: R) -> CliResult<Vec<ResultRow>> {
    let mut rdr = reader(r);
    let bad = |e: csv::Error| CliError::config(format!("results table: {e}"));
    check_header(rdr.headers().map_err(bad)?, &RESULT_COLUMNS)?;
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(bad)?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> CliResult<f64> {
            field(i).parse().map_err(|_| {
                CliError::config(format!("results table row {}: bad {} `{}`", line + 1, RESULT_COLUMNS[i], field(i)))
            })
        };
        let int = |i: usize| -> CliResult<u64> {
            field(i).parse().map_err(|_| {
                CliError::config(format!("results table row {}: bad {} `{}`", line + 1, RESULT_COLUMNS[i], field(i)))
            })
        };
        rows.push(ResultRow {
            t_hold: num(0)?,
            phi: num(1)?,
            mean_n2: num(2)?,
            mean_n2_sq: num(3)?,
            v: num(4)?,
            stderr_v: num(5)?,
            engine: field(6).parse()?,
            n_traj: int(7)?,
            seed: int(8)?,
        });
    }
    Ok(rows)
}

/// Ensemble-mean densities at `t1` and `t2` on the grid, vacuum noise
/// removed. SI: `x` in m, densities in atoms per m.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub t_hold: f64,
    pub x: Vec<f64>,
    pub n1_t1: Vec<f64>,
    pub n2_t1: Vec<f64>,
    pub n1_t2: Vec<f64>,
    pub n2_t2: Vec<f64>,
}

impl DensityProfile {
    /// `‖n₂(t₂) − n₂(t₁)‖ / ‖n₂(t₁)‖` over the grid.
    pub fn mode2_relative_change(&self) -> f64 {
        let diff: f64 = self.n2_t1.iter().zip(&self.n2_t2).map(|(a, b)| (a - b).powi(2)).sum();
        let base: f64 = self.n2_t1.iter().map(|a| a * a).sum();
        (diff / base).sqrt()
    }
}

pub fn write_densities<W: Write>(mut w: W, profiles: &[DensityProfile]) -> std::io::Result<()> {
    writeln!(w, "{}", DENSITY_COLUMNS.join(","))?;
    for p in profiles {
        for i in 0..p.x.len() {
            let cells = [p.t_hold, p.x[i], p.n1_t1[i], p.n2_t1[i], p.n1_t2[i], p.n2_t2[i]];
            let line: Vec<String> = cells.iter().map(|&c| format_float(c)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
    }
    Ok(())
}

/// Reads a density table back into one profile per hold time, in file order.
pub fn read_densities<R: Read>(r: R) -> CliResult<Vec<DensityProfile>> {
    let mut rdr = reader(r);
    let bad = |e: csv::Error| CliError::config(format!("density table: {e}"));
    check_header(rdr.headers().map_err(bad)?, &DENSITY_COLUMNS)?;
    let mut out: Vec<DensityProfile> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(bad)?;
        let mut v = [0.0; 6];
        for (i, slot) in v.iter_mut().enumerate() {
            let s = record.get(i).unwrap_or("");
            *slot = s
                .parse()
                .map_err(|_| CliError::config(format!("density table: bad {} `{s}`", DENSITY_COLUMNS[i])))?;
        }
        if out.last().map(|p| p.t_hold) != Some(v[0]) {
            out.push(DensityProfile {
                t_hold: v[0],
                x: Vec::new(),
                n1_t1: Vec::new(),
                n2_t1: Vec::new(),
                n1_t2: Vec::new(),
                n2_t2: Vec::new(),
            });
        }
        let p = out.last_mut().expect("pushed above");
        p.x.push(v[1]);
        p.n1_t1.push(v[2]);
        p.n2_t1.push(v[3]);
        p.n1_t2.push(v[4]);
        p.n2_t2.push(v[5]);
    }
    Ok(out)
}
