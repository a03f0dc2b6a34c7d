use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use numsqueeze::fock;
use numsqueeze::tw::{extract_moments, run_ensemble, EnsembleStats, PulseSchedule, TwModel};
use numsqueeze::two_mode::{closed_form_moments, variance_map, SequenceSpec};
use numsqueeze::{Complex64, KerrParams};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Engine, HoldUnits, RunConfig};
use crate::error::{CliError, CliResult};
use crate::spool::{self, SpoolFormat, SpoolRecord};
use crate::table::{self, DensityProfile, ResultRow};

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Effective configuration with all defaults resolved.
    pub config: RunConfig,
    pub rows: Vec<ResultRow>,
    /// Kerr constants used; derived from the mode for TW runs.
    pub kerr: KerrParams,
    /// TW only, one per hold time.
    pub densities: Vec<DensityProfile>,
    /// TW only, filled when a spool is requested.
    pub spool: Vec<SpoolRecord>,
    pub diagnostics: serde_json::Value,
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::config("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn hold_times(config: &RunConfig, kerr: &KerrParams) -> Vec<f64> {
    let axis = config.sweep.t_hold.values();
    match config.sweep.t_hold_units {
        HoldUnits::Seconds => axis,
        HoldUnits::Chi11 => axis.into_iter().map(|x| x / kerr.chi11).collect(),
    }
}

/// Evaluates the configured engine over the sweep.
pub fn execute(config: &RunConfig, progress: bool) -> CliResult<RunOutput> {
    let config = config.resolved()?;
    match config.engine {
        Engine::TwoMode | Engine::Mixture => exact_map(config),
        Engine::FockVerify => fock_map(config),
        Engine::Tw => tw_sweep(config, progress),
    }
}

fn exact_map(config: RunConfig) -> CliResult<RunOutput> {
    let kerr = config.kerr.expect("validated");
    let holds = hold_times(&config, &kerr);
    let phis = config.sweep.phi.values();
    let map = variance_map(
        &config.initial,
        &kerr,
        config.pulses.theta1,
        config.pulses.theta2,
        &holds,
        &phis,
    )?;
    let mut rows = Vec::with_capacity(map.values.len());
    for (i_t, &t_hold) in holds.iter().enumerate() {
        for (i_p, &phi) in phis.iter().enumerate() {
            let k = map.index(i_t, i_p);
            rows.push(ResultRow {
                t_hold,
                phi,
                mean_n2: map.mean_map[k],
                mean_n2_sq: map.mean_sq_map[k],
                v: map.values[k],
                stderr_v: 0.0,
                engine: config.engine,
                n_traj: 0,
                seed: 0,
            });
        }
    }
    let (v_min, t_min, phi_min) = map.minimum();
    let diagnostics = json!({
        "minimum": {"v": v_min, "t_hold": t_min, "phi": phi_min},
    });
    Ok(RunOutput {
        config,
        rows,
        kerr,
        densities: Vec::new(),
        spool: Vec::new(),
        diagnostics,
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn fock_map(config: RunConfig) -> CliResult<RunOutput> {
    let kerr = config.kerr.expect("validated");
    let cutoff = config.fock_cutoff.expect("resolved");
    let holds = hold_times(&config, &kerr);
    let phis = config.sweep.phi.values();
    let alpha0 = Complex64::new(config.initial.n0_mean.sqrt(), 0.0);
    let cells: Vec<(ResultRow, f64, f64)> = (0..holds.len() * phis.len())
        .into_par_iter()
        .map(|i| {
            let (t_hold, phi) = (holds[i / phis.len()], phis[i % phis.len()]);
            let seq = SequenceSpec::new(config.pulses.theta1, config.pulses.theta2, phi, t_hold)?;
            let (_, m) = fock::sequence_moments(alpha0, &seq, &kerr, cutoff)?;
            let exact = closed_form_moments(&config.initial, &seq, &kerr)?;
            let row = ResultRow {
                t_hold,
                phi,
                mean_n2: m.mean,
                mean_n2_sq: m.mean_sq,
                v: m.variance_norm,
                stderr_v: 0.0,
                engine: Engine::FockVerify,
                n_traj: 0,
                seed: 0,
            };
            Ok((row, relative(m.mean, exact.mean), relative(m.mean_sq, exact.mean_sq)))
        })
        .collect::<numsqueeze::Result<_>>()?;
    let dev_mean = cells.iter().map(|c| c.1).fold(0.0, f64::max);
    let dev_sq = cells.iter().map(|c| c.2).fold(0.0, f64::max);
    let diagnostics = json!({
        "cutoff": cutoff,
        "max_relative_deviation_from_closed_form": {"mean_n2": dev_mean, "mean_n2_sq": dev_sq},
    });
    Ok(RunOutput {
        config,
        rows: cells.into_iter().map(|c| c.0).collect(),
        kerr,
        densities: Vec::new(),
        spool: Vec::new(),
        diagnostics,
    })
}

fn density_profile(model: &TwModel, stats: &EnsembleStats, t_hold: f64) -> DensityProfile {
    let grid = model.grid();
    let length = model.scale().length;
    let vacuum = 0.5 / grid.dx;
    let physical = |mode: usize, at_t2: bool| -> Vec<f64> {
        stats
            .mean_density(mode, at_t2)
            .into_iter()
            .map(|d| (d - vacuum) / length)
            .collect()
    };
    DensityProfile {
        t_hold,
        x: grid.x.iter().map(|x| x * length).collect(),
        n1_t1: physical(1, false),
        n2_t1: physical(2, false),
        n1_t2: physical(1, true),
        n2_t2: physical(2, true),
    }
}

fn tw_sweep(config: RunConfig, progress: bool) -> CliResult<RunOutput> {
    let settings = config.tw.expect("validated");
    let model = TwModel::new(settings.model_config(config.initial))?;
    let kerr = model.kerr_params()?;
    let holds = hold_times(&config, &kerr);
    let phis = config.sweep.phi.values();
    let modes = model.grid().points;
    let keep = settings.spool.is_some();
    let mut rows = Vec::new();
    let mut densities = Vec::new();
    let mut spool_records = Vec::new();
    let mut per_hold = Vec::new();
    for (t_index, &t_hold) in holds.iter().enumerate() {
        let started = Instant::now();
        let schedule = PulseSchedule::from_areas(
            config.pulses.theta1,
            config.pulses.theta2,
            config.pulses.rabi_frequency,
            t_hold,
            0.0,
        )?;
        let (stats, kept) = run_ensemble(&model, &schedule, &phis, config.n_traj, config.seed, keep)?;
        let initial_total = extract_moments(&stats.total_initial, 2 * modes)?;
        let mut flagged = 0;
        let mut worst_number_z: f64 = 0.0;
        for (i, &phi) in phis.iter().enumerate() {
            let m2 = stats.mode2(i)?;
            let m1 = stats.mode1(i)?;
            flagged += m2.flagged as usize;
            // N1 + N2 is conserved trajectory by trajectory up to the
            // integrator drift, so the two extracted totals share their noise.
            let z = (m1.mean + m2.mean - initial_total.mean) / initial_total.stderr_mean;
            worst_number_z = worst_number_z.max(z.abs());
            rows.push(ResultRow {
                t_hold,
                phi,
                mean_n2: m2.mean,
                mean_n2_sq: m2.mean_sq,
                v: m2.variance_norm,
                stderr_v: m2.stderr_variance_norm,
                engine: Engine::Tw,
                n_traj: config.n_traj,
                seed: config.seed,
            });
        }
        let profile = density_profile(&model, &stats, t_hold);
        let peak = profile.n1_t1.iter().chain(&profile.n2_t1).fold(0.0f64, |a, &b| a.max(b));
        let most_negative = [&profile.n1_t1, &profile.n2_t1, &profile.n1_t2, &profile.n2_t2]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, &b| a.min(b));
        per_hold.push(json!({
            "t_hold": t_hold,
            "max_norm_drift": stats.max_norm_drift,
            "number_conservation_max_z": worst_number_z,
            "flagged_cells": flagged,
            "most_negative_density_over_peak": most_negative / peak,
            "mode2_profile_change": profile.mode2_relative_change(),
        }));
        densities.push(profile);
        spool_records.extend(kept.into_iter().map(|t| SpoolRecord {
            t_index: t_index as u32,
            trajectory: t.index,
            n0: t.n0,
            initial: t.initial,
            occupations: t.final_occupations,
        }));
        if progress {
            eprintln!(
                "tw: hold {}/{} (t_hold = {:.6e} s, {} trajectories) done in {:.1} s",
                t_index + 1,
                holds.len(),
                t_hold,
                config.n_traj,
                started.elapsed().as_secs_f64()
            );
        }
    }
    let gs = model.ground_state();
    let dt = config.tw.expect("validated").dt * model.config().trap.omega;
    let diagnostics = json!({
        "kerr_from_mode": kerr,
        "chemical_potential_hbar_omega": gs.chemical_potential(),
        "couplings_oscillator_units": model.couplings(),
        "dt_oscillator_units": dt,
        "kinetic_step_bound_oscillator_units": model.grid().max_stable_dt(),
        "length_scale_m": model.scale().length,
        "holds": per_hold,
    });
    Ok(RunOutput {
        config,
        rows,
        kerr,
        densities,
        spool: spool_records,
        diagnostics,
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, w: impl FnOnce() -> std::io::Result<()>) -> CliResult<()> {
    w().map_err(|e| CliError::io(path, e))
}

/// Writes `results.csv`, `meta.json` and, for TW runs, `density_t1_t2.csv`
/// and the optional spool.
pub fn write_outputs(out: &RunOutput, dir: &Path, wall_time: f64) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;

    let path = dir.join("results.csv");
    let mut w = create(&path)?;
    finish(&path, || {
        table::write_results(&mut w, &out.rows)?;
        w.flush()
    })?;

    let path = dir.join("meta.json");
    let meta = json!({
        "config": out.config,
        "version": env!("CARGO_PKG_VERSION"),
        "kerr": out.kerr,
        "wall_time_s": wall_time,
        "diagnostics": out.diagnostics,
    });
    let mut w = create(&path)?;
    finish(&path, || {
        serde_json::to_writer_pretty(&mut w, &meta)?;
        writeln!(w)?;
        w.flush()
    })?;

    if out.config.engine == Engine::Tw {
        let path = dir.join("density_t1_t2.csv");
        let mut w = create(&path)?;
        finish(&path, || {
            table::write_densities(&mut w, &out.densities)?;
            w.flush()
        })?;
    }

    if let Some(format) = out.config.tw.and_then(|t| t.spool) {
        let path = dir.join(format.file_name());
        let mut w = create(&path)?;
        let n_phi = out.config.sweep.phi.count;
        finish(&path, || {
            match format {
                SpoolFormat::Binary => {
                    let bytes = spool::encode(n_phi, &out.spool)
                        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                    w.write_all(&bytes)?;
                }
                SpoolFormat::Csv => spool::write_csv(&mut w, &out.spool)?,
            }
            w.flush()
        })?;
    }
    Ok(())
}

/// `execute` followed by `write_outputs`.
pub fn run(config: &RunConfig, dir: &Path, progress: bool) -> CliResult<RunOutput> {
    let started = Instant::now();
    let out = execute(config, progress)?;
    write_outputs(&out, dir, started.elapsed().as_secs_f64())?;
    Ok(out)
}
