use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use numsqueeze::fock::{self, default_cutoff};
use numsqueeze::tw::{extract_moments, MomentAccumulator};
use numsqueeze::two_mode::{closed_form_moments, mixture_moments, InitialEnsemble, SequenceSpec};
use numsqueeze::{Complex64, KerrParams, MomentSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{preset, RunConfig};
use crate::error::CliResult;
use crate::runner::{execute, RunOutput};
use crate::table::ResultRow;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    /// Worst deviation found, in the units of `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} (measured {:.3e}, tolerance {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub n0s: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
    /// Relative change applied to `χ₂₂` on the closed-form side only.
    pub chi_perturbation: f64,
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            n0s: vec![1.0, 2.0, 4.0, 8.0, 16.0, 20.0],
            draws: 50,
            seed: 0,
            chi_perturbation: 0.0,
            tolerance: 1e-6,
        }
    }
}

/// Random sequence and Kerr constants with shear phases of order one.
pub fn random_case(rng: &mut impl Rng) -> (SequenceSpec, KerrParams) {
    let seq = SequenceSpec {
        theta1: rng.random_range(0.0..FRAC_PI_2),
        theta2: rng.random_range(0.0..FRAC_PI_2),
        phi: rng.random_range(0.0..2.0 * PI),
        t_hold: rng.random_range(0.0..2.0),
    };
    let kerr = KerrParams {
        chi11: rng.random_range(0.5..1.5),
        chi22: rng.random_range(0.5..1.5),
        chi12: rng.random_range(0.5..1.5),
        delta: 0.0,
    };
    (seq, kerr)
}

/// Truncated-Fock propagation against the closed form.
pub fn oracle_equivalence(opts: &OracleOptions) -> CliResult<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    for &n0 in &opts.n0s {
        for _ in 0..opts.draws {
            let (seq, kerr) = random_case(&mut rng);
            let alpha0 = Complex64::new(n0.sqrt(), 0.0);
            let (_, f) = fock::sequence_moments(alpha0, &seq, &kerr, default_cutoff(n0))?;
            let mut shifted = kerr;
            shifted.chi22 *= 1.0 + opts.chi_perturbation;
            let e = closed_form_moments(&InitialEnsemble::poissonian(n0), &seq, &shifted)?;
            let dev = relative(f.mean, e.mean).max(relative(f.mean_sq, e.mean_sq));
            if dev > worst || worst_case.is_empty() {
                worst = worst.max(dev);
                worst_case = format!("N0 = {n0}, {seq:?}");
            }
        }
    }
    Ok(SuiteReport {
        name: "fock-vs-closed-form",
        passed: worst <= opts.tolerance,
        measured: worst,
        tolerance: opts.tolerance,
        detail: format!(
            "{} draws at N0 in {:?}; worst relative deviation in <N2>, <N2^2> at {worst_case}",
            opts.draws, opts.n0s
        ),
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingOptions {
    pub modes: Vec<usize>,
    pub samples: u64,
    /// `|α₀|²` of the displaced mode.
    pub occupation: f64,
    pub seed: u64,
    /// Allowed deviation in standard errors.
    pub sigmas: f64,
}

impl Default for OrderingOptions {
    fn default() -> Self {
        OrderingOptions {
            modes: vec![1, 64, 256],
            samples: 100_000,
            occupation: 25.0,
            seed: 0,
            sigmas: 3.0,
        }
    }
}

/// Extracted moments of synthetic Wigner ensembles: vacuum in every mode,
/// and vacuum with mode 0 displaced to a coherent amplitude.
pub fn synthetic_moments(modes: usize, samples: u64, occupation: f64, seed: u64) -> CliResult<(MomentSet, MomentSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(modes as u64);
    let alpha = occupation.sqrt();
    let (mut vacuum, mut coherent) = (MomentAccumulator::default(), MomentAccumulator::default());
    for _ in 0..samples {
        let mut rest = 0.0;
        let mut first = (0.0, 0.0);
        for j in 0..modes {
            // ⟨|η|²⟩ = 1/2
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5;
            let y: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5;
            if j == 0 {
                first = (x, y);
            } else {
                rest += x * x + y * y;
            }
        }
        vacuum.push(rest + first.0 * first.0 + first.1 * first.1);
        coherent.push(rest + (alpha + first.0).powi(2) + first.1 * first.1);
    }
    Ok((extract_moments(&vacuum, modes)?, extract_moments(&coherent, modes)?))
}

pub fn ordering_identities(opts: &OrderingOptions) -> CliResult<SuiteReport> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &m in &opts.modes {
        let (vac, coh) = synthetic_moments(m, opts.samples, opts.occupation, opts.seed)?;
        let z = [
            vac.mean / vac.stderr_mean,
            vac.mean_sq / vac.stderr_mean_sq,
            (coh.mean - opts.occupation) / coh.stderr_mean,
            (coh.variance_norm - 1.0) / coh.stderr_variance_norm,
        ];
        let m_worst = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        worst = worst.max(m_worst);
        parts.push(format!("M = {m}: max |z| {m_worst:.2}"));
    }
    Ok(SuiteReport {
        name: "wigner-ordering",
        passed: worst <= opts.sigmas,
        measured: worst,
        tolerance: opts.sigmas,
        detail: format!(
            "vacuum <N> = <N^2> = 0 and coherent v = 1 over {} samples; {}",
            opts.samples,
            parts.join(", ")
        ),
    })
}

/// A TW row next to the two-mode prediction for the same cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub row: ResultRow,
    pub exact: MomentSet,
    /// `(v_TW − v_exact)/stderr_v`.
    pub z: f64,
}

/// Two-mode predictions for every row of a TW run, with the mode-derived
/// Kerr constants.
pub fn compare_with_two_mode(out: &RunOutput) -> CliResult<Vec<Comparison>> {
    out.rows
        .iter()
        .map(|row| {
            let seq = SequenceSpec::new(out.config.pulses.theta1, out.config.pulses.theta2, row.phi, row.t_hold)?;
            let exact = if out.config.initial.fano == 1.0 {
                closed_form_moments(&out.config.initial, &seq, &out.kerr)?
            } else {
                mixture_moments(&out.config.initial, &seq, &out.kerr)?
            };
            let z = if row.stderr_v > 0.0 {
                (row.v - exact.variance_norm) / row.stderr_v
            } else {
                f64::INFINITY
            };
            Ok(Comparison {
                row: row.clone(),
                exact,
                z,
            })
        })
        .collect()
}

/// TW against the two-mode model in the frozen-mode regime.
pub fn frozen_mode(config: &RunConfig, sigmas: f64, progress: bool) -> CliResult<(SuiteReport, RunOutput)> {
    let out = execute(config, progress)?;
    let cmp = compare_with_two_mode(&out)?;
    let worst = cmp
        .iter()
        .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
        .expect("sweep is never empty");
    let report = SuiteReport {
        name: "frozen-mode",
        passed: worst.z.abs() <= sigmas,
        measured: worst.z.abs(),
        tolerance: sigmas,
        detail: format!(
            "{} cells, {} trajectories; worst at phi = {:.4}: TW v = {:.4} +- {:.4}, two-mode v = {:.4}",
            cmp.len(),
            out.config.n_traj,
            worst.row.phi,
            worst.row.v,
            worst.row.stderr_v,
            worst.exact.variance_norm
        ),
    };
    Ok((report, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fock,
    Ordering,
    FrozenMode,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Fock, Suite::Ordering, Suite::FrozenMode];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fock => "fock",
            Suite::Ordering => "ordering",
            Suite::FrozenMode => "frozen-mode",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub oracle: OracleOptions,
    pub ordering: OrderingOptions,
    /// TW configuration of the frozen-mode suite.
    pub frozen: RunConfig,
    pub progress: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suites: Suite::ALL.to_vec(),
            oracle: OracleOptions::default(),
            ordering: OrderingOptions::default(),
            frozen: preset("fig3a").expect("built-in preset"),
            progress: false,
        }
    }
}

pub fn run_suites(opts: &VerifyOptions, mut report: impl FnMut(&SuiteReport)) -> CliResult<Vec<SuiteReport>> {
    let mut out = Vec::new();
    for suite in &opts.suites {
        let r = match suite {
            Suite::Fock => oracle_equivalence(&opts.oracle)?,
            Suite::Ordering => ordering_identities(&opts.ordering)?,
            Suite::FrozenMode => frozen_mode(&opts.frozen, 3.0, opts.progress)?.0,
        };
        report(&r);
        out.push(r);
    }
    Ok(out)
}
