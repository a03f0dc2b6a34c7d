use num_complex::Complex64;

use super::grid::{Grid1D, Spectral};
use crate::error::{ensure_non_negative, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateOptions {
    /// Imaginary time steps, used in order; each stage starts from the
    /// previous result.
    pub stages: Vec<f64>,
    /// Convergence thresholds on `|ΔE|/Δτ` and on `‖Δψ‖/Δτ` in the final
    /// stage; earlier stages stop at 100 times these. Both must hold.
    pub tolerance: f64,
    pub state_tolerance: f64,
    /// Step budget per stage.
    pub max_steps: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            stages: vec![0.05, 0.01, 0.002, 0.0005],
            tolerance: 1e-10,
            state_tolerance: 1e-8,
            max_steps: 400_000,
        }
    }
}

/// Mean-field ground state in oscillator units (`ħ = m = ω = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    /// Real, non-negative, `Σψ²dx = 1`.
    pub psi: Vec<f64>,
    /// Energy per particle.
    pub energy: f64,
    /// Kinetic, potential and interaction parts of `energy`.
    pub parts: [f64; 3],
    pub steps: usize,
}

impl GroundState {
    /// `2K − 2P + I` relative to the energy; zero for an exact stationary state.
    pub fn virial_residual(&self) -> f64 {
        let [k, p, i] = self.parts;
        (2.0 * k - 2.0 * p + i) / self.energy
    }

    /// Chemical potential `K + P + 2I`.
    pub fn chemical_potential(&self) -> f64 {
        let [k, p, i] = self.parts;
        k + p + 2.0 * i
    }
}

/// Ground state of `−½∂²ψ + ½x²ψ + gN|ψ|²ψ = μψ` by split-step imaginary-time
/// propagation. `gn` is the 1D coupling times the atom number.
pub fn ground_state(grid: &Grid1D, gn: f64, opts: &GroundStateOptions) -> Result<GroundState> {
    ensure_non_negative("gn", gn)?;
    if opts.stages.is_empty() {
        return Err(Error::param("stages", "need at least one imaginary time step"));
    }
    let spectral = Spectral::new(grid);
    let mut scratch = vec![Complex64::new(0.0, 0.0); spectral.scratch_len()];
    let potential: Vec<f64> = grid.x.iter().map(|x| 0.5 * x * x).collect();

    // Start from the wider of the oscillator and Thomas-Fermi sizes.
    let r_tf = (1.5 * gn).cbrt();
    let width = r_tf.max(1.0);
    let mut psi: Vec<Complex64> = grid
        .x
        .iter()
        .map(|&x| Complex64::new((-0.5 * (x / width).powi(2)).exp(), 0.0))
        .collect();
    normalize(&mut psi, grid.dx);

    let energy = |psi: &[Complex64], scratch: &mut [Complex64]| {
        let k = spectral.kinetic_energy(psi, grid.dx, scratch);
        let (mut p, mut i) = (0.0, 0.0);
        for (c, v) in psi.iter().zip(&potential) {
            let n = c.norm_sqr();
            p += v * n;
            i += 0.5 * gn * n * n;
        }
        [k, p * grid.dx, i * grid.dx]
    };

    // Large steps against a strong mean field overshoot into a 2-cycle;
    // keep the nonlinear phase per step below about one half.
    let mu_tf = (3.0 * gn / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0);
    let tau_cap = 0.5 / mu_tf.max(1.0);

    const CHECK_EVERY: usize = 10;
    let mut total_steps = 0;
    let last = opts.stages.len() - 1;
    for (stage, &tau) in opts.stages.iter().enumerate() {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("stages", format!("imaginary time steps must be positive, got {tau}")));
        }
        let tau = tau.min(tau_cap);
        let loosen = if stage == last { 1.0 } else { 100.0 };
        let (tol, state_tol) = (loosen * opts.tolerance, loosen * opts.state_tolerance);
        let half = spectral.diffusion_factors(0.5 * tau);
        let mut e_prev = energy(&psi, &mut scratch).iter().sum::<f64>();
        let mut steps = 0;
        loop {
            let before = psi.clone();
            for _ in 0..CHECK_EVERY {
                spectral.apply(&mut psi, &half, &mut scratch);
                for (c, v) in psi.iter_mut().zip(&potential) {
                    *c *= (-(v + gn * c.norm_sqr()) * tau).exp();
                }
                spectral.apply(&mut psi, &half, &mut scratch);
                // drop the imaginary rounding so the state stays real
                for c in psi.iter_mut() {
                    c.im = 0.0;
                }
                normalize(&mut psi, grid.dx);
            }
            steps += CHECK_EVERY;
            let e = energy(&psi, &mut scratch).iter().sum::<f64>();
            let span = CHECK_EVERY as f64 * tau;
            let rate = (e - e_prev).abs() / span;
            let moved = (before.iter().zip(&psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * grid.dx).sqrt() / span;
            e_prev = e;
            if !rate.is_finite() {
                return Err(Error::GroundState {
                    steps: total_steps + steps,
                    delta: rate,
                });
            }
            if rate < tol && moved < state_tol {
                break;
            }
            if steps >= opts.max_steps {
                return Err(Error::GroundState {
                    steps: total_steps + steps,
                    delta: rate,
                });
            }
        }
        total_steps += steps;
    }
    let parts = energy(&psi, &mut scratch);
    Ok(GroundState {
        psi: psi.iter().map(|c| c.re.abs()).collect(),
        energy: parts.iter().sum(),
        parts,
        steps: total_steps,
    })
}

fn normalize(psi: &mut [Complex64], dx: f64) {
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
    let s = 1.0 / norm.sqrt();
    for c in psi.iter_mut() {
        *c *= s;
    }
}
