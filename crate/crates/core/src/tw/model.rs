use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::{Grid1D, Spectral};
use super::ground_state::{ground_state, GroundState, GroundStateOptions};
use super::schedule::PulseSchedule;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::two_mode::InitialEnsemble;
use crate::units::{reduce_to_1d, KerrParams, ModeDensity, SpeciesParams, TrapParams, TrapScale};

/// Ground-state density at the box edge must stay below this fraction of
/// the peak, so the periodic boundary is never felt.
pub const EDGE_DENSITY_LIMIT: f64 = 1e-10;

/// Physical and numerical parameters of a TW run. SI units except where
/// noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwConfig {
    pub species: SpeciesParams,
    pub trap: TrapParams,
    pub initial: InitialEnsemble,
    /// Grid points, a power of two.
    pub points: usize,
    /// Box length in axial oscillator lengths.
    pub box_length: f64,
    /// Time step, s.
    pub dt: f64,
    /// Factor applied to all three 1D couplings.
    #[serde(default = "unit")]
    pub coupling_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for TwConfig {
    fn default() -> Self {
        TwConfig {
            species: SpeciesParams::sodium(),
            trap: TrapParams::spherical(500.0),
            initial: InitialEnsemble::poissonian(1e4),
            points: 128,
            box_length: 16.0,
            dt: 1e-6,
            coupling_scale: 1.0,
        }
    }
}

impl TwConfig {
    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        self.trap.validate()?;
        self.initial.validate()?;
        ensure_positive("box_length", self.box_length)?;
        ensure_positive("dt", self.dt)?;
        ensure_non_negative("coupling_scale", self.coupling_scale)?;
        let grid = Grid1D::new(self.box_length, self.points)?;
        grid.check_dt(self.dt * self.trap.omega)
    }

    /// Scaled 1D couplings `(U11, U22, U12)`, J m.
    pub fn couplings_1d(&self) -> Result<[f64; 3]> {
        let u3 = self.species.interaction_strengths_3d()?;
        let mut out = [0.0; 3];
        for (o, u) in out.iter_mut().zip(u3) {
            *o = self.coupling_scale * reduce_to_1d(u, self.trap.omega_perp, self.species.mass)?;
        }
        Ok(out)
    }
}

/// Both Wigner fields on the grid, in units of `a_ho^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub psi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    /// s
    pub time: f64,
}

impl FieldState {
    /// `(Σ|ψ₁|²dx, Σ|ψ₂|²dx)`.
    pub fn occupations(&self, dx: f64) -> (f64, f64) {
        let n = |p: &[Complex64]| p.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
        (n(&self.psi1), n(&self.psi2))
    }

    fn densities(&self) -> [Vec<f64>; 2] {
        [
            self.psi1.iter().map(|c| c.norm_sqr()).collect(),
            self.psi2.iter().map(|c| c.norm_sqr()).collect(),
        ]
    }

    fn is_finite(&self) -> bool {
        self.psi1
            .iter()
            .chain(&self.psi2)
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// One trajectory through the pulse sequence, with the second pulse
/// applied at each requested phase from a shared state at `t2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    /// `|α₀|²` used for this trajectory.
    pub n0: f64,
    /// Wigner occupations `(N_W1, N_W2)` at `t0`.
    pub initial: (f64, f64),
    /// Wigner occupations at `t3`, one pair per phase.
    pub final_occupations: Vec<(f64, f64)>,
    /// `[|ψ₁|², |ψ₂|²]` at `t1` and `t2`, oscillator units.
    pub density_t1: [Vec<f64>; 2],
    pub density_t2: [Vec<f64>; 2],
}

/// Per-thread buffers.
pub struct Workspace {
    scratch: Vec<Complex64>,
    kinetic: Vec<(u64, Vec<Complex64>)>,
}

/// A TW model in oscillator units of the axial trap (`ħ = m = ω = 1`).
#[derive(Debug, Clone)]
pub struct TwModel {
    config: TwConfig,
    scale: TrapScale,
    grid: Grid1D,
    spectral: Spectral,
    potential: Vec<f64>,
    /// `(g11, g22, g12)` in units of `ħω a_ho`.
    g: [f64; 3],
    ground: GroundState,
    dt: f64,
}

impl TwModel {
    pub fn new(config: TwConfig) -> Result<Self> {
        Self::with_ground_state_options(config, &GroundStateOptions::default())
    }

    pub fn with_ground_state_options(config: TwConfig, opts: &GroundStateOptions) -> Result<Self> {
        config.validate()?;
        let scale = TrapScale::new(config.species.mass, config.trap.omega)?;
        let grid = Grid1D::new(config.box_length, config.points)?;
        let u = config.couplings_1d()?;
        let g = u.map(|u| scale.coupling_1d(u));
        let ground = ground_state(&grid, g[0] * config.initial.n0_mean, opts)?;
        let peak = ground.psi.iter().fold(0.0f64, |a, &p| a.max(p * p));
        let edge = ground.psi[0].powi(2).max(ground.psi[grid.points - 1].powi(2));
        if edge > EDGE_DENSITY_LIMIT * peak {
            return Err(Error::param(
                "box_length",
                format!("ground-state edge density is {:e} of the peak; enlarge the box", edge / peak),
            ));
        }
        // The split step is parametrically unstable once the phase of the
        // fastest mode, kinetic plus mean field, reaches π per step.
        let dt = config.dt * config.trap.omega;
        let rate = 0.5 * grid.k_max().powi(2) + ground.chemical_potential();
        if rate * dt > PI {
            return Err(Error::param(
                "dt",
                format!(
                    "step {:e} s exceeds the stability bound {:e} s set by k_max and the chemical potential",
                    config.dt,
                    PI / rate / config.trap.omega
                ),
            ));
        }
        Ok(TwModel {
            spectral: Spectral::new(&grid),
            potential: grid.x.iter().map(|x| 0.5 * x * x).collect(),
            dt,
            config,
            scale,
            grid,
            g,
            ground,
        })
    }

    pub fn config(&self) -> &TwConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn scale(&self) -> &TrapScale {
        &self.scale
    }

    pub fn ground_state(&self) -> &GroundState {
        &self.ground
    }

    /// `(g11, g22, g12)` in oscillator units.
    pub fn couplings(&self) -> [f64; 3] {
        self.g
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            scratch: vec![Complex64::new(0.0, 0.0); self.spectral.scratch_len()],
            kinetic: Vec::new(),
        }
    }

    /// Two-mode constants for both components sharing the ground-state
    /// orbital.
    pub fn kerr_params(&self) -> Result<KerrParams> {
        let mode = ModeDensity::Line {
            dx: self.grid.dx * self.scale.length,
            density: self.ground.psi.iter().map(|p| p * p / self.scale.length).collect(),
        };
        KerrParams::from_mode(self.config.couplings_1d()?, &mode)
    }

    /// Noise-free state `√N ψ₀` in mode 1.
    pub fn mean_field_state(&self, n: f64) -> FieldState {
        let a = n.sqrt();
        FieldState {
            psi1: self.ground.psi.iter().map(|&p| Complex64::new(a * p, 0.0)).collect(),
            psi2: vec![Complex64::new(0.0, 0.0); self.grid.points],
            time: 0.0,
        }
    }

    /// Initial Wigner sample: `ψ₁ = √N ψ₀ + η₁`, `ψ₂ = η₂`, with
    /// `⟨η(xᵢ)η*(xⱼ)⟩ = δᵢⱼ/(2dx)`. For Fano factors above one `N` is drawn
    /// from a Gaussian of variance `(F − 1)N₀` truncated at zero.
    ///
    /// Draw order from `rng`: `N` (only when `F > 1`), then real and
    /// imaginary parts of `η₁` point by point, then `η₂`.
    pub fn sample_initial(&self, rng: &mut ChaCha8Rng) -> (f64, FieldState) {
        let init = &self.config.initial;
        let var = init.classical_variance();
        let n0 = if var > 0.0 {
            let sigma = var.sqrt();
            loop {
                let z: f64 = StandardNormal.sample(rng);
                let n = init.n0_mean + sigma * z;
                if n >= 0.0 {
                    break n;
                }
            }
        } else {
            init.n0_mean
        };
        let mut state = self.mean_field_state(n0);
        let s = 0.5 / self.grid.dx.sqrt();
        for psi in [&mut state.psi1, &mut state.psi2] {
            for c in psi.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *c += Complex64::new(s * re, s * im);
            }
        }
        (n0, state)
    }

    /// Evolves with constant coupling `omega` (rad/s) for `duration` seconds
    /// using symmetric split steps no longer than the configured `dt`.
    pub fn evolve(&self, state: &mut FieldState, ws: &mut Workspace, duration: f64, omega: Complex64) -> Result<()> {
        let mut pending = 0.0;
        self.segment(state, ws, duration, omega, &mut pending)?;
        self.flush(state, ws, &mut pending);
        Ok(())
    }

    /// Runs the full sequence with the schedule's own `phi2`.
    pub fn run_trajectory(&self, schedule: &PulseSchedule, seed: u64, index: u64, ws: &mut Workspace) -> Result<Trajectory> {
        self.run_branched(schedule, &[schedule.phi2], seed, index, ws)
    }

    /// Runs the sequence to `t2` once, then finishes it for every phase in
    /// `phis`. Trajectory `index` draws from ChaCha8 stream `index` of `seed`.
    pub fn run_branched(
        &self,
        schedule: &PulseSchedule,
        phis: &[f64],
        seed: u64,
        index: u64,
        ws: &mut Workspace,
    ) -> Result<Trajectory> {
        schedule.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let (n0, mut state) = self.sample_initial(&mut rng);
        state.time = schedule.t0;
        let initial = state.occupations(self.grid.dx);

        let omega0 = Complex64::new(schedule.omega0, 0.0);
        let mut pending = 0.0;
        self.segment(&mut state, ws, schedule.t1 - schedule.t0, omega0, &mut pending)?;
        self.flush(&mut state, ws, &mut pending);
        let density_t1 = state.densities();
        self.segment(&mut state, ws, schedule.t2 - schedule.t1, Complex64::new(0.0, 0.0), &mut pending)?;
        self.flush(&mut state, ws, &mut pending);
        let density_t2 = state.densities();

        let mut final_occupations = Vec::with_capacity(phis.len());
        for &phi in phis {
            let mut branch = state.clone();
            let mut pending = 0.0;
            let omega = Complex64::from_polar(schedule.omega0, phi);
            self.segment(&mut branch, ws, schedule.t3 - schedule.t2, omega, &mut pending)?;
            self.flush(&mut branch, ws, &mut pending);
            final_occupations.push(branch.occupations(self.grid.dx));
        }
        Ok(Trajectory {
            index,
            n0,
            initial,
            final_occupations,
            density_t1,
            density_t2,
        })
    }

    /// Split steps over one segment. The trailing half kinetic step is left
    /// in `pending` so consecutive steps merge their kinetic halves.
    fn segment(
        &self,
        state: &mut FieldState,
        ws: &mut Workspace,
        duration: f64,
        omega: Complex64,
        pending: &mut f64,
    ) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let total = duration * self.config.trap.omega;
        let steps = (total / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = total / steps as f64;
        let coupling = omega / self.config.trap.omega;
        let start = state.time;
        for step in 0..steps {
            self.kinetic(state, ws, *pending + 0.5 * h);
            self.local(state, h, coupling);
            *pending = 0.5 * h;
            if step % 256 == 255 && !state.is_finite() {
                return Err(self.blow_up(start + (step + 1) as f64 * h / self.config.trap.omega));
            }
        }
        state.time = start + duration;
        if !state.is_finite() {
            return Err(self.blow_up(state.time));
        }
        Ok(())
    }

    fn blow_up(&self, time: f64) -> Error {
        Error::Integration {
            time,
            reason: "field became non-finite".into(),
        }
    }

    fn flush(&self, state: &mut FieldState, ws: &mut Workspace, pending: &mut f64) {
        self.kinetic(state, ws, *pending);
        *pending = 0.0;
    }

    fn kinetic(&self, state: &mut FieldState, ws: &mut Workspace, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let key = tau.to_bits();
        let pos = match ws.kinetic.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                if ws.kinetic.len() >= 16 {
                    ws.kinetic.clear();
                }
                ws.kinetic.push((key, self.spectral.kinetic_factors(tau)));
                ws.kinetic.len() - 1
            }
        };
        let factors = &ws.kinetic[pos].1;
        self.spectral.apply(&mut state.psi1, factors, &mut ws.scratch);
        self.spectral.apply(&mut state.psi2, factors, &mut ws.scratch);
    }

    /// Pointwise step of trap, mean-field and coupling terms. Without
    /// coupling the densities are constants of the local flow and the step is
    /// exact; with coupling the Hamiltonian is taken at the midpoint.
    fn local(&self, state: &mut FieldState, h: f64, coupling: Complex64) {
        let [g11, g22, g12] = self.g;
        let inv_dx = 1.0 / self.grid.dx;
        let offset1 = g11 * inv_dx + 0.5 * g12 * inv_dx;
        let offset2 = g22 * inv_dx + 0.5 * g12 * inv_dx;
        let diag = |v: f64, a: Complex64, b: Complex64| {
            let (n1, n2) = (a.norm_sqr(), b.norm_sqr());
            (v + g11 * n1 + g12 * n2 - offset1, v + g22 * n2 + g12 * n1 - offset2)
        };
        let uncoupled = coupling.norm_sqr() == 0.0;
        for ((a, b), &v) in state.psi1.iter_mut().zip(state.psi2.iter_mut()).zip(&self.potential) {
            let (h1, h2) = diag(v, *a, *b);
            if uncoupled {
                *a *= Complex64::from_polar(1.0, -h1 * h);
                *b *= Complex64::from_polar(1.0, -h2 * h);
            } else {
                let (am, bm) = rotate(*a, *b, h1, h2, coupling, 0.5 * h);
                let (h1, h2) = diag(v, am, bm);
                (*a, *b) = rotate(*a, *b, h1, h2, coupling, h);
            }
        }
    }
}

/// `exp(−iHt)` applied to `(a, b)` for `H = [[h1, Ω], [Ω*, h2]]`.
pub(crate) fn rotate(a: Complex64, b: Complex64, h1: f64, h2: f64, omega: Complex64, t: f64) -> (Complex64, Complex64) {
    let m = 0.5 * (h1 + h2);
    let d = 0.5 * (h1 - h2);
    let r = (d * d + omega.norm_sqr()).sqrt();
    let (s, c) = (r * t).sin_cos();
    let sinc = if r * t == 0.0 { t } else { s / r };
    let phase = Complex64::from_polar(1.0, -m * t);
    let mi = Complex64::new(0.0, -sinc);
    let a2 = phase * (a * c + mi * (d * a + omega * b));
    let b2 = phase * (b * c + mi * (omega.conj() * a - d * b));
    (a2, b2)
}
