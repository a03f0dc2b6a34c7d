//! One-dimensional truncated-Wigner simulation of the two-component field.
//!
//! Everything below the public configuration runs in oscillator units of the
//! axial trap. Each trajectory starts from the mean-field ground state in
//! mode 1 plus half a particle of complex Gaussian noise per grid mode and
//! field, and evolves under
//!
//! `i∂ₜψ₁ = L₁ψ₁ + Ωψ₂`, `i∂ₜψ₂ = L₂ψ₂ + Ω*ψ₁`,
//!
//! `Lⱼ = −½∂ₓ² + ½x² + gⱼⱼ(|ψⱼ|² − 1/dx) + gᵢⱼ(|ψᵢ|² − 1/(2dx))`.
//!
//! The `−1/dx` terms remove the vacuum mean field of the symmetrically
//! ordered fields. Moments are converted back to normal order in
//! [`extract_moments`].

mod ensemble;
mod grid;
mod ground_state;
mod model;
mod schedule;

pub use ensemble::{extract_moments, run_ensemble, EnsembleStats, MomentAccumulator, TrajectorySummary, CHUNK};
pub use grid::Grid1D;
pub use ground_state::{ground_state, GroundState, GroundStateOptions};
pub use model::{FieldState, Trajectory, TwConfig, TwModel, Workspace, EDGE_DENSITY_LIMIT};
pub use schedule::{PulseSchedule, DEFAULT_RABI_FREQUENCY};
