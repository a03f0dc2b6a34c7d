//! Physical constants, species and trap parameters, and the derived
//! contact-interaction and Kerr strengths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Reduced Planck constant, J s (exact SI value).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ²³Na, kg.
pub const SODIUM_MASS: f64 = 22.989_769_28 * ATOMIC_MASS_UNIT;

/// Tolerance on the normalization of a supplied mode density.
pub const MODE_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesParams {
    /// kg
    pub mass: f64,
    /// s-wave scattering lengths, m
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
}

impl SpeciesParams {
    /// Sodium in |F=1, m=+1> and |F=2, m=0>.
    pub fn sodium() -> Self {
        SpeciesParams {
            mass: SODIUM_MASS,
            a11: 2.8e-9,
            a22: 3.0e-9,
            a12: 2.8e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("mass", self.mass)?;
        ensure_non_negative("a11", self.a11)?;
        ensure_non_negative("a22", self.a22)?;
        ensure_non_negative("a12", self.a12)
    }

    /// Contact strengths `(U11, U22, U12)` in J m³.
    pub fn interaction_strengths_3d(&self) -> Result<[f64; 3]> {
        self.validate()?;
        Ok([
            interaction_strength_3d(self.a11, self.mass)?,
            interaction_strength_3d(self.a22, self.mass)?,
            interaction_strength_3d(self.a12, self.mass)?,
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapParams {
    /// Angular frequency of the (spherical) trap, rad/s.
    pub omega: f64,
    /// Transverse angular frequency used for the 1D reduction, rad/s.
    pub omega_perp: f64,
}

impl TrapParams {
    pub fn spherical(frequency_hz: f64) -> Self {
        let omega = 2.0 * PI * frequency_hz;
        TrapParams {
            omega,
            omega_perp: omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("omega", self.omega)?;
        ensure_positive("omega_perp", self.omega_perp)
    }
}

/// Two-mode Kerr constants, rad/s.
///
/// `delta` is the detuning of the coupling. All engines work on resonance in
/// the rotating frame, so it must be zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrParams {
    pub chi11: f64,
    pub chi22: f64,
    pub chi12: f64,
    #[serde(default)]
    pub delta: f64,
}

impl KerrParams {
    pub fn new(chi11: f64, chi22: f64, chi12: f64) -> Result<Self> {
        let kerr = KerrParams {
            chi11,
            chi22,
            chi12,
            delta: 0.0,
        };
        kerr.validate()?;
        Ok(kerr)
    }

    /// Constants quoted for the sodium Fig. 2 configuration (N₀ = 10⁷, 500 Hz).
    pub fn sodium_500hz() -> Self {
        KerrParams {
            chi11: 0.018,
            chi22: 0.019,
            chi12: 0.018,
            delta: 0.0,
        }
    }

    /// All three constants equal; no phase shearing.
    pub fn degenerate(chi: f64) -> Self {
        KerrParams {
            chi11: chi,
            chi22: chi,
            chi12: chi,
            delta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("chi11", self.chi11)?;
        ensure_finite("chi22", self.chi22)?;
        ensure_finite("chi12", self.chi12)?;
        ensure_finite("delta", self.delta)?;
        if self.delta != 0.0 {
            return Err(Error::param(
                "delta",
                "engines run on resonance; detuning must be 0",
            ));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.chi11 == self.chi22 && self.chi22 == self.chi12
    }

    /// Kerr constants for three contact strengths sharing one spatial mode.
    pub fn from_mode(strengths: [f64; 3], mode: &ModeDensity) -> Result<Self> {
        KerrParams::new(
            chi_from_mode(strengths[0], mode)?,
            chi_from_mode(strengths[1], mode)?,
            chi_from_mode(strengths[2], mode)?,
        )
    }
}

/// Contact interaction strength `U = 4πħ²a/m`, J m³.
pub fn interaction_strength_3d(scattering_length: f64, mass: f64) -> Result<f64> {
    ensure_positive("mass", mass)?;
    ensure_non_negative("scattering_length", scattering_length)?;
    Ok(4.0 * PI * HBAR * HBAR * scattering_length / mass)
}

/// Effective 1D strength for a frozen transverse Gaussian ground state,
/// `U₁D = U₃D / (2π a⊥²)` with `a⊥² = ħ/(m ω⊥)`. J m.
pub fn reduce_to_1d(u3d: f64, omega_perp: f64, mass: f64) -> Result<f64> {
    ensure_finite("u3d", u3d)?;
    ensure_positive("omega_perp", omega_perp)?;
    ensure_positive("mass", mass)?;
    let a_perp_sq = HBAR / (mass * omega_perp);
    Ok(u3d / (2.0 * PI * a_perp_sq))
}

/// A sampled single-particle density `|ψ₀|²`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeDensity {
    /// 1D line density on a uniform grid, m⁻¹.
    Line { dx: f64, density: Vec<f64> },
    /// Spherically symmetric 3D density sampled at `r = i·dr`, i = 0.., m⁻³.
    Radial { dr: f64, density: Vec<f64> },
    /// Full 3D density on a uniform box grid, row-major `[nx][ny][nz]`, m⁻³.
    Cartesian {
        spacing: [f64; 3],
        shape: [usize; 3],
        density: Vec<f64>,
    },
}

impl ModeDensity {
    /// `(∫|ψ₀|², ∫|ψ₀|⁴)` by the trapezoid rule. Modes are expected to vanish at
    /// the grid edges, where the rule converges spectrally.
    pub fn integrals(&self) -> Result<(f64, f64)> {
        match self {
            ModeDensity::Line { dx, density } => {
                ensure_positive("dx", *dx)?;
                let (n, q) = trapezoid(density, |_, rho| (rho, rho * rho));
                Ok((n * dx, q * dx))
            }
            ModeDensity::Radial { dr, density } => {
                ensure_positive("dr", *dr)?;
                let (n, q) = trapezoid(density, |i, rho| {
                    let r = i as f64 * dr;
                    let shell = 4.0 * PI * r * r;
                    (shell * rho, shell * rho * rho)
                });
                Ok((n * dr, q * dr))
            }
            ModeDensity::Cartesian {
                spacing,
                shape,
                density,
            } => {
                for &h in spacing {
                    ensure_positive("spacing", h)?;
                }
                let [nx, ny, nz] = *shape;
                if nx * ny * nz != density.len() {
                    return Err(Error::param(
                        "density",
                        format!(
                            "length {} does not match shape {nx}x{ny}x{nz}",
                            density.len()
                        ),
                    ));
                }
                let edge = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
                let (mut norm, mut quartic) = (0.0, 0.0);
                for ix in 0..nx {
                    for iy in 0..ny {
                        let wxy = edge(ix, nx) * edge(iy, ny);
                        let row = &density[(ix * ny + iy) * nz..(ix * ny + iy + 1) * nz];
                        for (iz, &rho) in row.iter().enumerate() {
                            let w = wxy * edge(iz, nz);
                            norm += w * rho;
                            quartic += w * rho * rho;
                        }
                    }
                }
                let vol = spacing[0] * spacing[1] * spacing[2];
                Ok((norm * vol, quartic * vol))
            }
        }
    }
}

fn trapezoid(values: &[f64], f: impl Fn(usize, f64) -> (f64, f64)) -> (f64, f64) {
    let n = values.len();
    let (mut a, mut b) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let (fa, fb) = f(i, v);
        a += w * fa;
        b += w * fb;
    }
    (a, b)
}

/// `χ = (U / 2ħ) ∫|ψ₀|⁴`, rad/s. The dimension of `u` must match the mode
/// (J m³ for 3D densities, J m for line densities).
pub fn chi_from_mode(u: f64, mode: &ModeDensity) -> Result<f64> {
    ensure_finite("u", u)?;
    let (norm, quartic) = mode.integrals()?;
    if !((norm - 1.0).abs() <= MODE_NORM_TOLERANCE) {
        return Err(Error::Normalization { norm });
    }
    Ok(u / (2.0 * HBAR) * quartic)
}

/// Harmonic-oscillator scale of a trap: the natural length, time and
/// energy units with `ħ = m = ω = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapScale {
    pub length: f64,
    pub time: f64,
    pub energy: f64,
}

impl TrapScale {
    pub fn new(mass: f64, omega: f64) -> Result<Self> {
        ensure_positive("mass", mass)?;
        ensure_positive("omega", omega)?;
        Ok(TrapScale {
            length: (HBAR / (mass * omega)).sqrt(),
            time: 1.0 / omega,
            energy: HBAR * omega,
        })
    }

    /// 1D interaction strength (J m) in units of `ħω a_ho`.
    pub fn coupling_1d(&self, u1d: f64) -> f64 {
        u1d / (self.energy * self.length)
    }

    /// Field amplitude (m^-1/2) in units of `a_ho^-1/2`.
    pub fn field_to_trap(&self, psi: f64) -> f64 {
        psi * self.length.sqrt()
    }

    pub fn field_to_si(&self, psi: f64) -> f64 {
        psi / self.length.sqrt()
    }
}
