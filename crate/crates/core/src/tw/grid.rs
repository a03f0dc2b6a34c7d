use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_positive, Error, Result};

/// Uniform periodic grid centred on the trap.
///
/// Units are the caller's; the TW engine uses oscillator units.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub length: f64,
    pub points: usize,
    pub dx: f64,
    pub x: Vec<f64>,
    /// Squared wavenumbers in FFT order.
    pub k2: Vec<f64>,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 32;

    pub fn new(length: f64, points: usize) -> Result<Self> {
        ensure_positive("length", length)?;
        if points < Self::MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::param(
                "points",
                format!("must be a power of two >= {}, got {points}", Self::MIN_POINTS),
            ));
        }
        let dx = length / points as f64;
        let x = (0..points)
            .map(|i| (i as f64 - (points / 2) as f64) * dx)
            .collect();
        let dk = 2.0 * PI / length;
        let k2 = (0..points)
            .map(|j| {
                let m = if j < points / 2 { j as f64 } else { j as f64 - points as f64 };
                (m * dk).powi(2)
            })
            .collect();
        Ok(Grid1D {
            length,
            points,
            dx,
            x,
            k2,
        })
    }

    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Largest step for which the kinetic phase `k²dt/2` of the highest
    /// resolved wavenumber stays below π (units with `ħ = m = 1`).
    pub fn max_stable_dt(&self) -> f64 {
        2.0 * PI / self.k_max().powi(2)
    }

    pub fn check_dt(&self, dt: f64) -> Result<()> {
        ensure_positive("dt", dt)?;
        let limit = self.max_stable_dt();
        if dt > limit {
            return Err(Error::param(
                "dt",
                format!("step {dt:e} exceeds the spectral stability bound {limit:e} for dx = {:e}", self.dx),
            ));
        }
        Ok(())
    }

    /// `Σ f(xᵢ) dx`.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        values.into_iter().sum::<f64>() * self.dx
    }
}

/// Forward/inverse FFT pair of the grid size.
#[derive(Clone)]
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("points", &self.k2.len()).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
            k2: grid.k2.clone(),
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// `exp(−i k²τ/2)/M`, the kinetic factor with the inverse-FFT
    /// normalization folded in.
    pub fn kinetic_factors(&self, tau: f64) -> Vec<Complex64> {
        let scale = 1.0 / self.k2.len() as f64;
        self.k2
            .iter()
            .map(|&k2| Complex64::from_polar(scale, -0.5 * k2 * tau))
            .collect()
    }

    /// `exp(−k²τ/2)/M` for imaginary-time steps.
    pub fn diffusion_factors(&self, tau: f64) -> Vec<f64> {
        let scale = 1.0 / self.k2.len() as f64;
        self.k2.iter().map(|&k2| scale * (-0.5 * k2 * tau).exp()).collect()
    }

    /// Multiplies the spectrum of `psi` by `factors`.
    pub fn apply<T>(&self, psi: &mut [Complex64], factors: &[T], scratch: &mut [Complex64])
    where
        T: Copy,
        Complex64: std::ops::MulAssign<T>,
    {
        self.forward.process_with_scratch(psi, scratch);
        for (p, &f) in psi.iter_mut().zip(factors) {
            *p *= f;
        }
        self.inverse.process_with_scratch(psi, scratch);
    }

    /// `∫|∂ₓψ|²/2 dx` computed spectrally.
    pub fn kinetic_energy(&self, psi: &[Complex64], dx: f64, scratch: &mut [Complex64]) -> f64 {
        let mut buf = psi.to_vec();
        self.forward.process_with_scratch(&mut buf, scratch);
        let m = psi.len() as f64;
        // Parseval: Σ|ψ_i|² = Σ|ψ̂_k|²/M
        0.5 * dx / m
            * buf
                .iter()
                .zip(&self.k2)
                .map(|(c, &k2)| k2 * c.norm_sqr())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid1D::new(16.0, 64).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.x[32], 0.0);
        assert_eq!(g.x[0], -8.0);
        assert_eq!(g.k2[1], g.k2[63]);
        assert_eq!(g.k2[32], g.k_max().powi(2));
        assert!(Grid1D::new(16.0, 48).is_err());
        assert!(Grid1D::new(16.0, 16).is_err());
        assert!(Grid1D::new(-1.0, 64).is_err());
    }

    #[test]
    fn stability_bound() {
        let g = Grid1D::new(16.0, 64).unwrap();
        assert!(g.check_dt(0.9 * g.max_stable_dt()).is_ok());
        assert!(g.check_dt(1.1 * g.max_stable_dt()).is_err());
        // 256 points over 16 oscillator lengths at 1 us and 500 Hz is unstable.
        let fine = Grid1D::new(16.0, 256).unwrap();
        assert!(fine.check_dt(2.0 * PI * 500.0 * 1e-6).is_err());
        let half = Grid1D::new(16.0, 128).unwrap();
        assert!(half.check_dt(2.0 * PI * 500.0 * 1e-6).is_ok());
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let g = Grid1D::new(20.0, 128).unwrap();
        let s = Spectral::new(&g);
        let mut scratch = vec![Complex64::new(0.0, 0.0); s.scratch_len()];
        let psi: Vec<Complex64> = g
            .x
            .iter()
            .map(|&x| Complex64::new((-x * x / 2.0).exp() / PI.powf(0.25), 0.0))
            .collect();
        // Oscillator ground state: kinetic energy 1/4.
        let t = s.kinetic_energy(&psi, g.dx, &mut scratch);
        assert!((t - 0.25).abs() < 1e-12);
        // Zero-time propagation is the identity.
        let mut p = psi.clone();
        s.apply(&mut p, &s.kinetic_factors(0.0), &mut scratch);
        for (a, b) in p.iter().zip(&psi) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
