//! Brute-force two-mode state evolution in a truncated Fock basis.
//!
//! States are stored block by block in total atom number `N = n₁ + n₂`; the
//! beam splitter and the Kerr evolution never couple different blocks. This
//! is the verification oracle for the closed form and is only meant for
//! small atom numbers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{ensure_non_negative, Error, Result};
use crate::moments::MomentSet;
use crate::two_mode::{kerr_energy_unchecked, SequenceSpec};
use crate::units::KerrParams;

/// Largest supported total occupation.
pub const MAX_CUTOFF: usize = 512;
/// Largest probability allowed outside the truncated space.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

/// Pure two-mode state with amplitudes on `n₁ + n₂ ≤ cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockStateTwoMode {
    cutoff: usize,
    // blocks[N][n2] is the amplitude of |N - n2, n2>
    blocks: Vec<Vec<Complex64>>,
}

fn poisson_tail_above(mean: f64, cutoff: usize) -> f64 {
    // P(N > cutoff), summed upward from the first excluded term.
    if mean == 0.0 {
        return 0.0;
    }
    let mut log_p = -mean + (cutoff + 1) as f64 * mean.ln() - ln_factorial(cutoff + 1);
    let mut tail = 0.0;
    let mut k = cutoff + 1;
    loop {
        let p = log_p.exp();
        tail += p;
        k += 1;
        log_p += mean.ln() - (k as f64).ln();
        if (k as f64) > mean && p < 1e-300_f64.max(tail * 1e-17) {
            break;
        }
        if k > cutoff + 100_000 {
            break;
        }
    }
    tail
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest cutoff that keeps the coherent-state leakage below tolerance.
pub fn required_cutoff(mean_total: f64) -> usize {
    let mut k = mean_total.ceil() as usize;
    while poisson_tail_above(mean_total, k) >= LEAKAGE_TOLERANCE {
        k += 1;
    }
    k
}

impl FockStateTwoMode {
    pub fn vacuum(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut blocks: Vec<Vec<Complex64>> =
            (0..=cutoff).map(|n| vec![Complex64::new(0.0, 0.0); n + 1]).collect();
        blocks[0][0] = Complex64::new(1.0, 0.0);
        Ok(FockStateTwoMode { cutoff, blocks })
    }

    /// Product coherent state `|α⟩|β⟩`, renormalized on the truncated space.
    pub fn coherent(alpha: Complex64, beta: Complex64, cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mean = alpha.norm_sqr() + beta.norm_sqr();
        let leakage = poisson_tail_above(mean, cutoff);
        if leakage >= LEAKAGE_TOLERANCE {
            return Err(Error::Cutoff {
                cutoff,
                required: required_cutoff(mean),
                leakage,
            });
        }
        // single-mode factors α^k/√k!
        let factors = |z: Complex64| {
            let mut f = Vec::with_capacity(cutoff + 1);
            let mut cur = Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
            for k in 0..=cutoff {
                if k > 0 {
                    cur = cur * z / (k as f64).sqrt();
                }
                f.push(cur);
            }
            f
        };
        let fa = factors(alpha);
        let fb = factors(beta);
        let blocks = (0..=cutoff)
            .map(|n| (0..=n).map(|n2| fa[n - n2] * fb[n2]).collect())
            .collect();
        let mut state = FockStateTwoMode { cutoff, blocks };
        let norm = state.norm();
        state.scale(1.0 / norm.sqrt());
        Ok(state)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        let n = n1 + n2;
        if n > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.blocks[n][n2]
        }
    }

    /// Squared norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    /// Probability in each total-number block.
    pub fn block_weights(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    fn scale(&mut self, s: f64) {
        for a in self.blocks.iter_mut().flatten() {
            *a *= s;
        }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &FockStateTwoMode) -> f64 {
        let n = self.cutoff.min(other.cutoff);
        let mut overlap = Complex64::new(0.0, 0.0);
        for (a, b) in self.blocks[..=n].iter().zip(&other.blocks[..=n]) {
            for (x, y) in a.iter().zip(b) {
                overlap += x.conj() * y;
            }
        }
        overlap.norm_sqr()
    }

    /// Multiplies every amplitude by a global phase.
    pub fn with_global_phase(mut self, phase: f64) -> Self {
        let p = Complex64::from_polar(1.0, phase);
        for a in self.blocks.iter_mut().flatten() {
            *a *= p;
        }
        self
    }

    /// Applies `exp(−iθ(e^{−iφ}a₂†a₁ + e^{iφ}a₁†a₂))`, whose Heisenberg action
    /// is `a₁ → a₁cosθ − ia₂ sinθ e^{iφ}`.
    pub fn apply_beamsplitter(&mut self, rotations: &BeamSplitter, theta: f64, phi: f64) {
        if theta == 0.0 {
            return;
        }
        for (n, block) in self.blocks.iter_mut().enumerate().skip(1) {
            rotations.apply_block(n, block, theta, phi);
        }
    }

    /// Multiplies the amplitude of `|n₁, n₂⟩` by `e^{−iE(n₁,n₂)t}`.
    pub fn apply_kerr(&mut self, kerr: &KerrParams, t: f64) {
        if t == 0.0 {
            return;
        }
        for (n, block) in self.blocks.iter_mut().enumerate() {
            for (n2, a) in block.iter_mut().enumerate() {
                let e = kerr_energy_unchecked((n - n2) as f64, n2 as f64, kerr);
                *a *= Complex64::from_polar(1.0, -e * t);
            }
        }
    }

    /// Number moments of one mode (1 or 2).
    pub fn mode_moments(&self, mode: usize) -> MomentSet {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (n, block) in self.blocks.iter().enumerate() {
            for (n2, a) in block.iter().enumerate() {
                let k = if mode == 1 { (n - n2) as f64 } else { n2 as f64 };
                let p = a.norm_sqr();
                m1 += p * k;
                m2 += p * k * k;
            }
        }
        MomentSet::exact(m1, m2)
    }

    /// Moments of mode 2.
    pub fn number_moments(&self) -> MomentSet {
        self.mode_moments(2)
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff > MAX_CUTOFF {
        return Err(Error::param(
            "cutoff",
            format!("at most {MAX_CUTOFF} total occupation is supported, got {cutoff}"),
        ));
    }
    Ok(())
}

/// Cached eigendecompositions of `a₂†a₁ + a₁†a₂` in each total-number block.
///
/// The generator restricted to block `N` is twice a spin-`N/2` rotation
/// generator; its spectrum is exactly `−N, −N+2, …, N`, and the eigenvalues
/// are snapped onto those integers.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    blocks: Vec<(Vec<f64>, DMatrix<f64>)>,
}

impl BeamSplitter {
    pub fn new(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let blocks = (0..=cutoff)
            .map(|n| {
                let dim = n + 1;
                let mut g = DMatrix::<f64>::zeros(dim, dim);
                for k in 0..n {
                    // <n1-1, n2+1| a2† a1 |n1, n2> with n2 = k
                    let el = (((n - k) * (k + 1)) as f64).sqrt();
                    g[(k + 1, k)] = el;
                    g[(k, k + 1)] = el;
                }
                let eig = SymmetricEigen::new(g);
                let values = eig
                    .eigenvalues
                    .iter()
                    .map(|&l| {
                        let shifted = ((l + n as f64) / 2.0).round();
                        2.0 * shifted - n as f64
                    })
                    .collect();
                (values, eig.eigenvectors)
            })
            .collect();
        Ok(BeamSplitter { blocks })
    }

    fn apply_block(&self, n: usize, block: &mut [Complex64], theta: f64, phi: f64) {
        let (values, vectors) = &self.blocks[n];
        // U = D† exp(−iθG₀) D with D = e^{iφ n₂}.
        let v: DVector<Complex64> = DVector::from_iterator(
            block.len(),
            block
                .iter()
                .enumerate()
                .map(|(k, a)| a * Complex64::from_polar(1.0, phi * k as f64)),
        );
        let vc = vectors.map(|x| Complex64::new(x, 0.0));
        let mut coeffs = vc.tr_mul(&v);
        for (c, &l) in coeffs.iter_mut().zip(values) {
            *c *= Complex64::from_polar(1.0, -theta * l);
        }
        let out = vc * coeffs;
        for (k, (dst, src)) in block.iter_mut().zip(out.iter()).enumerate() {
            *dst = src * Complex64::from_polar(1.0, -phi * k as f64);
        }
    }
}

/// Cutoff used for a sequence on `N₀` atoms: `N₀ + 10√N₀ + 20`.
pub fn default_cutoff(n0: f64) -> usize {
    (n0 + 10.0 * n0.sqrt() + 20.0).ceil() as usize
}

/// Runs the full sequence on `|α₀, 0⟩` in the truncated basis.
pub fn sequence_moments(
    alpha0: Complex64,
    seq: &SequenceSpec,
    kerr: &KerrParams,
    cutoff: usize,
) -> Result<(MomentSet, MomentSet)> {
    seq.validate()?;
    ensure_non_negative("n0", alpha0.norm_sqr())?;
    let rotations = BeamSplitter::new(cutoff)?;
    let mut state = FockStateTwoMode::coherent(alpha0, Complex64::new(0.0, 0.0), cutoff)?;
    state.apply_beamsplitter(&rotations, seq.theta1, 0.0);
    state.apply_kerr(kerr, seq.t_hold);
    state.apply_beamsplitter(&rotations, seq.theta2, seq.phi);
    Ok((state.mode_moments(1), state.mode_moments(2)))
}
