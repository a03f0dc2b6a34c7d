use rayon::prelude::*;

use super::model::{Trajectory, TwModel};
use super::schedule::PulseSchedule;
use crate::error::{Error, Result};
use crate::moments::MomentSet;

/// Trajectories per work unit. Partial statistics are merged in chunk order,
/// so results do not depend on the number of threads.
pub const CHUNK: u64 = 32;

/// Streaming mean and central moments up to fourth order, with pairwise
/// merging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub count: f64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count;
        self.count += 1.0;
        let n = self.count;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.count, other.count);
        let n = na + nb;
        let d = other.mean - self.mean;
        let d2 = d * d;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * d * na * nb * (na - nb) / (n * n)
            + 3.0 * d * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * other.m3 - nb * self.m3) / n;
        self.count = n;
        self.mean += d * nb / n;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
    }

    /// Population central moment of order 2, 3 or 4.
    pub fn central(&self, k: u32) -> f64 {
        let m = match k {
            2 => self.m2,
            3 => self.m3,
            4 => self.m4,
            _ => panic!("central moment order must be 2, 3 or 4"),
        };
        m / self.count
    }
}

/// Normally ordered moments from the Wigner occupation statistics of a field
/// with `modes` grid modes.
///
/// With `μ = ⟨N_W⟩` and `c₂ = Var(N_W)`: `⟨N⟩ = μ − M/2`,
/// `⟨N²⟩ = ⟨N_W²⟩ − M⟨N⟩ − M(M+1)/4`, hence `Var(N) = c₂ − M/4`. Standard
/// errors are first-order (delta method) in the sample central moments.
/// A mean within three standard errors of zero is flagged.
pub fn extract_moments(acc: &MomentAccumulator, modes: usize) -> Result<MomentSet> {
    if acc.count < 2.0 {
        return Err(Error::param("n_traj", format!("need at least 2 trajectories, got {}", acc.count)));
    }
    let m = modes as f64;
    let n = acc.count;
    let (c2, c3, c4) = (acc.central(2), acc.central(3), acc.central(4));
    let mean = acc.mean - 0.5 * m;
    let var = c2 - 0.25 * m;
    let mean_sq = var + mean * mean;
    let se_mean = (c2 / n).sqrt();
    // N² − M N as a function of N_W: (X−μ)² + (2μ−M)(X−μ) + const
    let b = 2.0 * acc.mean - m;
    let se_mean_sq = ((c4 - c2 * c2 + b * b * c2 + 2.0 * b * c3) / n).max(0.0).sqrt();
    let flagged = !(mean > 3.0 * se_mean);
    let (v, se_v) = if flagged {
        (1.0, 0.0)
    } else {
        let v = var / mean;
        let se2 = ((c4 - c2 * c2) - 2.0 * v * c3 + v * v * c2) / (n * mean * mean);
        (v, se2.max(0.0).sqrt())
    };
    Ok(MomentSet {
        mean,
        mean_sq,
        variance_norm: v,
        stderr_mean: se_mean,
        stderr_mean_sq: se_mean_sq,
        stderr_variance_norm: se_v,
        flagged,
    })
}

/// Occupations of one trajectory without the density snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub index: u64,
    pub n0: f64,
    pub initial: (f64, f64),
    pub final_occupations: Vec<(f64, f64)>,
}

/// Ensemble statistics over a `φ` scan of the second pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: u64,
    pub modes: usize,
    pub phis: Vec<f64>,
    /// `N_W1` and `N_W2` at `t3`, per phase.
    pub n_w1: Vec<MomentAccumulator>,
    pub n_w2: Vec<MomentAccumulator>,
    /// `N_W1 + N_W2` at `t0`.
    pub total_initial: MomentAccumulator,
    /// Largest relative change of `N_W1 + N_W2` between `t0` and `t3` in any
    /// single trajectory.
    pub max_norm_drift: f64,
    density_sum_t1: [Vec<f64>; 2],
    density_sum_t2: [Vec<f64>; 2],
}

impl EnsembleStats {
    fn empty(modes: usize, phis: &[f64]) -> Self {
        EnsembleStats {
            n_traj: 0,
            modes,
            phis: phis.to_vec(),
            n_w1: vec![MomentAccumulator::default(); phis.len()],
            n_w2: vec![MomentAccumulator::default(); phis.len()],
            total_initial: MomentAccumulator::default(),
            max_norm_drift: 0.0,
            density_sum_t1: [vec![0.0; modes], vec![0.0; modes]],
            density_sum_t2: [vec![0.0; modes], vec![0.0; modes]],
        }
    }

    fn push(&mut self, t: &Trajectory) {
        self.n_traj += 1;
        let total0 = t.initial.0 + t.initial.1;
        self.total_initial.push(total0);
        for (i, &(a, b)) in t.final_occupations.iter().enumerate() {
            self.n_w1[i].push(a);
            self.n_w2[i].push(b);
            self.max_norm_drift = self.max_norm_drift.max(((a + b) / total0 - 1.0).abs());
        }
        for (sum, snap) in self
            .density_sum_t1
            .iter_mut()
            .zip(&t.density_t1)
            .chain(self.density_sum_t2.iter_mut().zip(&t.density_t2))
        {
            for (s, d) in sum.iter_mut().zip(snap) {
                *s += d;
            }
        }
    }

    fn merge(&mut self, other: &EnsembleStats) {
        self.n_traj += other.n_traj;
        for (a, b) in self.n_w1.iter_mut().zip(&other.n_w1) {
            a.merge(b);
        }
        for (a, b) in self.n_w2.iter_mut().zip(&other.n_w2) {
            a.merge(b);
        }
        self.total_initial.merge(&other.total_initial);
        self.max_norm_drift = self.max_norm_drift.max(other.max_norm_drift);
        for (a, b) in self
            .density_sum_t1
            .iter_mut()
            .zip(&other.density_sum_t1)
            .chain(self.density_sum_t2.iter_mut().zip(&other.density_sum_t2))
        {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Moments of mode 2 at `t3` for phase `i`.
    pub fn mode2(&self, i: usize) -> Result<MomentSet> {
        extract_moments(&self.n_w2[i], self.modes)
    }

    pub fn mode1(&self, i: usize) -> Result<MomentSet> {
        extract_moments(&self.n_w1[i], self.modes)
    }

    /// Ensemble-mean Wigner density `⟨|ψ_j|²⟩` of mode `mode` (1 or 2) at
    /// `t1` (`at_t2 = false`) or `t2`, in oscillator units. Subtract
    /// `1/(2dx)` for the physical density.
    pub fn mean_density(&self, mode: usize, at_t2: bool) -> Vec<f64> {
        let sums = if at_t2 { &self.density_sum_t2 } else { &self.density_sum_t1 };
        let n = self.n_traj as f64;
        sums[mode - 1].iter().map(|s| s / n).collect()
    }
}

/// Runs `n_traj` trajectories (indices `0..n_traj`) with the second pulse
/// at each phase in `phis`. When `keep` is set the per-trajectory
/// occupations are returned as well, in index order.
pub fn run_ensemble(
    model: &TwModel,
    schedule: &PulseSchedule,
    phis: &[f64],
    n_traj: u64,
    seed: u64,
    keep: bool,
) -> Result<(EnsembleStats, Vec<TrajectorySummary>)> {
    if n_traj < 2 {
        return Err(Error::param("n_traj", format!("need at least 2 trajectories, got {n_traj}")));
    }
    if phis.is_empty() {
        return Err(Error::param("phis", "need at least one phase"));
    }
    schedule.validate()?;
    let modes = model.grid().points;
    let chunks = n_traj.div_ceil(CHUNK);
    let parts: Vec<(EnsembleStats, Vec<TrajectorySummary>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ws = model.workspace();
            let mut stats = EnsembleStats::empty(modes, phis);
            let mut kept = Vec::new();
            for index in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let t = model.run_branched(schedule, phis, seed, index, &mut ws)?;
                stats.push(&t);
                if keep {
                    kept.push(TrajectorySummary {
                        index: t.index,
                        n0: t.n0,
                        initial: t.initial,
                        final_occupations: t.final_occupations,
                    });
                }
            }
            Ok((stats, kept))
        })
        .collect::<Result<_>>()?;
    let mut total = EnsembleStats::empty(modes, phis);
    let mut records = Vec::new();
    for (stats, kept) in parts {
        total.merge(&stats);
        records.extend(kept);
    }
    Ok((total, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    #[test]
    fn merge_matches_sequential_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dist = Normal::<f64>::new(50.0, 3.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|_| dist.sample(&mut rng).powi(2) / 40.0).collect();
        let mut all = MomentAccumulator::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut parts = MomentAccumulator::default();
        for chunk in xs.chunks(37) {
            let mut p = MomentAccumulator::default();
            chunk.iter().for_each(|&x| p.push(x));
            parts.merge(&p);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        for k in 2..=4 {
            let direct = xs.iter().map(|x| (x - mean).powi(k as i32)).sum::<f64>() / n;
            assert!((all.central(k) / direct - 1.0).abs() < 1e-10, "order {k}");
            assert!((parts.central(k) / direct - 1.0).abs() < 1e-10, "order {k}");
        }
        assert!((all.mean - mean).abs() < 1e-12 && (parts.mean - mean).abs() < 1e-12);
    }

    /// Synthetic `N_W` for `modes` vacuum modes plus an optional displaced one.
    fn synthetic(modes: usize, alpha: f64, samples: usize, seed: u64) -> MomentAccumulator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = MomentAccumulator::default();
        for _ in 0..samples {
            let mut nw = 0.0;
            for j in 0..modes {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let shift = if j == 0 { alpha } else { 0.0 };
                nw += (shift + 0.5 * re).powi(2) + (0.5 * im).powi(2);
            }
            acc.push(nw);
        }
        acc
    }

    #[test]
    fn vacuum_ordering_identity() {
        let acc = synthetic(64, 0.0, 20_000, 5);
        let m = extract_moments(&acc, 64).unwrap();
        assert!(m.flagged);
        assert!(m.mean.abs() < 3.0 * m.stderr_mean);
        assert!(m.mean_sq.abs() < 3.0 * m.stderr_mean_sq);
    }

    #[test]
    fn coherent_ordering_identity() {
        let alpha = 3.0;
        for &modes in &[1, 16] {
            let acc = synthetic(modes, alpha, 20_000, 7 + modes as u64);
            let m = extract_moments(&acc, modes).unwrap();
            assert!(!m.flagged);
            assert!((m.mean - alpha * alpha).abs() < 3.0 * m.stderr_mean);
            let sq = alpha.powi(4) + alpha * alpha;
            assert!((m.mean_sq - sq).abs() < 3.0 * m.stderr_mean_sq);
            assert!((m.variance_norm - 1.0).abs() < 3.0 * m.stderr_variance_norm);
        }
    }

    #[test]
    fn stderr_of_v_matches_replicate_spread() {
        let reps: Vec<f64> = (0..40)
            .map(|r| extract_moments(&synthetic(4, 2.0, 2000, 100 + r), 4).unwrap().variance_norm)
            .collect();
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let sd = (reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps.len() - 1) as f64).sqrt();
        let predicted = extract_moments(&synthetic(4, 2.0, 2000, 99), 4).unwrap().stderr_variance_norm;
        assert!((sd / predicted - 1.0).abs() < 0.35, "spread {sd} vs predicted {predicted}");
    }

    #[test]
    fn too_few_samples() {
        let mut acc = MomentAccumulator::default();
        acc.push(1.0);
        assert!(extract_moments(&acc, 4).is_err());
    }
}
