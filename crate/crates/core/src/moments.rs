use serde::{Deserialize, Serialize};

/// First two number moments of one mode and the normalized variance
/// `v = (⟨N²⟩ − ⟨N⟩²)/⟨N⟩`.
///
/// Exact engines leave the standard errors at zero. When `⟨N⟩ ≤ 0` the
/// normalized variance has no meaning; `v` is then reported as 1 and
/// `flagged` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean: f64,
    pub mean_sq: f64,
    pub variance_norm: f64,
    pub stderr_mean: f64,
    pub stderr_mean_sq: f64,
    pub stderr_variance_norm: f64,
    pub flagged: bool,
}

impl MomentSet {
    /// From exact first and second moments.
    pub fn exact(mean: f64, mean_sq: f64) -> Self {
        MomentSet::from_mean_variance(mean, mean_sq, mean_sq - mean * mean)
    }

    /// From the mean and a separately computed (better conditioned) variance.
    pub fn from_mean_variance(mean: f64, mean_sq: f64, variance: f64) -> Self {
        let flagged = !(mean > 0.0);
        MomentSet {
            mean,
            mean_sq,
            variance_norm: if flagged { 1.0 } else { variance / mean },
            stderr_mean: 0.0,
            stderr_mean_sq: 0.0,
            stderr_variance_norm: 0.0,
            flagged,
        }
    }

    pub fn variance(&self) -> f64 {
        self.mean_sq - self.mean * self.mean
    }
}
