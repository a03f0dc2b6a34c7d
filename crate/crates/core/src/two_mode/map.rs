use rayon::prelude::*;

use super::{mixture_moments, InitialEnsemble, SequenceSpec};
use crate::error::{Error, Result};
use crate::units::KerrParams;

/// `v(N̂₂)` and `⟨N̂₂⟩` over a `(t_hold, φ)` grid, row-major with `t_hold`
/// as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap {
    pub t_hold_axis: Vec<f64>,
    pub phi_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub mean_map: Vec<f64>,
    pub mean_sq_map: Vec<f64>,
}

impl VarianceMap {
    pub fn index(&self, i_t: usize, i_phi: usize) -> usize {
        i_t * self.phi_axis.len() + i_phi
    }

    pub fn value(&self, i_t: usize, i_phi: usize) -> f64 {
        self.values[self.index(i_t, i_phi)]
    }

    /// Smallest `v` with its `(t_hold, φ)`.
    pub fn minimum(&self) -> (f64, f64, f64) {
        let (i, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("map is never empty");
        let n = self.phi_axis.len();
        (v, self.t_hold_axis[i / n], self.phi_axis[i % n])
    }
}

fn check_axis(name: &'static str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::param(name, "axis is empty"));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::param(name, "axis has non-finite entries"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "axis must be strictly ascending"));
    }
    Ok(())
}

/// Dense evaluation over the grid. Poissonian inputs use the closed form,
/// anything else the mixture quadrature. Each cell is computed independently,
/// so the result does not depend on scheduling.
pub fn variance_map(
    init: &InitialEnsemble,
    kerr: &KerrParams,
    theta1: f64,
    theta2: f64,
    t_hold_axis: &[f64],
    phi_axis: &[f64],
) -> Result<VarianceMap> {
    check_axis("t_hold_axis", t_hold_axis)?;
    check_axis("phi_axis", phi_axis)?;
    init.validate()?;
    kerr.validate()?;
    let n_phi = phi_axis.len();
    let cells: Vec<(f64, f64, f64)> = (0..t_hold_axis.len() * n_phi)
        .into_par_iter()
        .map(|i| {
            let (t_hold, phi) = (t_hold_axis[i / n_phi], phi_axis[i % n_phi]);
            let seq = SequenceSpec {
                theta1,
                theta2,
                phi,
                t_hold,
            };
            mixture_moments(init, &seq, kerr)
                .map(|m| (m.variance_norm, m.mean, m.mean_sq))
                .map_err(|e| Error::GridCell {
                    t_hold,
                    phi,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let (values, rest): (Vec<f64>, Vec<(f64, f64)>) =
        cells.into_iter().map(|(v, m, s)| (v, (m, s))).unzip();
    let (mean_map, mean_sq_map) = rest.into_iter().unzip();
    Ok(VarianceMap {
        t_hold_axis: t_hold_axis.to_vec(),
        phi_axis: phi_axis.to_vec(),
        values,
        mean_map,
        mean_sq_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_mode::closed_form_moments;

    #[test]
    fn single_cell_matches_point_evaluation() {
        let init = InitialEnsemble::poissonian(1e7);
        let k = KerrParams::sodium_500hz();
        let map = variance_map(&init, &k, 0.3, 0.025, &[0.01], &[2.0]).unwrap();
        let seq = SequenceSpec::new(0.3, 0.025, 2.0, 0.01).unwrap();
        let m = closed_form_moments(&init, &seq, &k).unwrap();
        assert_eq!(map.values, vec![m.variance_norm]);
        assert_eq!(map.mean_map, vec![m.mean]);
    }

    #[test]
    fn zero_hold_row_is_coherent() {
        let init = InitialEnsemble::poissonian(1e7);
        let phis: Vec<f64> = (0..16).map(|i| i as f64 * 0.39).collect();
        let map = variance_map(&init, &KerrParams::sodium_500hz(), 0.3, 0.025, &[0.0, 0.01], &phis).unwrap();
        for j in 0..phis.len() {
            assert!((map.value(0, j) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_axes() {
        let init = InitialEnsemble::poissonian(10.0);
        let k = KerrParams::sodium_500hz();
        assert!(variance_map(&init, &k, 0.3, 0.025, &[], &[0.0]).is_err());
        assert!(variance_map(&init, &k, 0.3, 0.025, &[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn errors_carry_grid_coordinates() {
        let init = InitialEnsemble::poissonian(10.0);
        let k = KerrParams::sodium_500hz();
        match variance_map(&init, &k, 3.0, 0.025, &[0.5], &[1.5]) {
            Err(Error::GridCell { t_hold, phi, .. }) => {
                assert_eq!((t_hold, phi), (0.5, 1.5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
