//! Globally adaptive 15-point Gauss–Kronrod integration of vector-valued
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae (descending, last is the centre) and weights, with the
// embedded 7-point Gauss weights on the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Relative tolerance, applied per component against that component's
    /// integral magnitude.
    pub rel_tol: f64,
    /// Absolute floor per component.
    pub abs_tol: f64,
    /// Number of equal panels the interval is first cut into.
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-11,
            abs_tol: 0.0,
            initial_panels: 8,
            max_panels: 20_000,
        }
    }
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    // scalarized error used for ordering
    key: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn kronrod<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
) -> ([f64; N], [f64; N]) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for c in 0..N {
        k[c] = WGK[7] * fc[c];
        g[c] = WG[3] * fc[c];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for c in 0..N {
            let s = f1[c] + f2[c];
            k[c] += WGK[j] * s;
            if j % 2 == 1 {
                g[c] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for c in 0..N {
        k[c] *= half;
        g[c] *= half;
        err[c] = (k[c] - g[c]).abs();
    }
    (k, err)
}

/// Integrate `f` over `[a, b]`, bisecting the panel with the worst error
/// until every component meets its tolerance.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<[f64; N]> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::param("interval", "bounds must be finite"));
    }
    if a == b {
        return Ok([0.0; N]);
    }
    let panels = opts.initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    for i in 0..panels {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == panels { b } else { lo + width };
        let (v, e) = kronrod(&mut f, lo, hi);
        for c in 0..N {
            total[c] += v[c];
            total_err[c] += e[c];
        }
        heap.push(Panel {
            a: lo,
            b: hi,
            value: v,
            error: e,
            key: 0.0,
        });
    }

    let tolerance = |total: &[f64; N]| {
        let mut tol = [0.0; N];
        for c in 0..N {
            tol[c] = (opts.rel_tol * total[c].abs()).max(opts.abs_tol);
        }
        tol
    };
    // Re-key after the totals are known so panels are ranked by the
    // worst relative error contribution across components.
    let rekey = |p: &mut Panel<N>, tol: &[f64; N]| {
        p.key = (0..N)
            .map(|c| if tol[c] > 0.0 { p.error[c] / tol[c] } else { p.error[c] })
            .fold(0.0, f64::max);
    };
    let mut tol = tolerance(&total);
    let mut panels_vec: Vec<_> = heap.into_vec();
    for p in &mut panels_vec {
        rekey(p, &tol);
    }
    let mut heap = BinaryHeap::from(panels_vec);
    let mut count = panels;

    loop {
        let converged = (0..N).all(|c| total_err[c] <= tol[c]);
        if converged {
            return Ok(total);
        }
        if count >= opts.max_panels {
            let ratio = |c: usize| total_err[c] / tol[c].max(f64::MIN_POSITIVE);
            let c = (0..N)
                .max_by(|&x, &y| ratio(x).total_cmp(&ratio(y)))
                .unwrap_or(0);
            return Err(Error::Quadrature {
                achieved: total_err[c],
                requested: tol[c],
            });
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = kronrod(&mut f, worst.a, mid);
        let (rv, re) = kronrod(&mut f, mid, worst.b);
        for c in 0..N {
            total[c] += lv[c] + rv[c] - worst.value[c];
            total_err[c] += le[c] + re[c] - worst.error[c];
        }
        tol = tolerance(&total);
        for (lo, hi, v, e) in [(worst.a, mid, lv, le), (mid, worst.b, rv, re)] {
            let mut p = Panel {
                a: lo,
                b: hi,
                value: v,
                error: e,
                key: 0.0,
            };
            rekey(&mut p, &tol);
            heap.push(p);
        }
        count += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_is_exact_for_degree_23_and_gauss_for_13() {
        // int_{-1}^{1} x^n dx = 2/(n+1) for even n.
        let mut f = |x: f64| [x.powi(22), x.powi(12)];
        let (v, _) = kronrod(&mut f, -1.0, 1.0);
        assert_relative_eq!(v[0], 2.0 / 23.0, max_relative = 1e-14);
        assert_relative_eq!(v[1], 2.0 / 13.0, max_relative = 1e-14);
        let gauss: f64 = {
            let mut s = WG[3] * 0.0f64.powi(12);
            for j in [1, 3, 5] {
                s += 2.0 * WG[j / 2] * XGK[j].powi(12);
            }
            s
        };
        assert_relative_eq!(gauss, 2.0 / 13.0, max_relative = 1e-14);
        let kw: f64 = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert_relative_eq!(kw, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let opts = QuadratureOptions::default();
        let v = integrate(|x| [(50.0 * x).cos(), (-x * x).exp()], 0.0, 3.0, &opts).unwrap();
        assert_relative_eq!(v[0], (150.0f64).sin() / 50.0, max_relative = 1e-10);
        // erf(3) * sqrt(pi)/2
        assert_relative_eq!(v[1], 0.886_207_348_259_521_8, max_relative = 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadratureOptions {
            max_panels: 4,
            initial_panels: 1,
            ..Default::default()
        };
        let r = integrate(|x| [(1.0 / x.max(1e-12)).sin()], 0.0, 1.0, &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
