use num_complex::Complex64;

use super::{
    beamsplitter_transform, closed_form_moments, expm1_i, kerr_phases, output_moments, sequence_moments, InitialEnsemble,
    SequenceSpec,
};
use crate::error::Result;
use crate::moments::MomentSet;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::units::KerrParams;

#[derive(Debug, Clone, Copy)]
pub struct MixtureOptions {
    pub quadrature: QuadratureOptions,
    /// Half-width of the integration window in standard deviations. The
    /// Gaussian average is used instead when the (shifted) mean sits at least
    /// this many deviations above zero atoms.
    pub tail_sigmas: f64,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        MixtureOptions {
            quadrature: QuadratureOptions {
                rel_tol: 1e-9,
                abs_tol: 0.0,
                initial_panels: 8,
                max_panels: 200_000,
            },
            tail_sigmas: 8.0,
        }
    }
}

/// Moments of mode 2 averaged over a classical mixture of coherent inputs.
///
/// `|α₀|²` is Gaussian with mean `N₀` and variance `(F − 1)N₀`, truncated at 0
/// (see [`InitialEnsemble::classical_variance`]), so the total-number Fano
/// factor of the input is `F`. Far from the truncation the average is taken
/// analytically; otherwise by quadrature, with the variance assembled as
/// `E[Var(N₂|x)] + Var(E[N₂|x])`.
pub fn mixture_moments(
    init: &InitialEnsemble,
    seq: &SequenceSpec,
    kerr: &KerrParams,
) -> Result<MomentSet> {
    mixture_moments_with(init, seq, kerr, &MixtureOptions::default())
}

pub fn mixture_moments_with(
    init: &InitialEnsemble,
    seq: &SequenceSpec,
    kerr: &KerrParams,
    opts: &MixtureOptions,
) -> Result<MomentSet> {
    init.validate()?;
    seq.validate()?;
    kerr.validate()?;
    let variance = init.classical_variance();
    if variance == 0.0 {
        return closed_form_moments(&InitialEnsemble::poissonian(init.n0_mean), seq, kerr);
    }
    if let Some(m) = gaussian_average(init.n0_mean, variance, seq, kerr, opts.tail_sigmas) {
        return Ok(m);
    }
    quadrature_average(init.n0_mean, variance, seq, kerr, opts)
}

/// Average over an untruncated Gaussian `x ~ N(N₀, σ²)`.
///
/// Every normally ordered moment of the conditional state is `K xⁿ e^{cx}`
/// with `n ≤ 2`, and `E[xⁿ e^{cX}]` follows from `M(c) = exp(cN₀ + c²σ²/2)`.
/// Returns `None` when the tilted mean `N₀ + Re(c)σ²` lies fewer than
/// `tail_sigmas` deviations above zero, where the x < 0 tail would matter.
fn gaussian_average(n0: f64, variance: f64, seq: &SequenceSpec, kerr: &KerrParams, tail_sigmas: f64) -> Option<MomentSet> {
    let (u, w) = beamsplitter_transform(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), seq.theta1, 0.0);
    let t = seq.t_hold;
    let mut lowest_tilt = n0;
    let moments = output_moments(seq, &mut |p, q, r, s| {
        let (de, lambda1, lambda2) = kerr_phases(kerr, p, q, r, s);
        let c = u.norm_sqr() * expm1_i(lambda1 * t) + w.norm_sqr() * expm1_i(lambda2 * t);
        let tilted = n0 + c * variance;
        lowest_tilt = lowest_tilt.min(tilted.re);
        let power = match (p + q + r + s) / 2 {
            0 => Complex64::new(1.0, 0.0),
            1 => tilted,
            _ => tilted * tilted + variance,
        };
        let exponent = Complex64::new(0.0, t * de) + c * n0 + 0.5 * c * c * variance;
        u.conj().powu(p) * w.conj().powu(q) * u.powu(r) * w.powu(s) * power * exponent.exp()
    });
    (lowest_tilt >= tail_sigmas * variance.sqrt()).then_some(moments.mode2)
}

/// Adaptive quadrature over the Gaussian truncated at zero atoms.
fn quadrature_average(
    n0: f64,
    variance: f64,
    seq: &SequenceSpec,
    kerr: &KerrParams,
    opts: &MixtureOptions,
) -> Result<MomentSet> {
    let sigma = variance.sqrt();
    let lo = (n0 - opts.tail_sigmas * sigma).max(0.0);
    let hi = n0 + opts.tail_sigmas * sigma;

    let weight = |x: f64| {
        let z = (x - n0) / sigma;
        (-0.5 * z * z).exp()
    };
    let conditional = |x: f64| sequence_moments(Complex64::new(x.sqrt(), 0.0), seq, kerr).mode2;

    // The Kerr phases wind at up to ~2|chi|t per atom; start with enough
    // panels to resolve that over the window.
    let max_chi = kerr.chi11.abs().max(kerr.chi22.abs()).max(kerr.chi12.abs());
    let windings = 2.0 * max_chi * seq.t_hold * (hi - lo) / std::f64::consts::PI;
    let mut q = opts.quadrature;
    q.initial_panels = q.initial_panels.max(windings.ceil() as usize + 1);

    let [norm, mean, within] = integrate(
        |x| {
            let w = weight(x);
            let m = conditional(x);
            [w, w * m.mean, w * m.variance()]
        },
        lo,
        hi,
        &q,
    )?;
    let mean = mean / norm;
    let within = within / norm;
    let [between] = integrate(
        |x| {
            let d = conditional(x).mean - mean;
            [weight(x) * d * d]
        },
        lo,
        hi,
        &q,
    )?;
    let var = within + between / norm;
    Ok(MomentSet::from_mean_variance(mean, var + mean * mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poissonian_mixture_is_the_closed_form() {
        let init = InitialEnsemble::poissonian(1e6);
        let seq = SequenceSpec::new(0.3, 0.025, 1.0, 0.008).unwrap();
        let k = KerrParams::sodium_500hz();
        let a = mixture_moments(&init, &seq, &k).unwrap();
        let b = closed_form_moments(&init, &seq, &k).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sub_poissonian_request_clamps_to_coherent() {
        let init = InitialEnsemble { n0_mean: 1e5, fano: 0.0 };
        let seq = SequenceSpec::new(0.3, 0.025, 2.0, 0.0).unwrap();
        let m = mixture_moments(&init, &seq, &KerrParams::sodium_500hz()).unwrap();
        assert!((m.variance_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_hold_adds_scaled_classical_noise() {
        // Without Kerr shear N2 | x is Poissonian with mean T x, so
        // v = 1 + T (F - 1) where T is the net transfer fraction.
        let fano = 150.0;
        let n0 = 1e7;
        let (t1, t2, phi) = (0.3f64, 0.025f64, 0.9f64);
        let init = InitialEnsemble { n0_mean: n0, fano };
        let seq = SequenceSpec::new(t1, t2, phi, 0.0).unwrap();
        let m = mixture_moments(&init, &seq, &KerrParams::sodium_500hz()).unwrap();
        let amp = Complex64::new(t1.sin() * t2.cos(), 0.0)
            + t1.cos() * t2.sin() * Complex64::from_polar(1.0, -phi);
        let transfer = amp.norm_sqr();
        assert_relative_eq!(m.mean, transfer * n0, max_relative = 1e-9);
        assert_relative_eq!(m.variance_norm, 1.0 + transfer * (fano - 1.0), max_relative = 1e-7);
    }

    #[test]
    fn heavy_truncation_still_normalizes() {
        // sigma >> N0: the window is clipped at zero atoms.
        let init = InitialEnsemble { n0_mean: 50.0, fano: 500.0 };
        let seq = SequenceSpec::new(0.4, 0.1, 0.0, 0.0).unwrap();
        let m = mixture_moments(&init, &seq, &KerrParams::sodium_500hz()).unwrap();
        assert!(m.mean > 0.0 && m.variance_norm.is_finite());
    }

    #[test]
    fn gaussian_average_matches_quadrature() {
        let k = KerrParams::sodium_500hz();
        let n0 = 2e4;
        let variance = 24.0 * n0;
        let opts = MixtureOptions::default();
        for (t1, phi, t_hold) in [(0.3, 1.0, 0.5), (0.8, 2.5, 2.0), (0.1, 4.0, 5.0)] {
            let seq = SequenceSpec::new(t1, 0.2, phi, t_hold).unwrap();
            let a = gaussian_average(n0, variance, &seq, &k, opts.tail_sigmas).unwrap();
            let b = quadrature_average(n0, variance, &seq, &k, &opts).unwrap();
            assert_relative_eq!(a.mean, b.mean, max_relative = 1e-9);
            assert_relative_eq!(a.variance_norm, b.variance_norm, max_relative = 1e-6);
        }
    }

    #[test]
    fn large_kerr_phase_falls_back_to_quadrature() {
        let k = KerrParams::sodium_500hz();
        let seq = SequenceSpec::new(0.3, 0.2, 1.0, 3e4).unwrap();
        assert!(gaussian_average(100.0, 99.0 * 100.0, &seq, &k, 8.0).is_none());
    }
}
