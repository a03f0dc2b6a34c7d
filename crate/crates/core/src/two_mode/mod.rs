//! Closed-form number statistics of the two-mode Kerr–Ramsey sequence.
//!
//! The sequence is: instantaneous beam splitter of area `θ₁` on a coherent
//! state in mode 1, Kerr evolution for `t_hold`, instantaneous beam splitter
//! of area `θ₂` and phase `φ`. After the first pulse the state is a two-mode
//! coherent product `|α, β⟩`, and every normally ordered moment of it after
//! Kerr evolution has a closed form (see [`KerrEvolvedCoherent`]). The
//! output-mode moments are polynomials in those.

mod map;
mod mixture;

pub use map::{variance_map, VarianceMap};
pub use mixture::{mixture_moments, mixture_moments_with, MixtureOptions};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::moments::MomentSet;
use crate::units::KerrParams;

/// Ramsey pulse sequence with instantaneous pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    /// First pulse area `Ω₀Δt₁`, rad.
    pub theta1: f64,
    /// Second pulse area `Ω₀Δt₂`, rad.
    pub theta2: f64,
    /// Phase of the second pulse relative to the first, rad.
    pub phi: f64,
    /// Free evolution between the pulses, s.
    pub t_hold: f64,
}

impl SequenceSpec {
    /// Validates the ranges and wraps `phi` into `[0, 2π)`.
    pub fn new(theta1: f64, theta2: f64, phi: f64, t_hold: f64) -> Result<Self> {
        ensure_finite("phi", phi)?;
        let seq = SequenceSpec {
            theta1,
            theta2,
            phi: phi.rem_euclid(2.0 * PI),
            t_hold,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, theta) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(0.0..=FRAC_PI_2).contains(&theta) {
                return Err(Error::param(name, format!("must lie in [0, pi/2], got {theta}")));
            }
        }
        ensure_finite("phi", self.phi)?;
        ensure_non_negative("t_hold", self.t_hold)
    }
}

/// Initial total-number distribution of mode 1 (mode 2 starts in vacuum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialEnsemble {
    /// Mean atom number `N₀ = |α₀|²`.
    pub n0_mean: f64,
    /// Variance over mean of the total number; 1 is Poissonian.
    pub fano: f64,
}

impl InitialEnsemble {
    pub fn poissonian(n0_mean: f64) -> Self {
        InitialEnsemble { n0_mean, fano: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("n0_mean", self.n0_mean)?;
        ensure_non_negative("fano", self.fano)
    }

    /// Variance of `|α₀|²` across the coherent-state mixture. Coherent states
    /// already carry Poissonian variance, so only the excess over 1 is
    /// classical; sub-Poissonian requests cannot be represented and clamp to 0.
    pub fn classical_variance(&self) -> f64 {
        (self.fano - 1.0).max(0.0) * self.n0_mean
    }
}

/// Amplitude transform of a beam-splitter pulse of area `theta` and phase `phi`:
/// `α' = α cosθ − iβ sinθ e^{iφ}`, `β' = β cosθ − iα sinθ e^{−iφ}`.
pub fn beamsplitter_transform(
    alpha: Complex64,
    beta: Complex64,
    theta: f64,
    phi: f64,
) -> (Complex64, Complex64) {
    let (s, c) = theta.sin_cos();
    let minus_i = Complex64::new(0.0, -1.0);
    let e = Complex64::from_polar(1.0, phi);
    (
        alpha * c + minus_i * s * e * beta,
        beta * c + minus_i * s * e.conj() * alpha,
    )
}

/// Kerr energy `E/ħ = χ₁₁n₁(n₁−1) + χ₂₂n₂(n₂−1) + 2χ₁₂n₁n₂`, rad/s.
pub fn kerr_energy(n1: i64, n2: i64, kerr: &KerrParams) -> Result<f64> {
    if n1 < 0 || n2 < 0 {
        return Err(Error::param(
            "occupation",
            format!("occupations must be non-negative, got ({n1}, {n2})"),
        ));
    }
    Ok(kerr_energy_unchecked(n1 as f64, n2 as f64, kerr))
}

pub(crate) fn kerr_energy_unchecked(n1: f64, n2: f64, kerr: &KerrParams) -> f64 {
    kerr.chi11 * n1 * (n1 - 1.0) + kerr.chi22 * n2 * (n2 - 1.0) + 2.0 * kerr.chi12 * n1 * n2
}

/// `e^{ix} − 1` without cancellation for small `x`.
pub(crate) fn expm1_i(x: f64) -> Complex64 {
    let h = (0.5 * x).sin();
    Complex64::new(-2.0 * h * h, x.sin())
}

/// The coherent product state `|α, β⟩` after Kerr evolution for time `t`.
///
/// Normally ordered moments are exact:
///
/// `⟨a₁†ᵖ a₂†^q a₁ʳ a₂ˢ⟩ = ᾱᵖ β̄^q αʳ βˢ · e^{itΔE} · exp(|α|²(e^{iλ₁t}−1) + |β|²(e^{iλ₂t}−1))`
///
/// with `ΔE = E(p,q) − E(r,s)`, `λ₁ = 2χ₁₁(p−r) + 2χ₁₂(q−s)` and
/// `λ₂ = 2χ₂₂(q−s) + 2χ₁₂(p−r)`.
#[derive(Debug, Clone, Copy)]
pub struct KerrEvolvedCoherent {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub kerr: KerrParams,
    pub t: f64,
}

impl KerrEvolvedCoherent {
    pub fn normal_moment(&self, p: u32, q: u32, r: u32, s: u32) -> Complex64 {
        let (de, lambda1, lambda2) = kerr_phases(&self.kerr, p, q, r, s);
        let exponent = Complex64::new(0.0, self.t * de)
            + self.alpha.norm_sqr() * expm1_i(lambda1 * self.t)
            + self.beta.norm_sqr() * expm1_i(lambda2 * self.t);
        self.alpha.conj().powu(p) * self.beta.conj().powu(q) * self.alpha.powu(r) * self.beta.powu(s)
            * exponent.exp()
    }

    /// `⟨(A†)ⁿ Aⁿ⟩` for the mode `A = c₁a₁ + c₂a₂`.
    pub fn ladder_moment(&self, order: u32, c1: Complex64, c2: Complex64) -> Complex64 {
        ladder_moment(order, c1, c2, &mut |p, q, r, s| self.normal_moment(p, q, r, s))
    }

    /// Mean, mean square and variance of `A†A`, with `|c₁|² + |c₂|² = 1`.
    pub fn number_moments(&self, c1: Complex64, c2: Complex64) -> (f64, f64, f64) {
        number_moments(c1, c2, &mut |p, q, r, s| self.normal_moment(p, q, r, s))
    }
}

/// `ΔE = E(p,q) − E(r,s)`, `λ₁` and `λ₂` of a normally ordered moment.
pub(crate) fn kerr_phases(k: &KerrParams, p: u32, q: u32, r: u32, s: u32) -> (f64, f64, f64) {
    let (pi, qi, ri, si) = (p as i64, q as i64, r as i64, s as i64);
    let d1 = (pi - ri) as f64;
    let d2 = (qi - si) as f64;
    let lambda1 = 2.0 * k.chi11 * d1 + 2.0 * k.chi12 * d2;
    let lambda2 = 2.0 * k.chi22 * d2 + 2.0 * k.chi12 * d1;
    // integer differences first so equal chi cancel exactly
    let de = k.chi11 * (pi * (pi - 1) - ri * (ri - 1)) as f64
        + k.chi22 * (qi * (qi - 1) - si * (si - 1)) as f64
        + 2.0 * k.chi12 * (pi * qi - ri * si) as f64;
    (de, lambda1, lambda2)
}

type NormalMoment<'a> = dyn FnMut(u32, u32, u32, u32) -> Complex64 + 'a;

fn ladder_moment(order: u32, c1: Complex64, c2: Complex64, moment: &mut NormalMoment) -> Complex64 {
    let binom = |n: u32, k: u32| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..=order {
        let left = binom(order, j) * c1.conj().powu(j) * c2.conj().powu(order - j);
        for k in 0..=order {
            let right = binom(order, k) * c1.powu(k) * c2.powu(order - k);
            total += left * right * moment(j, order - j, k, order - k);
        }
    }
    total
}

fn number_moments(c1: Complex64, c2: Complex64, moment: &mut NormalMoment) -> (f64, f64, f64) {
    let mean = ladder_moment(1, c1, c2, moment).re;
    let pair = ladder_moment(2, c1, c2, moment).re;
    let mean_sq = pair + mean;
    (mean, mean_sq, pair + mean - mean * mean)
}

/// Output-mode moments after the second pulse, given the normally ordered
/// moments of the state at the end of the hold.
pub(crate) fn output_moments(seq: &SequenceSpec, moment: &mut NormalMoment) -> SequenceMoments {
    let (s, c) = seq.theta2.sin_cos();
    let minus_i = Complex64::new(0.0, -1.0);
    let e = Complex64::from_polar(1.0, seq.phi);
    // Heisenberg output operators of the second pulse.
    let a1_out = (Complex64::new(c, 0.0), minus_i * s * e);
    let a2_out = (minus_i * s * e.conj(), Complex64::new(c, 0.0));
    let (m1, m1sq, v1) = number_moments(a1_out.0, a1_out.1, moment);
    let (m2, m2sq, v2) = number_moments(a2_out.0, a2_out.1, moment);
    SequenceMoments {
        mode1: MomentSet::from_mean_variance(m1, m1sq, v1),
        mode2: MomentSet::from_mean_variance(m2, m2sq, v2),
    }
}

/// Number moments of both modes after the full sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceMoments {
    pub mode1: MomentSet,
    pub mode2: MomentSet,
}

/// Runs the sequence on the coherent input `|α₀, 0⟩`.
pub fn sequence_moments(alpha0: Complex64, seq: &SequenceSpec, kerr: &KerrParams) -> SequenceMoments {
    let (alpha, beta) = beamsplitter_transform(alpha0, Complex64::new(0.0, 0.0), seq.theta1, 0.0);
    let state = KerrEvolvedCoherent {
        alpha,
        beta,
        kerr: *kerr,
        t: seq.t_hold,
    };
    output_moments(seq, &mut |p, q, r, s| state.normal_moment(p, q, r, s))
}

/// Exact `⟨N̂₂⟩`, `⟨N̂₂²⟩` and `v(N̂₂)` for a Poissonian (coherent or
/// random-phase) initial state. O(1) in `N₀`.
pub fn closed_form_moments(
    init: &InitialEnsemble,
    seq: &SequenceSpec,
    kerr: &KerrParams,
) -> Result<MomentSet> {
    init.validate()?;
    if init.fano != 1.0 {
        return Err(Error::param(
            "fano",
            "closed form needs Poissonian input (fano = 1); use mixture_moments",
        ));
    }
    seq.validate()?;
    kerr.validate()?;
    Ok(sequence_moments(Complex64::new(init.n0_mean.sqrt(), 0.0), seq, kerr).mode2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn beamsplitter_identity_and_full_transfer() {
        let (a, b) = beamsplitter_transform(c(0.3, 0.2), c(-0.1, 0.5), 0.0, 1.3);
        assert_eq!((a, b), (c(0.3, 0.2), c(-0.1, 0.5)));
        let (a, b) = beamsplitter_transform(c(1.0, 0.0), c(0.0, 0.0), FRAC_PI_2, 0.0);
        assert!((a - c(0.0, 0.0)).norm() < 1e-16);
        assert!((b - c(0.0, -1.0)).norm() < 1e-16);
    }

    #[test]
    fn first_pulse_matches_quoted_amplitudes() {
        let alpha0 = c(3.0, 0.0);
        let theta = 0.3f64;
        let (a, b) = beamsplitter_transform(alpha0, c(0.0, 0.0), theta, 0.0);
        assert_eq!(a, alpha0 * theta.cos());
        assert_eq!(b, c(0.0, -3.0 * theta.sin()));
    }

    proptest! {
        #[test]
        fn beamsplitter_preserves_norm(
            ar in -5.0..5.0f64, ai in -5.0..5.0f64, br in -5.0..5.0f64, bi in -5.0..5.0f64,
            theta in 0.0..FRAC_PI_2, phi in 0.0..(2.0 * PI),
        ) {
            let (a, b) = beamsplitter_transform(c(ar, ai), c(br, bi), theta, phi);
            let before = ar * ar + ai * ai + br * br + bi * bi;
            let after = a.norm_sqr() + b.norm_sqr();
            prop_assert!((after - before).abs() <= 1e-13 * before.max(1.0));
        }
    }

    #[test]
    fn kerr_energy_examples() {
        let k = KerrParams::new(0.7, 1.3, 0.0).unwrap();
        assert_eq!(kerr_energy(0, 0, &k).unwrap(), 0.0);
        assert_eq!(kerr_energy(1, 0, &k).unwrap(), 0.0);
        assert_eq!(kerr_energy(0, 1, &k).unwrap(), 0.0);
        assert!(kerr_energy(-1, 0, &k).is_err());

        // Phi for (n1, n2, m1, m2) = (2, 0, 1, 1) is 2 chi11 - 2 chi12.
        let k = KerrParams::new(0.25, 0.5, 0.125).unwrap();
        let phi = kerr_energy(2, 0, &k).unwrap() - kerr_energy(1, 1, &k).unwrap();
        assert_eq!(phi, 2.0 * 0.25 - 2.0 * 0.125);
    }

    #[test]
    fn kerr_energy_matches_coherence_phase_formula() {
        // Phi_{n1,n2,m1} written out term by term.
        let k = KerrParams::new(0.31, 0.47, 0.19).unwrap();
        for n1 in 0..6i64 {
            for n2 in 0..6i64 {
                for m1 in 0..=(n1 + n2) {
                    let m2 = n1 + n2 - m1;
                    let phi = k.chi11 * ((n1 * (n1 - 1) - m1 * (m1 - 1)) as f64)
                        + k.chi22 * (((m1 - n1) * (2 * n2 + n1 - m1 - 1)) as f64)
                        + 2.0 * k.chi12 * ((n1 * n2 - m1 * (n1 + n2 - m1)) as f64);
                    let diff = kerr_energy(n1, n2, &k).unwrap() - kerr_energy(m1, m2, &k).unwrap();
                    assert!((phi - diff).abs() < 1e-12, "{n1} {n2} {m1}");
                }
            }
        }
    }

    #[test]
    fn degenerate_energy_depends_only_on_total() {
        let k = KerrParams::degenerate(0.37);
        for n in 0..10i64 {
            let e0 = kerr_energy(n, 0, &k).unwrap();
            assert_relative_eq!(e0, 0.37 * (n * (n - 1)) as f64, max_relative = 1e-15);
            for n2 in 0..=n {
                assert_relative_eq!(kerr_energy(n - n2, n2, &k).unwrap(), e0, max_relative = 1e-14);
            }
        }
    }

    fn fig2_kerr() -> KerrParams {
        KerrParams::sodium_500hz()
    }

    #[test]
    fn no_hold_is_coherent() {
        let init = InitialEnsemble::poissonian(1e7);
        for phi in [0.0, 0.7, 2.0, 4.5] {
            let seq = SequenceSpec::new(0.3, 0.025, phi, 0.0).unwrap();
            let m = closed_form_moments(&init, &seq, &fig2_kerr()).unwrap();
            assert!((m.variance_norm - 1.0).abs() < 1e-9, "{}", m.variance_norm);
            let amp = c(0.3f64.sin() * 0.025f64.cos(), 0.0)
                + c(0.3f64.cos() * 0.025f64.sin(), 0.0) * Complex64::from_polar(1.0, -phi);
            assert_relative_eq!(m.mean, 1e7 * amp.norm_sqr(), max_relative = 1e-12);
        }
    }

    #[test]
    fn degenerate_kerr_never_squeezes() {
        let init = InitialEnsemble::poissonian(1e7);
        let k = KerrParams::degenerate(0.018);
        for t in [0.001, 0.008, 0.016] {
            for phi in [0.0, 1.1, 3.3, 5.9] {
                let seq = SequenceSpec::new(0.3, 0.025, phi, t).unwrap();
                let m = closed_form_moments(&init, &seq, &k).unwrap();
                assert!((m.variance_norm - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn second_pulse_off_gives_poissonian() {
        let init = InitialEnsemble::poissonian(5e4);
        let seq = SequenceSpec::new(0.3, 0.0, 1.0, 0.01).unwrap();
        let m = closed_form_moments(&init, &seq, &fig2_kerr()).unwrap();
        assert!((m.variance_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fig2_point_squeezes_below_one_percent() {
        // Cell of the 201x201 map located by a brute-force scan.
        let init = InitialEnsemble::poissonian(1e7);
        let seq = SequenceSpec::new(0.3, 0.025, 1.094_086_993_787_490_2, 0.0081).unwrap();
        let m = closed_form_moments(&init, &seq, &fig2_kerr()).unwrap();
        assert!(m.variance_norm < 0.01, "{}", m.variance_norm);
        assert!(m.variance_norm > 0.0);
    }

    #[test]
    fn non_poissonian_input_is_rejected() {
        let init = InitialEnsemble { n0_mean: 100.0, fano: 3.0 };
        let seq = SequenceSpec::new(0.3, 0.025, 0.0, 0.0).unwrap();
        assert!(closed_form_moments(&init, &seq, &fig2_kerr()).is_err());
    }

    #[test]
    fn sequence_validation() {
        assert!(SequenceSpec::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(SequenceSpec::new(0.1, 2.0, 0.0, 0.0).is_err());
        assert!(SequenceSpec::new(0.1, 0.1, 0.0, -1.0).is_err());
        let s = SequenceSpec::new(0.1, 0.1, -0.5, 0.0).unwrap();
        assert_relative_eq!(s.phi, 2.0 * PI - 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn global_phase_invariance(
            n0 in 1.0..1e6f64, theta1 in 0.0..FRAC_PI_2, theta2 in 0.0..FRAC_PI_2,
            phi in 0.0..(2.0 * PI), t in 0.0..0.5f64, chi in prop::array::uniform3(-0.05..0.05f64),
            global in prop::collection::vec(0.0..(2.0 * PI), 8),
        ) {
            let k = KerrParams::new(chi[0], chi[1], chi[2]).unwrap();
            let seq = SequenceSpec { theta1, theta2, phi, t_hold: t };
            let reference = sequence_moments(c(n0.sqrt(), 0.0), &seq, &k).mode2;
            for g in global {
                let m = sequence_moments(Complex64::from_polar(n0.sqrt(), g), &seq, &k).mode2;
                prop_assert!((m.mean - reference.mean).abs() <= 1e-12 * n0);
                prop_assert!((m.mean_sq - reference.mean_sq).abs() <= 1e-12 * n0 * (n0 + 1.0));
            }
        }

        #[test]
        fn total_number_is_conserved(
            n0 in 1.0..1e7f64, theta1 in 0.0..FRAC_PI_2, theta2 in 0.0..FRAC_PI_2,
            phi in 0.0..(2.0 * PI), t in 0.0..0.05f64,
        ) {
            let seq = SequenceSpec { theta1, theta2, phi, t_hold: t };
            let m = sequence_moments(c(n0.sqrt(), 0.0), &seq, &fig2_kerr());
            let total = m.mode1.mean + m.mode2.mean;
            prop_assert!(((total - n0) / n0).abs() <= 1e-12);
        }

        #[test]
        fn phi_is_two_pi_periodic(
            n0 in 1.0..1e7f64, phi in 0.0..(2.0 * PI), t in 0.0..0.02f64,
        ) {
            let k = fig2_kerr();
            let a = SequenceSpec { theta1: 0.3, theta2: 0.025, phi, t_hold: t };
            let b = SequenceSpec { phi: phi + 2.0 * PI, ..a };
            let ma = sequence_moments(c(n0.sqrt(), 0.0), &a, &k).mode2;
            let mb = sequence_moments(c(n0.sqrt(), 0.0), &b, &k).mode2;
            prop_assert!(((ma.mean - mb.mean) / ma.mean).abs() < 1e-12);
            prop_assert!((ma.variance_norm - mb.variance_norm).abs() < 1e-7 * ma.variance_norm.max(1.0));
        }

        #[test]
        fn variance_is_non_negative(
            n0 in 1.0..1e7f64, theta1 in 0.01..FRAC_PI_2, theta2 in 0.0..FRAC_PI_2,
            phi in 0.0..(2.0 * PI), t in 0.0..0.05f64,
        ) {
            let seq = SequenceSpec { theta1, theta2, phi, t_hold: t };
            let m = sequence_moments(c(n0.sqrt(), 0.0), &seq, &fig2_kerr()).mode2;
            prop_assert!(m.variance_norm >= -1e-9);
        }
    }
}
