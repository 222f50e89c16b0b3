//! Exponents and constants attached to the parameter triple `(d, n, a)`.
//!
//! Every threshold comparison is done on `a + n` exactly as supplied, with no
//! epsilon: `a + n = 0` is supersingular and `a + n = 2` is superdegenerate.

use std::fmt;

use serde::Serialize;

use crate::special::{gamma, sphere_area};
use crate::{Error, Real, Result};

/// Behaviour of the weight `|y|^a` near `Σ₀`, which depends on `a + n` only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `a + n ≤ 0`: infinite weighted capacity, solutions vanish on `Σ₀`.
    Supersingular,
    /// `0 < a + n < 2`: positive finite capacity; conormal and Dirichlet data can be imposed.
    MidRange,
    /// `a + n ≥ 2`: zero capacity; only the homogeneous conormal condition makes sense.
    Superdegenerate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Supersingular => "supersingular",
            Regime::MidRange => "mid-range",
            Regime::Superdegenerate => "superdegenerate",
        })
    }
}

fn sum<T: Real>(a: T, n: usize) -> T {
    a + T::of_usize(n)
}

pub fn classify_regime<T: Real>(a: T, n: usize) -> Regime {
    let an = sum(a, n);
    if an <= T::zero() {
        Regime::Supersingular
    } else if an < T::lit(2.0) {
        Regime::MidRange
    } else {
        Regime::Superdegenerate
    }
}

/// Homogeneity exponent `(2-a-n + sqrt((2-a-n)^2 + 4(n-1))) / 2` capping the
/// regularity of conormal solutions.
pub fn alpha_star<T: Real>(a: T, n: usize) -> T {
    let t = T::lit(2.0) - sum(a, n);
    let four = T::lit(4.0);
    (t + (t * t + four * T::of_usize(n.saturating_sub(1))).sqrt()) / T::lit(2.0)
}

fn require_midrange<T: Real>(a: T, n: usize, what: &str) -> Result<()> {
    match classify_regime(a, n) {
        Regime::MidRange => Ok(()),
        other => Err(Error::Domain(format!(
            "{what} needs 0 < a+n < 2, but a+n = {} is {other}",
            sum(a, n)
        ))),
    }
}

fn require_below_two<T: Real>(a: T, n: usize, what: &str) -> Result<()> {
    if sum(a, n) < T::lit(2.0) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} needs a+n < 2, but a+n = {} is {}",
            sum(a, n),
            classify_regime(a, n)
        )))
    }
}

/// Fractional order `s = (2-a-n)/2 ∈ (0,1)` of the operator on `Σ₀`.
pub fn fractional_order<T: Real>(a: T, n: usize) -> Result<T> {
    require_midrange(a, n, "the fractional order")?;
    Ok((T::lit(2.0) - sum(a, n)) / T::lit(2.0))
}

/// Exponent `b = 4 - a - 2n` of the equation solved by the boundary Harnack
/// ratio `u/|y|^{2-a-n}`. Always satisfies `b + n > 2`.
pub fn harnack_exponent_b<T: Real>(a: T, n: usize) -> Result<T> {
    require_below_two(a, n, "the Harnack exponent")?;
    Ok(T::lit(4.0) - a - T::of_usize(2 * n))
}

/// `d_{a,n} = 2^{a+n-1} Γ((a+n)/2) / Γ((2-a-n)/2)`, the Dirichlet-to-Neumann constant.
pub fn extension_constant<T: Real>(a: T, n: usize) -> Result<T> {
    require_midrange(a, n, "the extension constant")?;
    let an = sum(a, n);
    let two = T::lit(2.0);
    Ok(two.powf(an - T::one()) * gamma(an / two) / gamma((two - an) / two))
}

/// Whether `n - 1 > 2(2-a-n)^2`, i.e. the ratio exponent `α*(b,n)` exceeds the
/// Dirichlet profile exponent `2-a-n`.
pub fn dirichlet_sharpness_holds<T: Real>(a: T, n: usize) -> Result<bool> {
    require_below_two(a, n, "the sharpness condition")?;
    let t = T::lit(2.0) - sum(a, n);
    Ok(T::of_usize(n - 1) > T::lit(2.0) * t * t)
}

/// The triple `(d, n, a)` with `2 ≤ n ≤ d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProblemParams<T> {
    pub d: usize,
    pub n: usize,
    pub a: T,
}

impl<T: Real> ProblemParams<T> {
    pub fn new(d: usize, n: usize, a: T) -> Result<Self> {
        if n < 2 || n > d {
            return Err(Error::Argument(format!("need 2 <= n <= d, got d = {d}, n = {n}")));
        }
        if !a.is_finite() {
            return Err(Error::Argument(format!("weight exponent a must be finite, got {a}")));
        }
        Ok(Self { d, n, a })
    }

    /// Dimension `d - n` of `Σ₀`.
    pub fn thin_dim(&self) -> usize {
        self.d - self.n
    }

    pub fn a_plus_n(&self) -> T {
        sum(self.a, self.n)
    }

    /// Exponent `a + n - 1` of the reduced weight `r^{a+n-1}`.
    pub fn reduced_exponent(&self) -> T {
        self.a_plus_n() - T::one()
    }

    /// Exponent `2 - a - n` of the characteristic solution `|y|^{2-a-n}`.
    pub fn characteristic_exponent(&self) -> T {
        T::lit(2.0) - self.a_plus_n()
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self.a, self.n)
    }

    pub fn alpha_star(&self) -> T {
        alpha_star(self.a, self.n)
    }

    pub fn s(&self) -> Result<T> {
        fractional_order(self.a, self.n)
    }

    pub fn b(&self) -> Result<T> {
        harnack_exponent_b(self.a, self.n)
    }

    /// `α*(b, n)` for the Harnack exponent `b`.
    pub fn alpha_star_b(&self) -> Result<T> {
        Ok(alpha_star(self.b()?, self.n))
    }

    pub fn extension_constant(&self) -> Result<T> {
        extension_constant(self.a, self.n)
    }

    pub fn sharpness_holds(&self) -> Result<bool> {
        dirichlet_sharpness_holds(self.a, self.n)
    }

    /// `ω_n = |S^{n-1}|`.
    pub fn omega_n(&self) -> T {
        sphere_area(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regime_examples_and_boundaries() {
        assert_eq!(classify_regime(-1.0, 2), Regime::MidRange);
        assert_eq!(classify_regime(1.0, 2), Regime::Superdegenerate);
        assert_eq!(classify_regime(-2.0, 2), Regime::Supersingular);
        assert_eq!(classify_regime(0.0, 2), Regime::Superdegenerate);
        assert_eq!(classify_regime(-3.0, 3), Regime::Supersingular);
        assert_eq!(classify_regime(-2.999, 3), Regime::MidRange);
    }

    #[test]
    fn alpha_star_examples() {
        assert!((alpha_star(0.0, 3) - 1.0_f64).abs() < 1e-15);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((alpha_star(-1.0, 2) - golden).abs() < 1e-15);
        assert!((alpha_star(-3.0, 4) - (1.0 + 13f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((alpha_star(-3.0_f64, 4) - 2.302_775_6).abs() < 1e-7);
    }

    #[test]
    fn fractional_order_examples() {
        assert_eq!(fractional_order(-1.0, 2).unwrap(), 0.5);
        assert_eq!(fractional_order(-0.5, 2).unwrap(), 0.25);
        let err = fractional_order(0.0, 2).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("superdegenerate")), "{err}");
    }

    #[test]
    fn harnack_exponent_examples() {
        assert_eq!(harnack_exponent_b(-1.0, 2).unwrap(), 1.0);
        assert_eq!(harnack_exponent_b(-3.0, 4).unwrap(), -1.0);
        assert!(harnack_exponent_b(1.0, 2).is_err());
    }

    #[test]
    fn extension_constant_examples() {
        assert!((extension_constant(-1.0, 2).unwrap() - 1.0_f64).abs() < 1e-14);
        // Γ(3/4)^2/π via the reflection identity Γ(1/4)Γ(3/4) = π√2,
        // with Γ(3/4) = 1.2254167024651776 to 17 digits.
        let g34 = 1.225_416_702_465_177_6_f64;
        let expected = g34 * g34 / std::f64::consts::PI;
        assert!((extension_constant(-0.5, 2).unwrap() - expected).abs() < 1e-13);
        assert!((expected - 0.477_99).abs() < 1e-5);
        assert!(extension_constant(0.0, 2).is_err());
    }

    #[test]
    fn extension_constant_matches_codimension_one_form() {
        for &(a, n) in &[(-1.0, 2), (-0.5, 2), (-1.75, 3), (-3.6, 4), (-1.2, 2)] {
            let s = fractional_order(a, n).unwrap();
            let cs = 2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s);
            assert!((extension_constant(a, n).unwrap() - cs).abs() < 1e-13);
        }
    }

    #[test]
    fn sharpness_examples() {
        assert!(dirichlet_sharpness_holds(-3.0, 4).unwrap());
        assert!(!dirichlet_sharpness_holds(-1.0, 2).unwrap());
        assert!(!dirichlet_sharpness_holds(-2.0, 3).unwrap());
        assert!(dirichlet_sharpness_holds(1.0, 2).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(3, 2, -1.0).is_ok());
        assert!(ProblemParams::new(3, 1, -1.0).is_err());
        assert!(ProblemParams::new(3, 4, -1.0).is_err());
        assert!(ProblemParams::new(3, 2, f64::NAN).is_err());
        let p = ProblemParams::<f64>::new(5, 4, -3.0).unwrap();
        assert_eq!(p.thin_dim(), 1);
        assert!((p.alpha_star_b().unwrap() - 1.302_775_6).abs() < 1e-7);
    }

    #[test]
    fn alpha_star_is_strictly_decreasing_in_a() {
        for n in 2..7 {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let a = -8.0 + 0.025 * i as f64;
                let v = alpha_star(a, n);
                assert!(v > 0.0 && v < prev, "n={n}, a={a}");
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn alpha_star_positive(a in -50.0..50.0_f64, n in 2usize..12) {
            prop_assert!(alpha_star(a, n) > 0.0);
        }

        #[test]
        fn alpha_star_exceeds_one_minus_a_minus_n(an in 0.001..0.999_f64, n in 2usize..9) {
            let a = an - n as f64;
            prop_assert!(alpha_star(a, n) > 1.0 - an);
        }

        #[test]
        fn b_plus_n_exceeds_two(a in -20.0..1.99_f64, n in 2usize..9) {
            prop_assume!(a + (n as f64) < 2.0);
            let b = harnack_exponent_b(a, n).unwrap();
            prop_assert!(b + n as f64 > 2.0);
        }

        #[test]
        fn extension_constant_depends_on_a_plus_n(an in 0.01..1.99_f64, n in 2usize..8, m in 2usize..8) {
            let d1 = extension_constant(an - n as f64, n).unwrap();
            let d2 = extension_constant(an - m as f64, m).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-12 * d1.abs().max(1.0));
            prop_assert!(d1 > 0.0);
        }

        #[test]
        fn sharpness_iff_ratio_exponent_beats_profile(a in -20.0..1.99_f64, n in 2usize..9) {
            prop_assume!(a + (n as f64) < 2.0);
            let t = 2.0 - a - n as f64;
            let b = harnack_exponent_b(a, n).unwrap();
            let lhs = dirichlet_sharpness_holds(a, n).unwrap();
            let margin = (n as f64 - 1.0) - 2.0 * t * t;
            prop_assume!(margin.abs() > 1e-9);
            prop_assert_eq!(lhs, alpha_star(b, n) > t);
        }

        #[test]
        fn derived_values_are_deterministic(a in -6.0..1.99_f64, n in 2usize..7) {
            let p = ProblemParams::new(n + 1, n, a).unwrap();
            prop_assert_eq!(p.alpha_star().to_bits(), p.alpha_star().to_bits());
            prop_assert_eq!(p.b().ok().map(f64::to_bits), p.b().ok().map(f64::to_bits));
        }
    }
}
