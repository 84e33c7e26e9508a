//! Scalar abstractions shared by the potential evaluator, the dense linear
//! algebra and the integrators.
//!
//! Everything that only needs field arithmetic (polynomial and expression
//! evaluation, jets) is generic over [`Scalar`], which is implemented for
//! `f32`, `f64` and the exact [`Rational`] type. Everything that needs square
//! roots or ordering tolerances (eigen-solvers, integrators) is generic over
//! [`Real`].

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, Num, ToPrimitive};

/// Exact rational number used for potential coefficients.
pub type Rational = Ratio<i128>;

/// Field-like scalar usable by the jet evaluator.
pub trait Scalar: Num + Neg<Output = Self> + Clone + PartialOrd + Debug + Send + Sync + 'static {
    fn from_rational(r: &Rational) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(n as i128))
    }

    /// Lossy conversion used for diagnostics and finite-difference checks.
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        *r
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float + Copy {
    fn from_f64(x: f64) -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued fractions. Returns `None` for non-finite input or when the
/// numerator would overflow.
pub fn rational_approx(x: f64, max_den: i128) -> Option<Rational> {
    if !x.is_finite() || x.abs() > 1e15 {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(Rational::new(h1, k1))
}

/// Exact square root of a non-negative rational, when both numerator and
/// denominator are perfect squares.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if *r.numer() < 0 {
        return None;
    }
    let n = int_sqrt(*r.numer())?;
    let d = int_sqrt(*r.denom())?;
    Some(Rational::new(n, d))
}

fn int_sqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let guess = (v as f64).sqrt().round() as i128;
    (guess.saturating_sub(2)..=guess + 2)
        .filter(|g| *g >= 0)
        .find(|g| g.checked_mul(*g) == Some(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approximates_simple_fractions() {
        assert_eq!(rational_approx(5.0 / 3.0, 1000), Some(Rational::new(5, 3)));
        assert_eq!(rational_approx(-0.25, 1000), Some(Rational::new(-1, 4)));
        assert_eq!(rational_approx(4.0, 10), Some(Rational::from_integer(4)));
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(rational_sqrt(&Rational::new(9, 4)), Some(Rational::new(3, 2)));
        assert_eq!(rational_sqrt(&Rational::from_integer(2)), None);
        assert_eq!(rational_sqrt(&Rational::from_integer(-4)), None);
    }
}
