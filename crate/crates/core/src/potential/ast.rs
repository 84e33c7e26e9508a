use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::poly::Poly;
use crate::scalar::Rational;

use super::PotentialError;

/// Expression tree of the potential DSL. Literals are always non-negative;
/// a leading minus is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(Rational),
    /// Zero-based variable index (`x1` / `t1` is index 0; radial `t` is 0).
    Var(usize),
    /// Declared constant such as `omega` or `eps`.
    Param(String),
    /// `norm2()`: squared Euclidean norm of the full argument vector.
    Norm2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Num(Rational::zero())
    }

    /// Largest variable index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Num(_) | Expr::Param(_) | Expr::Norm2 => 0,
            Expr::Neg(a) | Expr::Pow(a, _) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn uses_norm2(&self) -> bool {
        match self {
            Expr::Norm2 => true,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.uses_norm2(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.uses_norm2() || b.uses_norm2(),
        }
    }

    /// Expand into polynomial normal form over `nvars` variables.
    /// Division is only allowed by constants.
    pub fn to_poly(&self, nvars: usize, params: &BTreeMap<String, Rational>) -> Result<Poly, PotentialError> {
        Ok(match self {
            Expr::Num(c) => Poly::constant(nvars, *c),
            Expr::Var(i) => Poly::var(nvars, *i),
            Expr::Param(name) => {
                let v = params.get(name).ok_or_else(|| PotentialError::UnknownIdentifier {
                    name: name.clone(),
                    line: 0,
                    column: 0,
                })?;
                Poly::constant(nvars, *v)
            }
            Expr::Norm2 => {
                return Err(PotentialError::NotPolynomial(
                    "norm2() is only available in expr potentials".into(),
                ))
            }
            Expr::Neg(a) => a.to_poly(nvars, params)?.neg(),
            Expr::Add(a, b) => a.to_poly(nvars, params)?.add(&b.to_poly(nvars, params)?),
            Expr::Sub(a, b) => a.to_poly(nvars, params)?.sub(&b.to_poly(nvars, params)?),
            Expr::Mul(a, b) => a.to_poly(nvars, params)?.mul(&b.to_poly(nvars, params)?),
            Expr::Div(a, b) => {
                let den = b
                    .to_poly(nvars, params)?
                    .as_constant()
                    .ok_or_else(|| PotentialError::NotPolynomial("division by a non-constant term".into()))?;
                if den.is_zero() {
                    return Err(PotentialError::Domain("division by zero".into()));
                }
                a.to_poly(nvars, params)?.scale(&(Rational::one() / den))
            }
            Expr::Pow(a, k) => a.to_poly(nvars, params)?.pow(*k),
        })
    }

    /// Exact value of a variable-free expression.
    pub fn eval_constant(&self, params: &BTreeMap<String, Rational>) -> Result<Rational, PotentialError> {
        if self.arity() > 0 || self.uses_norm2() {
            return Err(PotentialError::NotPolynomial(
                "parameter values must be constant".into(),
            ));
        }
        let p = self.to_poly(0, params)?;
        Ok(p.as_constant().expect("variable-free polynomial is constant"))
    }
}
