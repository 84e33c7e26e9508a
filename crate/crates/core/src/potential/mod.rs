//! Symmetry-invariant potentials: the DSL, its canonical printer, and
//! closed-form / forward-mode evaluation up to second derivatives.

mod ast;
mod jet;
mod parser;
mod printer;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::scalar::{Rational, Scalar};

pub use ast::Expr;
pub use jet::Jet2;
pub use parser::parse_potential;

use jet::HyperDual;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("empty potential source")]
    Empty,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier { name: String, line: usize, column: usize },
    #[error("non-integer exponent at line {line}, column {column} (only integer powers are supported)")]
    NonIntegerExponent { line: usize, column: usize },
    #[error("not a polynomial: {0}")]
    NotPolynomial(String),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("dimension mismatch: potential needs {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// `U(x) = φ(‖x‖²)` with `φ(t) = Σ c_j t^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialPolynomial {
    coeffs: Vec<Rational>,
    d1: Vec<Rational>,
    d2: Vec<Rational>,
}

fn derive(c: &[Rational]) -> Vec<Rational> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, cj)| cj * Rational::from_integer(j as i128))
        .collect()
}

fn eval_univariate<T: Scalar>(c: &[Rational], t: &T) -> T {
    c.iter()
        .rev()
        .fold(T::zero(), |acc, cj| acc * t.clone() + T::from_rational(cj))
}

impl RadialPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Rational::from_integer(0)) {
            coeffs.pop();
        }
        let d1 = derive(&coeffs);
        let d2 = derive(&d1);
        Self { coeffs, d1, d2 }
    }

    /// Ascending coefficients of φ.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Ascending coefficients of φ'.
    pub fn derivative_coeffs(&self) -> &[Rational] {
        &self.d1
    }

    pub fn phi<T: Scalar>(&self, t: &T) -> T {
        eval_univariate(&self.coeffs, t)
    }

    pub fn dphi<T: Scalar>(&self, t: &T) -> T {
        eval_univariate(&self.d1, t)
    }

    pub fn d2phi<T: Scalar>(&self, t: &T) -> T {
        eval_univariate(&self.d2, t)
    }

    fn jet<T: Scalar>(&self, x: &[T]) -> Jet2<T> {
        let n = x.len();
        let s = x.iter().fold(T::zero(), |a, xi| a + xi.clone() * xi.clone());
        let d1 = self.dphi(&s);
        let d2 = self.d2phi(&s);
        let two = T::from_int(2);
        let four = T::from_int(4);
        let gradient = x.iter().map(|xi| two.clone() * d1.clone() * xi.clone()).collect();
        let mut hessian = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut h = four.clone() * d2.clone() * x[i].clone() * x[j].clone();
                if i == j {
                    h = h + two.clone() * d1.clone();
                }
                hessian[(i, j)] = h.clone();
                hessian[(j, i)] = h;
            }
        }
        Jet2 {
            value: self.phi(&s),
            gradient,
            hessian,
        }
    }
}

/// `U(x) = ω²/2 ‖x‖² + ε/2 · 𝒰(t₁,…,t_m)` with `t_i` the squared norm of
/// block `i`. Without `omega` the quadratic term is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRadialPolynomial {
    block_dims: Vec<usize>,
    poly: Poly,
    omega: Option<Rational>,
    eps: Rational,
    grad: Vec<Poly>,
    hess: Vec<Vec<Poly>>,
}

impl BlockRadialPolynomial {
    pub fn new(block_dims: Vec<usize>, poly: Poly, omega: Option<Rational>, eps: Rational) -> Self {
        let m = block_dims.len();
        let poly = poly.with_nvars(m);
        let grad: Vec<Poly> = (0..m).map(|i| poly.derivative(i)).collect();
        let hess = grad.iter().map(|g| (0..m).map(|j| g.derivative(j)).collect()).collect();
        Self {
            block_dims,
            poly,
            omega,
            eps,
            grad,
            hess,
        }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Block index of every coordinate.
    pub fn block_of(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .enumerate()
            .flat_map(|(b, &d)| std::iter::repeat_n(b, d))
            .collect()
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn omega(&self) -> Option<&Rational> {
        self.omega.as_ref()
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    /// `ω²` (zero when absent).
    pub fn omega_sq(&self) -> Rational {
        self.omega.map_or_else(|| Rational::from_integer(0), |w| w * w)
    }

    /// `∂𝒰/∂t_i` as a polynomial in `t`.
    pub fn poly_gradient(&self) -> &[Poly] {
        &self.grad
    }

    pub fn block_invariants<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut t = vec![T::zero(); self.block_dims.len()];
        for (xi, b) in x.iter().zip(self.block_of()) {
            t[b] = t[b].clone() + xi.clone() * xi.clone();
        }
        t
    }

    fn jet<T: Scalar>(&self, x: &[T]) -> Jet2<T> {
        let n = x.len();
        let blocks = self.block_of();
        let t = self.block_invariants(x);
        let w2 = T::from_rational(&self.omega_sq());
        let eps = T::from_rational(&self.eps);
        let two = T::from_int(2);
        let s = x.iter().fold(T::zero(), |a, xi| a + xi.clone() * xi.clone());
        let value = w2.clone() * s / two.clone() + eps.clone() * self.poly.eval(&t) / two.clone();
        let du: Vec<T> = self.grad.iter().map(|g| g.eval(&t)).collect();
        let d2u: Vec<Vec<T>> = self
            .hess
            .iter()
            .map(|row| row.iter().map(|h| h.eval(&t)).collect())
            .collect();
        let gradient = x
            .iter()
            .zip(&blocks)
            .map(|(xk, &b)| (w2.clone() + eps.clone() * du[b].clone()) * xk.clone())
            .collect();
        let mut hessian = Matrix::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let mut h = two.clone() * eps.clone() * d2u[blocks[k]][blocks[l]].clone() * x[k].clone() * x[l].clone();
                if k == l {
                    h = h + w2.clone() + eps.clone() * du[blocks[k]].clone();
                }
                hessian[(k, l)] = h.clone();
                hessian[(l, k)] = h;
            }
        }
        Jet2 {
            value,
            gradient,
            hessian,
        }
    }
}

/// General expression over `x1..xn` and declared constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpressionPotential {
    expr: Expr,
    params: BTreeMap<String, Rational>,
    dim: Option<usize>,
}

impl ExpressionPotential {
    pub fn new(expr: Expr, params: BTreeMap<String, Rational>, dim: Option<usize>) -> Self {
        Self { expr, params, dim }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn params(&self) -> &BTreeMap<String, Rational> {
        &self.params
    }

    pub fn declared_dim(&self) -> Option<usize> {
        self.dim
    }

    fn eval_dual<T: Scalar>(&self, e: &Expr, x: &[T]) -> Result<HyperDual<T>, PotentialError> {
        let n = x.len();
        Ok(match e {
            Expr::Num(c) => HyperDual::constant(T::from_rational(c), n),
            Expr::Param(p) => HyperDual::constant(T::from_rational(&self.params[p]), n),
            Expr::Var(i) => HyperDual::variable(x[*i].clone(), *i, n),
            Expr::Norm2 => {
                let mut acc = HyperDual::constant(T::zero(), n);
                for (i, xi) in x.iter().enumerate() {
                    let v = HyperDual::variable(xi.clone(), i, n);
                    acc = acc.add(&v.mul(&v));
                }
                acc
            }
            Expr::Neg(a) => self.eval_dual(a, x)?.neg(),
            Expr::Add(a, b) => self.eval_dual(a, x)?.add(&self.eval_dual(b, x)?),
            Expr::Sub(a, b) => self.eval_dual(a, x)?.sub(&self.eval_dual(b, x)?),
            Expr::Mul(a, b) => self.eval_dual(a, x)?.mul(&self.eval_dual(b, x)?),
            Expr::Div(a, b) => {
                let den = self
                    .eval_dual(b, x)?
                    .recip()
                    .ok_or_else(|| PotentialError::Domain("division by zero".into()))?;
                self.eval_dual(a, x)?.mul(&den)
            }
            Expr::Pow(a, k) => self.eval_dual(a, x)?.powi(*k),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PotentialSpec {
    Radial(RadialPolynomial),
    BlockRadial(BlockRadialPolynomial),
    Expression(ExpressionPotential),
}

impl PotentialSpec {
    /// Dimension fixed by the potential itself, if any. Radial potentials
    /// work in any dimension.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            PotentialSpec::Radial(_) => None,
            PotentialSpec::BlockRadial(b) => Some(b.dim()),
            PotentialSpec::Expression(e) => e.dim,
        }
    }

    /// Smallest admissible dimension.
    pub fn min_dim(&self) -> usize {
        match self {
            PotentialSpec::Radial(_) => 1,
            PotentialSpec::BlockRadial(b) => b.dim(),
            PotentialSpec::Expression(e) => e.dim.unwrap_or_else(|| e.expr.arity().max(1)),
        }
    }

    fn check_dim(&self, got: usize) -> Result<(), PotentialError> {
        let ok = match self.required_dim() {
            Some(d) => d == got,
            None => got >= self.min_dim(),
        };
        if ok {
            Ok(())
        } else {
            Err(PotentialError::Dimension {
                expected: self.required_dim().unwrap_or_else(|| self.min_dim()),
                got,
            })
        }
    }

    /// Value, gradient and Hessian at `x`. Polynomial classes use closed
    /// forms; expressions use second-order forward-mode differentiation.
    /// Exact when `T` is [`Rational`].
    pub fn eval_jet2<T: Scalar>(&self, x: &[T]) -> Result<Jet2<T>, PotentialError> {
        self.check_dim(x.len())?;
        let jet = match self {
            PotentialSpec::Radial(r) => r.jet(x),
            PotentialSpec::BlockRadial(b) => b.jet(x),
            PotentialSpec::Expression(e) => e.eval_dual(&e.expr, x)?.into_jet(),
        };
        let finite = |v: &T| v.to_f64().is_finite();
        if !finite(&jet.value) || !jet.gradient.iter().all(finite) {
            return Err(PotentialError::Domain("non-finite potential value".into()));
        }
        Ok(jet)
    }

    pub fn value<T: Scalar>(&self, x: &[T]) -> Result<T, PotentialError> {
        self.check_dim(x.len())?;
        Ok(match self {
            PotentialSpec::Radial(r) => {
                let s = x.iter().fold(T::zero(), |a, xi| a + xi.clone() * xi.clone());
                r.phi(&s)
            }
            _ => self.eval_jet2(x)?.value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn ex1() -> PotentialSpec {
        parse_potential("radial: -2*t^2 + (5/3)*t^3 - (1/4)*t^4").unwrap()
    }

    fn ex2() -> PotentialSpec {
        parse_potential("blockradial: omega=1, eps=1, U = -1/2*t1^2 + 1/2*t1^2*t2^4").unwrap()
    }

    #[test]
    fn parses_first_example() {
        match ex1() {
            PotentialSpec::Radial(p) => {
                assert_eq!(p.coeffs(), &[r(0, 1), r(0, 1), r(-2, 1), r(5, 3), r(-1, 4)]);
                assert_eq!(p.derivative_coeffs(), &[r(0, 1), r(-4, 1), r(5, 1), r(-1, 1)]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_zero_expression() {
        match parse_potential("expr: 0").unwrap() {
            PotentialSpec::Expression(e) => assert_eq!(e.expr(), &Expr::Num(r(0, 1))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_second_example() {
        match ex2() {
            PotentialSpec::BlockRadial(b) => {
                assert_eq!(b.block_dims(), &[2, 2]);
                assert_eq!(b.poly().len(), 2);
                assert_eq!(b.omega(), Some(&r(1, 1)));
                assert_eq!(b.eps(), &r(1, 1));
                let terms: Vec<_> = b.poly().terms().map(|(e, c)| (e.clone(), *c)).collect();
                assert!(terms.contains(&(vec![2, 0], r(-1, 2))));
                assert!(terms.contains(&(vec![2, 4], r(1, 2))));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_hessians_first_example() {
        let spec = ex1();
        let j = spec.eval_jet2(&[r(1, 1), r(0, 1)]).unwrap();
        assert_eq!(j.gradient, vec![r(0, 1), r(0, 1)]);
        assert_eq!(j.hessian, Matrix::from_diagonal(&[r(12, 1), r(0, 1)]));
        let j = spec.eval_jet2(&[r(2, 1), r(0, 1)]).unwrap();
        assert_eq!(j.gradient, vec![r(0, 1), r(0, 1)]);
        assert_eq!(j.hessian, Matrix::from_diagonal(&[r(-192, 1), r(0, 1)]));
    }

    #[test]
    fn exact_hessian_second_example() {
        let j = ex2().eval_jet2(&[r(1, 1), r(0, 1), r(0, 1), r(0, 1)]).unwrap();
        assert!(j.gradient.iter().all(|g| *g == r(0, 1)));
        assert_eq!(j.hessian, Matrix::from_diagonal(&[r(-2, 1), r(0, 1), r(1, 1), r(1, 1)]));
        let j0 = ex2().eval_jet2(&[r(0, 1); 4]).unwrap();
        assert_eq!(j0.hessian, Matrix::identity(4));
    }

    #[test]
    fn expression_matches_closed_form() {
        let expr = parse_potential("expr: -2*norm2()^2 + (5/3)*norm2()^3 - (1/4)*norm2()^4").unwrap();
        let x = [0.7f64, -0.3];
        let a = expr.eval_jet2(&x).unwrap();
        let b = ex1().eval_jet2(&x).unwrap();
        assert!((a.value - b.value).abs() < 1e-14);
        for i in 0..2 {
            assert!((a.gradient[i] - b.gradient[i]).abs() < 1e-13);
            for j in 0..2 {
                assert!((a.hessian[(i, j)] - b.hessian[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn division_by_zero_is_a_domain_error() {
        let spec = parse_potential("expr: 1/x1").unwrap();
        assert!(matches!(spec.eval_jet2(&[0.0]), Err(PotentialError::Domain(_))));
        let exact = spec.eval_jet2(&[r(2, 1)]).unwrap();
        assert_eq!(exact.value, r(1, 2));
    }

    #[test]
    fn dimension_is_checked() {
        assert!(matches!(
            ex2().eval_jet2(&[0.0; 3]),
            Err(PotentialError::Dimension { expected: 4, got: 3 })
        ));
        let spec = parse_potential("expr: n=3, x1*x2").unwrap();
        assert!(spec.eval_jet2(&[1.0, 2.0]).is_err());
        assert!(spec.eval_jet2(&[1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn canonical_printing() {
        assert_eq!(ex1().to_string(), "radial: -2*t^2 + (5/3)*t^3 - (1/4)*t^4");
        assert_eq!(
            ex2().to_string(),
            "blockradial: dims=[2,2], omega=1, eps=1, U = -(1/2)*t1^2 + (1/2)*t1^2*t2^4"
        );
        let e = parse_potential("expr: omega=2, -x1^2*(x2 - 0.5)/(1 + x1^2) + omega").unwrap();
        assert_eq!(e.to_string(), "expr: omega=2, -x1^2*(x2 - 0.5)/(1 + x1^2) + omega");
    }

    #[test]
    fn single_precision_evaluation() {
        let j = ex1().eval_jet2(&[1.0f32, 0.0]).unwrap();
        assert!((j.hessian[(0, 0)] - 12.0).abs() < 1e-5);
    }
}
