//! Exact sparse polynomials with rational coefficients, real root finding and
//! a two-variable elimination used by the block-radial critical point search.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{rational_to_f64, Rational, Scalar};

/// Multivariate polynomial `Σ c_α x^α` stored as exponent vector -> coefficient.
/// Never holds a zero coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The monomial `x_var`.
    pub fn var(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Rational::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            p.add_term(e, c);
        }
        p
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: &[Rational]) -> Self {
        Self::from_terms(1, coeffs.iter().enumerate().map(|(d, c)| (vec![d as u32], *c)))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// Constant value, if the polynomial has no variable terms.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&x| x == 0).then_some(*c)
            }
            _ => None,
        }
    }

    /// Re-index onto `nvars` variables (must not drop a used variable).
    pub fn with_nvars(&self, nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in &self.terms {
            let mut ne = vec![0; nvars];
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    assert!(i < nvars, "variable index out of range");
                }
                if i < nvars {
                    ne[i] = x;
                }
            }
            p.add_term(ne, *c);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.nvars.max(other.nvars);
        let mut p = self.with_nvars(n);
        for (e, c) in &other.with_nvars(n).terms {
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.nvars.max(other.nvars);
        let a = self.with_nvars(n);
        let b = other.with_nvars(n);
        let mut p = Self::zero(n);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, Rational::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
                let mut ne = e.clone();
                ne[var] -= 1;
                (ne, c * Rational::from_integer(e[var] as i128))
            }),
        )
    }

    /// Highest exponent of `var`.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> T {
        assert!(x.len() >= self.nvars, "too few arguments for polynomial");
        let mut total = T::zero();
        for (e, c) in &self.terms {
            let mut term = T::from_rational(c);
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    term = term * xi.clone();
                }
            }
            total = total + term;
        }
        total
    }

    /// Substitute `value` for variable `var`, leaving a polynomial in the
    /// same number of variables (with `var` absent).
    pub fn substitute(&self, var: usize, value: &Rational) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            ne[var] = 0;
            let mut v = *c;
            for _ in 0..e[var] {
                v *= value;
            }
            p.add_term(ne, v);
        }
        p
    }

    /// Ascending coefficient list in variable 0, for a polynomial that only
    /// involves variable 0.
    pub fn univariate_coeffs(&self) -> Option<Vec<Rational>> {
        let deg = self.degree_in(0) as usize;
        let mut out = vec![Rational::zero(); deg + 1];
        for (e, c) in &self.terms {
            if e.iter().skip(1).any(|&x| x > 0) {
                return None;
            }
            out[e[0] as usize] = *c;
        }
        Some(out)
    }
}

/// Horner evaluation of an ascending coefficient list.
pub fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn horner_with_derivative(coeffs: &[f64], t: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for c in coeffs.iter().rev() {
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp)
}

/// Real roots of `Σ c_i t^i` (ascending), via companion-matrix eigenvalues
/// followed by `polish_steps` Newton iterations. Sorted ascending,
/// deduplicated.
pub fn real_roots(coeffs: &[f64], polish_steps: usize) -> Vec<f64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.last().is_some_and(|x| *x == 0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let mut roots = Vec::new();
    let leading_zeros = c.iter().take_while(|x| **x == 0.0).count();
    if leading_zeros > 0 {
        roots.push(0.0);
        c.drain(..leading_zeros);
    }
    let deg = c.len() - 1;
    if deg >= 1 {
        let lead = c[deg];
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -c[i] / lead;
        }
        let scale: f64 = c.iter().map(|x| x.abs()).sum();
        for z in comp.complex_eigenvalues().iter() {
            if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
                continue;
            }
            let mut t = z.re;
            for _ in 0..polish_steps {
                let (p, dp) = horner_with_derivative(&c, t);
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                if !step.is_finite() {
                    break;
                }
                t -= step;
            }
            let mag: f64 = c
                .iter()
                .enumerate()
                .map(|(i, ci)| ci.abs() * t.abs().powi(i as i32))
                .sum::<f64>()
                .max(scale * f64::EPSILON);
            if horner(&c, t).abs() <= 1e-7 * mag {
                roots.push(t);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
    roots
}

pub fn rational_coeffs_to_f64(coeffs: &[Rational]) -> Vec<f64> {
    coeffs.iter().map(rational_to_f64).collect()
}

fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn eval_big(p: &Poly, x: &[BigRational]) -> BigRational {
    let mut total = BigRational::zero();
    for (e, c) in p.terms() {
        let mut term = to_big(c);
        for (xi, &k) in x.iter().zip(e) {
            for _ in 0..k {
                term *= xi;
            }
        }
        total += term;
    }
    total
}

fn det_big(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &p;
            for c in col..n {
                let v = &f * &m[col][c];
                m[r][c] -= v;
            }
        }
    }
    det
}

/// Coefficients (in variable 1) of `p(x0 = v, x1)`, ascending.
fn coeffs_in_second(p: &Poly, v: &BigRational) -> Vec<BigRational> {
    let deg = p.degree_in(1) as usize;
    let mut out = vec![BigRational::zero(); deg + 1];
    for (e, c) in p.terms() {
        let mut term = to_big(c);
        for _ in 0..e[0] {
            term *= v;
        }
        out[e[1] as usize] += term;
    }
    out
}

fn sylvester_det(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let da = a.len() - 1;
    let db = b.len() - 1;
    let n = da + db;
    if n == 0 {
        return BigRational::one();
    }
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for r in 0..db {
        for (i, c) in a.iter().rev().enumerate() {
            m[r][r + i] = c.clone();
        }
    }
    for r in 0..da {
        for (i, c) in b.iter().rev().enumerate() {
            m[db + r][r + i] = c.clone();
        }
    }
    det_big(m)
}

/// Resultant of two bivariate polynomials with respect to the second
/// variable, as an ascending coefficient list in the first variable.
/// Computed exactly by evaluation at integer nodes and interpolation.
/// Returns `None` when the resultant vanishes identically (common factor).
pub fn resultant_wrt_second(f: &Poly, g: &Poly) -> Option<Vec<f64>> {
    assert!(f.nvars() == 2 && g.nvars() == 2, "bivariate polynomials expected");
    let df = f.degree_in(1) as usize;
    let dg = g.degree_in(1) as usize;
    let ef = f.degree_in(0) as usize;
    let eg = g.degree_in(0) as usize;
    let bound = df * eg + dg * ef;
    let nodes: Vec<BigRational> = (0..=bound)
        .map(|i| BigRational::from_integer(BigInt::from(i as i64)))
        .collect();
    let values: Vec<BigRational> = nodes
        .iter()
        .map(|v| {
            // Fix formal degrees so the Sylvester matrix shape is constant.
            let mut a = coeffs_in_second(f, v);
            let mut b = coeffs_in_second(g, v);
            a.resize(df + 1, BigRational::zero());
            b.resize(dg + 1, BigRational::zero());
            sylvester_det(&a, &b)
        })
        .collect();
    // Newton divided differences, then expand to monomial basis.
    let n = values.len();
    let mut dd = values;
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = &nodes[i] - &nodes[i - level];
            dd[i] = num / den;
        }
    }
    let mut coeffs = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        // coeffs = coeffs * (x - nodes[i]) + dd[i]
        let mut next = vec![BigRational::zero(); n];
        for k in 0..n {
            if coeffs[k].is_zero() {
                continue;
            }
            if k + 1 < n {
                next[k + 1] += &coeffs[k];
            }
            next[k] -= &coeffs[k] * &nodes[i];
        }
        next[0] += &dd[i];
        coeffs = next;
    }
    if coeffs.iter().all(Zero::is_zero) {
        return None;
    }
    // Normalize by the largest coefficient before lowering to floats.
    let max = coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(BigRational::one);
    Some(coeffs.iter().map(|c| (c / &max).to_f64().unwrap_or(0.0)).collect())
}

/// Check the exact vanishing of `p` at a rational point.
pub fn vanishes_at(p: &Poly, x: &[Rational]) -> bool {
    let big: Vec<BigRational> = x.iter().map(to_big).collect();
    eval_big(p, &big).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn derivative_of_quartic() {
        // φ(t) = -2t² + 5/3 t³ - 1/4 t⁴, φ'(t) = -4t + 5t² - t³
        let phi = Poly::univariate(&[r(0, 1), r(0, 1), r(-2, 1), r(5, 3), r(-1, 4)]);
        let d = phi.derivative(0);
        assert_eq!(
            d.univariate_coeffs().unwrap(),
            vec![r(0, 1), r(-4, 1), r(5, 1), r(-1, 1)]
        );
    }

    #[test]
    fn roots_of_cubic() {
        // -t(t-1)(t-4)
        let roots = real_roots(&[0.0, -4.0, 5.0, -1.0], 3);
        assert_eq!(roots.len(), 3);
        for (got, want) in roots.iter().zip([0.0, 1.0, 4.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn no_real_roots() {
        assert!(real_roots(&[1.0, 0.0, 1.0], 3).is_empty());
        assert!(real_roots(&[3.0], 3).is_empty());
    }

    #[test]
    fn resultant_eliminates_second_variable() {
        // f = x1 - x0, g = x1² - 4 => Res(x0) ∝ x0² - 4
        let f = Poly::var(2, 1).sub(&Poly::var(2, 0));
        let g = Poly::var(2, 1).pow(2).sub(&Poly::constant(2, r(4, 1)));
        let res = resultant_wrt_second(&f, &g).unwrap();
        let roots = real_roots(&res, 3);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 2.0).abs() < 1e-12 && (roots[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resultant_detects_common_factor() {
        let f = Poly::var(2, 1).sub(&Poly::var(2, 0));
        let g = f.mul(&Poly::var(2, 0));
        assert!(resultant_wrt_second(&f, &g).is_none());
    }

    #[test]
    fn exact_vanishing() {
        let p = Poly::var(1, 0).pow(2).sub(&Poly::constant(1, r(9, 4)));
        assert!(vanishes_at(&p, &[r(3, 2)]));
        assert!(!vanishes_at(&p, &[r(1, 1)]));
    }
}
