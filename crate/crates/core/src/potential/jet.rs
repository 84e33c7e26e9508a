use serde::Serialize;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Value, gradient and Hessian of a potential at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jet2<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: Matrix<T>,
}

/// Second-order forward-mode number: value, n first derivatives and the
/// packed upper triangle of second derivatives (`n(n+1)/2` entries).
#[derive(Debug, Clone)]
pub(crate) struct HyperDual<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Vec<T>,
}

#[inline]
fn packed(n: usize, i: usize, j: usize) -> usize {
    // row-major upper triangle, i <= j
    i * n - i * (i + 1) / 2 + j
}

impl<T: Scalar> HyperDual<T> {
    pub fn constant(value: T, n: usize) -> Self {
        Self {
            value,
            grad: vec![T::zero(); n],
            hess: vec![T::zero(); n * (n + 1) / 2],
        }
    }

    pub fn variable(value: T, index: usize, n: usize) -> Self {
        let mut d = Self::constant(value, n);
        d.grad[index] = T::one();
        d
    }

    fn n(&self) -> usize {
        self.grad.len()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            value: self.value.clone() + o.value.clone(),
            grad: self
                .grad
                .iter()
                .zip(&o.grad)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&o.hess)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            value: -self.value.clone(),
            grad: self.grad.iter().map(|a| -a.clone()).collect(),
            hess: self.hess.iter().map(|a| -a.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n();
        let (a, b) = (&self.value, &o.value);
        let grad = (0..n)
            .map(|i| self.grad[i].clone() * b.clone() + a.clone() * o.grad[i].clone())
            .collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                let k = packed(n, i, j);
                hess.push(
                    self.hess[k].clone() * b.clone()
                        + self.grad[i].clone() * o.grad[j].clone()
                        + self.grad[j].clone() * o.grad[i].clone()
                        + a.clone() * o.hess[k].clone(),
                );
            }
        }
        Self {
            value: a.clone() * b.clone(),
            grad,
            hess,
        }
    }

    /// Apply a scalar function with derivatives `(f, f', f'')` at `value`.
    fn chain(&self, f: T, df: T, d2f: T) -> Self {
        let n = self.n();
        let grad = self.grad.iter().map(|g| df.clone() * g.clone()).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                hess.push(
                    df.clone() * self.hess[packed(n, i, j)].clone()
                        + d2f.clone() * self.grad[i].clone() * self.grad[j].clone(),
                );
            }
        }
        Self { value: f, grad, hess }
    }

    /// `1/self`; `None` when the value is zero.
    pub fn recip(&self) -> Option<Self> {
        if self.value == T::zero() {
            return None;
        }
        let inv = T::one() / self.value.clone();
        let inv2 = inv.clone() * inv.clone();
        let two = T::from_int(2);
        Some(self.chain(inv.clone(), -inv2.clone(), two * inv2 * inv))
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::constant(T::one(), self.n());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn into_jet(self) -> Jet2<T> {
        let n = self.n();
        let mut hessian = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.hess[packed(n, i, j)].clone();
                hessian[(i, j)] = v.clone();
                hessian[(j, i)] = v;
            }
        }
        Jet2 {
            value: self.value,
            gradient: self.grad,
            hessian,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_covers_upper_triangle() {
        let n = 4;
        let mut seen = Vec::new();
        for i in 0..n {
            for j in i..n {
                seen.push(packed(n, i, j));
            }
        }
        assert_eq!(seen, (0..n * (n + 1) / 2).collect::<Vec<_>>());
    }

    #[test]
    fn product_rule_second_order() {
        // f = x*y at (2,3): grad (3,2), hess [[0,1],[1,0]]
        let x = HyperDual::variable(2.0, 0, 2);
        let y = HyperDual::variable(3.0, 1, 2);
        let j = x.mul(&y).into_jet();
        assert_eq!(j.value, 6.0);
        assert_eq!(j.gradient, vec![3.0, 2.0]);
        assert_eq!(j.hessian.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn reciprocal_derivatives() {
        // f = 1/x at x=2: f'=-1/4, f''=1/4
        let x = HyperDual::variable(2.0, 0, 1);
        let j = x.recip().unwrap().into_jet();
        assert_eq!(j.value, 0.5);
        assert_eq!(j.gradient, vec![-0.25]);
        assert_eq!(j.hessian[(0, 0)], 0.25);
        assert!(HyperDual::constant(0.0, 1).recip().is_none());
    }
}
