//! Independent oracles shared by the integration tests. None of these call
//! into the code they check beyond reading its inputs.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

/// Morse data of the Galerkin-truncated action Hessian
/// `Q(v) = ∫₀^{2π} |v'|² − λ² vᵀHv dt` on the span of
/// `{1, cos kt, sin kt : 1 ≤ k ≤ n0} ⊗ {e_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GalerkinMorse {
    /// Negative directions among the constants.
    pub trivial: u32,
    /// Complex multiplicity per mode: real negative count / 2.
    pub modes: BTreeMap<u32, u32>,
    /// Total negative count of the assembled matrix.
    pub total: usize,
}

/// Assemble the `n(2n0+1)` symmetric matrix by trapezoidal quadrature,
/// count its negative eigenvalues and attribute each eigenvector to the
/// frequency carrying most of its weight.
pub fn galerkin_morse(h: &[Vec<f64>], lambda: f64, n0: u32) -> GalerkinMorse {
    let n = h.len();
    let funcs = 2 * n0 as usize + 1;
    let dim = n * funcs;
    // basis function f: 0 constant, 2k-1 cos kt, 2k sin kt
    let freq = |f: usize| f.div_ceil(2) as f64;
    let value = |f: usize, t: f64| match f {
        0 => 1.0,
        f if f % 2 == 1 => (freq(f) * t).cos(),
        f => (freq(f) * t).sin(),
    };
    let deriv = |f: usize, t: f64| match f {
        0 => 0.0,
        f if f % 2 == 1 => -freq(f) * (freq(f) * t).sin(),
        f => freq(f) * (freq(f) * t).cos(),
    };
    let q = 8 * funcs + 16;
    let w = 2.0 * PI / q as f64;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..q {
        let t = s as f64 * w;
        for fa in 0..funcs {
            for fb in 0..funcs {
                let d = deriv(fa, t) * deriv(fb, t);
                let v = value(fa, t) * value(fb, t);
                for i in 0..n {
                    for j in 0..n {
                        let mut entry = -lambda * lambda * h[i][j] * v;
                        if i == j {
                            entry += d;
                        }
                        a[(fa * n + i, fb * n + j)] += w * entry;
                    }
                }
            }
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut trivial = 0;
    let mut real_counts: BTreeMap<u32, u32> = BTreeMap::new();
    let mut total = 0;
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev >= -1e-9 * scale {
            continue;
        }
        total += 1;
        let col = eig.eigenvectors.column(idx);
        let mut weight = vec![0.0; n0 as usize + 1];
        for f in 0..funcs {
            for i in 0..n {
                weight[freq(f) as usize] += col[f * n + i].powi(2);
            }
        }
        let k = (0..weight.len())
            .max_by(|&x, &y| weight[x].total_cmp(&weight[y]))
            .unwrap();
        if k == 0 {
            trivial += 1;
        } else {
            *real_counts.entry(k as u32).or_default() += 1;
        }
    }
    let modes = real_counts
        .into_iter()
        .map(|(k, c)| {
            assert_eq!(c % 2, 0, "mode {k} has an odd real negative count");
            (k, c / 2)
        })
        .filter(|(_, c)| *c > 0)
        .collect();
    GalerkinMorse { trivial, modes, total }
}

/// Period of the 1-D motion `r'' = −2φ'(r²)r` released at rest from `r0`,
/// by RK4 with step `dt` and Newton refinement of the second sign change
/// of `r'`.
pub fn radial_period(dphi: impl Fn(f64) -> f64, r0: f64, dt: f64) -> f64 {
    let acc = |r: f64| -2.0 * dphi(r * r) * r;
    let step = |(r, v): (f64, f64), h: f64| {
        let k1 = (v, acc(r));
        let k2 = (v + 0.5 * h * k1.1, acc(r + 0.5 * h * k1.0));
        let k3 = (v + 0.5 * h * k2.1, acc(r + 0.5 * h * k2.0));
        let k4 = (v + h * k3.1, acc(r + h * k3.0));
        (
            r + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    let mut state = (r0, 0.0);
    let mut t = 0.0;
    let mut changes = 0;
    // leave the initial turning point before watching for sign changes
    let mut prev = step(state, dt);
    state = prev;
    t += dt;
    loop {
        let next = step(state, dt);
        if next.1 * state.1 < 0.0 || next.1 == 0.0 {
            changes += 1;
            if changes == 2 {
                let mut s = dt * state.1.abs() / (state.1.abs() + next.1.abs());
                for _ in 0..20 {
                    let (r, v) = step(state, s);
                    s -= v / acc(r);
                }
                return t + s;
            }
        }
        prev = state;
        state = next;
        t += dt;
        assert!(t < 1e4, "no return to the turning point (last {prev:?})");
    }
}

/// Random rational-function potential in `x1..x{n}` as DSL text.
pub fn random_expression<R: Rng>(rng: &mut R, n: usize) -> String {
    fn coeff<R: Rng>(rng: &mut R) -> String {
        let num: i32 = rng.gen_range(-9..=9);
        let den: i32 = rng.gen_range(1..=4);
        format!("({num}/{den})")
    }
    fn factor<R: Rng>(rng: &mut R, n: usize, depth: u32) -> String {
        let var = format!("x{}", rng.gen_range(1..=n));
        match if depth == 0 { 0 } else { rng.gen_range(0..5) } {
            0 => format!("{var}^{}", rng.gen_range(1..=3)),
            1 => format!("({}*{var} + {})", coeff(rng), coeff(rng)),
            2 => format!("1/(1 + {var}^2)"),
            3 => format!("({})^2", term(rng, n, depth - 1)),
            _ => "norm2()".to_string(),
        }
    }
    fn term<R: Rng>(rng: &mut R, n: usize, depth: u32) -> String {
        let factors = rng.gen_range(1..=3);
        let mut out = coeff(rng);
        for _ in 0..factors {
            out.push('*');
            out.push_str(&factor(rng, n, depth));
        }
        out
    }
    let terms = rng.gen_range(1..=4);
    let body: Vec<String> = (0..terms).map(|_| term(rng, n, 2)).collect();
    format!("expr: n={n}, {}", body.join(" + "))
}

/// Central differences of a scalar function: gradient and Hessian.
pub fn finite_difference_jet(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = x.len();
    let at = |d: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s;
        }
        f(&y)
    };
    let grad = (0..n).map(|i| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h)).collect();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            hess[i][j] = if i == j {
                (at(&[(i, h)]) - 2.0 * f(x) + at(&[(i, -h)])) / (h * h)
            } else {
                (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            };
        }
    }
    (grad, hess)
}

/// Ex.1 radial profile `φ(t) = −2t² + 5/3 t³ − 1/4 t⁴`, differentiated by hand.
pub fn ex1_dphi(t: f64) -> f64 {
    -4.0 * t + 5.0 * t * t - t * t * t
}

pub const EX1: &str = "radial: -2*t^2 + (5/3)*t^3 - (1/4)*t^4";
pub const EX2: &str = "blockradial: omega=1, eps=1, U = -1/2*t1^2 + 1/2*t1^2*t2^4";
