//! Canonical printer. Output re-parses to an equal [`PotentialSpec`].

use std::fmt::{self, Write};

use num_traits::{One, Signed, Zero};

use crate::poly::Poly;
use crate::scalar::Rational;

use super::ast::Expr;
use super::PotentialSpec;

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("({}/{})", r.numer(), r.denom())
    }
}

/// Non-negative literal as a terminating decimal (literals always come
/// from decimal text, so the expansion terminates).
fn fmt_literal(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut pow = 1i128;
    for scale in 1..=30usize {
        pow *= 10;
        let scaled = r * Rational::from_integer(pow);
        if scaled.is_integer() {
            let digits = format!("{:0>width$}", scaled.to_integer(), width = scale + 1);
            let (int, frac) = digits.split_at(digits.len() - scale);
            return format!("{int}.{}", frac.trim_end_matches('0'));
        }
    }
    format!("({}/{})", r.numer(), r.denom())
}

fn write_monomial(out: &mut String, exps: &[u32], names: &dyn Fn(usize) -> String) -> bool {
    let mut first = true;
    for (i, &k) in exps.iter().enumerate() {
        if k == 0 {
            continue;
        }
        if !first {
            out.push('*');
        }
        first = false;
        out.push_str(&names(i));
        if k > 1 {
            write!(out, "^{k}").unwrap();
        }
    }
    !first
}

/// Polynomial in ascending total degree, ties broken lexicographically.
pub(crate) fn fmt_poly(p: &Poly, names: &dyn Fn(usize) -> String) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(&Vec<u32>, &Rational)> = p.terms().collect();
    terms.sort_by_key(|(e, _)| (e.iter().sum::<u32>(), e.iter().rev().cloned().collect::<Vec<_>>()));
    let mut out = String::new();
    for (idx, (e, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut mono = String::new();
        let has_vars = write_monomial(&mut mono, e, names);
        if !has_vars {
            out.push_str(&fmt_rational(&mag));
        } else if mag.is_one() {
            out.push_str(&mono);
        } else {
            write!(out, "{}*{}", fmt_rational(&mag), mono).unwrap();
        }
    }
    out
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

pub(crate) fn fmt_expr(e: &Expr, names: &dyn Fn(usize) -> String) -> String {
    let wrap = |child: &Expr, min: u8| {
        let s = fmt_expr(child, names);
        if prec(child) < min {
            format!("({s})")
        } else {
            s
        }
    };
    match e {
        Expr::Num(r) => fmt_literal(r),
        Expr::Var(i) => names(*i),
        Expr::Param(p) => p.clone(),
        Expr::Norm2 => "norm2()".into(),
        Expr::Neg(a) => format!("-{}", wrap(a, 3)),
        Expr::Add(a, b) => format!("{} + {}", wrap(a, 1), wrap(b, 2)),
        Expr::Sub(a, b) => format!("{} - {}", wrap(a, 1), wrap(b, 2)),
        Expr::Mul(a, b) => format!("{}*{}", wrap(a, 2), wrap(b, 3)),
        Expr::Div(a, b) => format!("{}/{}", wrap(a, 2), wrap(b, 3)),
        Expr::Pow(a, k) => format!("{}^{k}", wrap(a, 5)),
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Radial(r) => {
                let p = Poly::univariate(r.coeffs());
                write!(f, "radial: {}", fmt_poly(&p, &|_| "t".to_string()))
            }
            PotentialSpec::BlockRadial(b) => {
                let dims: Vec<String> = b.block_dims().iter().map(|d| d.to_string()).collect();
                write!(f, "blockradial: dims=[{}]", dims.join(","))?;
                if let Some(w) = b.omega() {
                    write!(f, ", omega={}", fmt_signed(w))?;
                }
                write!(
                    f,
                    ", eps={}, U = {}",
                    fmt_signed(b.eps()),
                    fmt_poly(b.poly(), &|i| format!("t{}", i + 1))
                )
            }
            PotentialSpec::Expression(e) => {
                write!(f, "expr: ")?;
                if let Some(n) = e.declared_dim() {
                    write!(f, "n={n}, ")?;
                }
                for (name, v) in e.params() {
                    write!(f, "{name}={}, ", fmt_signed(v))?;
                }
                write!(f, "{}", fmt_expr(e.expr(), &|i| format!("x{}", i + 1)))
            }
        }
    }
}

fn fmt_signed(r: &Rational) -> String {
    if r.is_negative() {
        format!("-{}", fmt_rational(&-r))
    } else if r.is_zero() {
        "0".into()
    } else {
        fmt_rational(r)
    }
}
