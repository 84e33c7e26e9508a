//! The Euler ring `U(S¹)` and its induced images in `U(G)`.
//!
//! `U(S¹)` is free abelian on `I = χ(S¹/S¹⁺)` and `χ(S¹/Z_k⁺)` for `k ≥ 1`.
//! Products of two torus generators vanish, so an element `(a₀, A)`
//! multiplies as `(a₀, A)(b₀, B) = (a₀b₀, a₀B + b₀A)`.

mod text;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use text::{eval_expression, parse_element, parse_representation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EulerError {
    #[error("integer overflow in Euler ring arithmetic")]
    Overflow,
    #[error("element {0} is not invertible (unit coefficient must be ±1)")]
    NotInvertible(String),
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("class labels collide: `{0}` is used for two different classes")]
    LabelCollision(String),
}

/// Real S¹-representation `R[k₀,0] ⊕ R[k₁,m₁] ⊕ …`: `k₀` trivial
/// dimensions plus `k_i` copies of the 2-dimensional representation on
/// which `z` acts as `z^{m_i}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct S1Representation {
    trivial_dim: u32,
    modes: BTreeMap<u32, u32>,
}

impl S1Representation {
    pub fn new(trivial_dim: u32, modes: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut rep = Self {
            trivial_dim,
            modes: BTreeMap::new(),
        };
        for (m, k) in modes {
            rep.add_mode(m, k);
        }
        rep
    }

    pub fn trivial(dim: u32) -> Self {
        Self::new(dim, [])
    }

    /// Add `k` copies of `R[1,m]`; `m = 0` adds to the trivial part.
    pub fn add_mode(&mut self, m: u32, k: u32) {
        if m == 0 {
            self.trivial_dim += k;
        } else if k > 0 {
            *self.modes.entry(m).or_insert(0) += k;
        }
    }

    pub fn trivial_dim(&self) -> u32 {
        self.trivial_dim
    }

    /// Multiplicity of mode `m ≥ 1` (0 when absent).
    pub fn multiplicity(&self, m: u32) -> u32 {
        self.modes.get(&m).copied().unwrap_or(0)
    }

    /// `(m, k)` pairs with strictly increasing `m` and positive `k`.
    pub fn modes(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.modes.iter().map(|(&m, &k)| (m, k))
    }

    /// Real dimension.
    pub fn dim(&self) -> u64 {
        u64::from(self.trivial_dim) + self.modes.values().map(|&k| 2 * u64::from(k)).sum::<u64>()
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.trivial_dim += other.trivial_dim;
        for (m, k) in other.modes() {
            out.add_mode(m, k);
        }
        out
    }
}

impl fmt::Display for S1Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.trivial_dim > 0 {
            parts.push(format!("R[{},0]", self.trivial_dim));
        }
        for (m, k) in self.modes() {
            parts.push(format!("R[{k},{m}]"));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

impl Serialize for S1Representation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `a₀·I + Σ a_k·χ(S¹/Z_k⁺)`. The zero element is written `0` (Θ).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EulerRingElement {
    unit: i64,
    torus: BTreeMap<u32, i64>,
}

impl EulerRingElement {
    pub fn new(unit: i64, torus: impl IntoIterator<Item = (u32, i64)>) -> Self {
        let mut torus_map = BTreeMap::new();
        for (k, c) in torus {
            assert!(k >= 1, "torus generators are indexed from 1");
            if c != 0 {
                torus_map.insert(k, c);
            }
        }
        Self { unit, torus: torus_map }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::new(1, [])
    }

    /// `χ(S¹/Z_k⁺)`.
    pub fn torus_generator(k: u32) -> Self {
        Self::new(0, [(k, 1)])
    }

    pub fn unit_coeff(&self) -> i64 {
        self.unit
    }

    pub fn torus_coeff(&self, k: u32) -> i64 {
        self.torus.get(&k).copied().unwrap_or(0)
    }

    pub fn torus_coeffs(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.torus.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.unit == 0 && self.torus.is_empty()
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, EulerError> {
        let mut out = self.clone();
        out.unit = out.unit.checked_add(other.unit).ok_or(EulerError::Overflow)?;
        for (k, c) in other.torus_coeffs() {
            let v = out.torus_coeff(k).checked_add(c).ok_or(EulerError::Overflow)?;
            out.set_torus(k, v);
        }
        Ok(out)
    }

    pub fn checked_neg(&self) -> Result<Self, EulerError> {
        self.checked_scale(-1)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, EulerError> {
        self.checked_add(&other.checked_neg()?)
    }

    pub fn checked_scale(&self, s: i64) -> Result<Self, EulerError> {
        let mut torus = BTreeMap::new();
        for (k, c) in self.torus_coeffs() {
            let v = c.checked_mul(s).ok_or(EulerError::Overflow)?;
            if v != 0 {
                torus.insert(k, v);
            }
        }
        Ok(Self {
            unit: self.unit.checked_mul(s).ok_or(EulerError::Overflow)?,
            torus,
        })
    }

    /// Ring product; torus generators multiply to zero.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, EulerError> {
        let unit = self.unit.checked_mul(other.unit).ok_or(EulerError::Overflow)?;
        let torus = other
            .checked_torus_scale(self.unit)?
            .checked_add(&self.checked_torus_scale(other.unit)?)?;
        Ok(Self { unit, ..torus })
    }

    fn checked_torus_scale(&self, s: i64) -> Result<Self, EulerError> {
        let mut t = self.checked_scale(s)?;
        t.unit = 0;
        Ok(t)
    }

    /// Inverse of `(±1, A)`, which is `(±1, −A)`.
    pub fn invert(&self) -> Result<Self, EulerError> {
        if self.unit != 1 && self.unit != -1 {
            return Err(EulerError::NotInvertible(self.to_string()));
        }
        let mut out = self.checked_neg()?;
        out.unit = self.unit;
        Ok(out)
    }

    fn set_torus(&mut self, k: u32, v: i64) {
        if v == 0 {
            self.torus.remove(&k);
        } else {
            self.torus.insert(k, v);
        }
    }
}

impl fmt::Display for EulerRingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = std::iter::once((String::from("I"), self.unit))
            .chain(self.torus_coeffs().map(|(k, c)| (format!("Z{k}"), c)))
            .filter(|(_, c)| *c != 0);
        write_signed_terms(f, terms)
    }
}

fn write_signed_terms(f: &mut fmt::Formatter<'_>, terms: impl Iterator<Item = (String, i64)>) -> fmt::Result {
    let mut first = true;
    for (name, c) in terms {
        let mag = c.unsigned_abs();
        let sign = match (first, c < 0) {
            (true, true) => "-",
            (true, false) => "",
            (false, true) => " - ",
            (false, false) => " + ",
        };
        if mag == 1 {
            write!(f, "{sign}{name}")?;
        } else {
            write!(f, "{sign}{mag}*{name}")?;
        }
        first = false;
    }
    if first {
        f.write_str("0")?;
    }
    Ok(())
}

impl Serialize for EulerRingElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `χ(S^V) = (−1)^{k₀}·(I − Σ k_i·χ(S¹/Z_{m_i}⁺))`.
pub fn chi_sphere(rep: &S1Representation) -> Result<EulerRingElement, EulerError> {
    let mut torus = BTreeMap::new();
    for (m, k) in rep.modes() {
        torus.insert(m, -i64::from(k));
    }
    let base = EulerRingElement { unit: 1, torus };
    base.checked_scale(if rep.trivial_dim() % 2 == 0 { 1 } else { -1 })
}

/// Element of `U(G)` written over opaque conjugacy-class labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct UGElement {
    coeffs: BTreeMap<String, i64>,
}

impl UGElement {
    pub fn new(coeffs: impl IntoIterator<Item = (String, i64)>) -> Self {
        Self {
            coeffs: coeffs.into_iter().filter(|(_, c)| *c != 0).collect(),
        }
    }

    pub fn coeff(&self, label: &str) -> i64 {
        self.coeffs.get(label).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, i64)> {
        self.coeffs.iter().map(|(l, &c)| (l.as_str(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, EulerError> {
        let mut out = self.coeffs.clone();
        for (l, c) in other.coeffs() {
            let v = out
                .get(l)
                .copied()
                .unwrap_or(0)
                .checked_add(c)
                .ok_or(EulerError::Overflow)?;
            if v == 0 {
                out.remove(l);
            } else {
                out.insert(l.to_string(), v);
            }
        }
        Ok(Self { coeffs: out })
    }

    pub fn checked_scale(&self, s: i64) -> Result<Self, EulerError> {
        let mut out = BTreeMap::new();
        for (l, c) in self.coeffs() {
            let v = c.checked_mul(s).ok_or(EulerError::Overflow)?;
            if v != 0 {
                out.insert(l.to_string(), v);
            }
        }
        Ok(Self { coeffs: out })
    }
}

impl fmt::Display for UGElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_signed_terms(f, self.coeffs.iter().map(|(l, &c)| (l.clone(), c)))
    }
}

/// Labels of `G`-conjugacy classes for the `S¹`-classes: `I ↦ unit`,
/// `χ(S¹/Z_k⁺) ↦ torus[k]` (default `"(Zk)"`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabeling {
    pub unit: String,
    pub torus: BTreeMap<u32, String>,
}

impl Default for ClassLabeling {
    fn default() -> Self {
        Self {
            unit: "(H)".into(),
            torus: BTreeMap::new(),
        }
    }
}

impl ClassLabeling {
    pub fn torus_label(&self, k: u32) -> String {
        self.torus.get(&k).cloned().unwrap_or_else(|| format!("(Z{k})"))
    }
}

/// Transport along `G⁺ ∧_H (−)`: for an admissible pair each coefficient
/// moves unchanged to the class of the same subgroup in `G`.
pub fn induce_to_g(x: &EulerRingElement, labels: &ClassLabeling) -> Result<UGElement, EulerError> {
    let mut coeffs = BTreeMap::new();
    let entries = std::iter::once((labels.unit.clone(), x.unit_coeff()))
        .chain(x.torus_coeffs().map(|(k, c)| (labels.torus_label(k), c)))
        .filter(|(_, c)| *c != 0);
    for (label, c) in entries {
        if coeffs.insert(label.clone(), c).is_some() {
            return Err(EulerError::LabelCollision(label));
        }
    }
    Ok(UGElement { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(k: u32) -> EulerRingElement {
        EulerRingElement::torus_generator(k)
    }

    #[test]
    fn torus_generators_annihilate() {
        assert!(z(2).checked_mul(&z(3)).unwrap().is_zero());
        assert!(z(4).checked_mul(&z(4)).unwrap().is_zero());
    }

    #[test]
    fn unit_law_and_inverse_example() {
        let x = EulerRingElement::new(-1, [(3, 2), (7, -5)]);
        assert_eq!(EulerRingElement::one().checked_mul(&x).unwrap(), x);
        let a = EulerRingElement::new(1, [(3, -2)]);
        let b = EulerRingElement::new(1, [(3, 2)]);
        assert_eq!(a.checked_mul(&b).unwrap(), EulerRingElement::one());
        let c = EulerRingElement::new(-1, [(3, 2)]);
        assert_eq!(c.invert().unwrap(), EulerRingElement::new(-1, [(3, -2)]));
        assert_eq!(c.invert().unwrap().checked_mul(&c).unwrap(), EulerRingElement::one());
        assert!(matches!(
            EulerRingElement::new(2, []).invert(),
            Err(EulerError::NotInvertible(_))
        ));
    }

    #[test]
    fn sphere_characteristics() {
        assert_eq!(chi_sphere(&S1Representation::trivial(1)).unwrap().to_string(), "-I");
        assert_eq!(
            chi_sphere(&S1Representation::new(0, [(1, 3)])).unwrap().to_string(),
            "I - 3*Z1"
        );
        assert_eq!(
            chi_sphere(&S1Representation::new(1, [(3, 2)])).unwrap().to_string(),
            "-I + 2*Z3"
        );
        assert_eq!(
            chi_sphere(&S1Representation::default()).unwrap(),
            EulerRingElement::one()
        );
    }

    #[test]
    fn overflow_is_an_error() {
        let big = EulerRingElement::new(i64::MAX, [(1, 1)]);
        assert_eq!(big.checked_add(&EulerRingElement::one()), Err(EulerError::Overflow));
        assert_eq!(big.checked_mul(&big), Err(EulerError::Overflow));
    }

    #[test]
    fn induction_relabels() {
        let x = EulerRingElement::new(-1, [(1, 1)]);
        let g = induce_to_g(&x, &ClassLabeling::default()).unwrap();
        assert_eq!(g.coeff("(H)"), -1);
        assert_eq!(g.coeff("(Z1)"), 1);
        assert_eq!(g.to_string(), "-(H) + (Z1)");
        assert!(induce_to_g(&EulerRingElement::zero(), &ClassLabeling::default())
            .unwrap()
            .is_zero());
        let clash = ClassLabeling {
            unit: "(Z1)".into(),
            torus: BTreeMap::new(),
        };
        assert!(matches!(induce_to_g(&x, &clash), Err(EulerError::LabelCollision(_))));
    }

    #[test]
    fn representation_text() {
        let r = S1Representation::new(1, [(3, 2), (1, 1)]);
        assert_eq!(r.to_string(), "R[1,0]+R[1,1]+R[2,3]");
        assert_eq!(r.dim(), 7);
        assert_eq!(S1Representation::default().to_string(), "0");
    }
}
