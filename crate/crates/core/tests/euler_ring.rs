use lyapcenter_core::euler_ring::{
    chi_sphere, eval_expression, parse_representation, EulerRingElement, S1Representation,
};
use proptest::prelude::*;

fn element() -> impl Strategy<Value = EulerRingElement> {
    (-50i64..=50, prop::collection::btree_map(1u32..8, -50i64..=50, 0..4))
        .prop_map(|(u, t)| EulerRingElement::new(u, t))
}

fn representation() -> impl Strategy<Value = S1Representation> {
    (0u32..4, prop::collection::btree_map(1u32..6, 1u32..4, 0..3)).prop_map(|(t, m)| S1Representation::new(t, m))
}

/// Reference product from the multiplication table: `I` is the unit and
/// `Z_k ⋆ Z_m = 0`.
fn table_product(a: &EulerRingElement, b: &EulerRingElement) -> (i64, Vec<(u32, i64)>) {
    let mut torus = std::collections::BTreeMap::new();
    for (k, c) in a.torus_coeffs() {
        *torus.entry(k).or_insert(0) += c * b.unit_coeff();
    }
    for (k, c) in b.torus_coeffs() {
        *torus.entry(k).or_insert(0) += c * a.unit_coeff();
    }
    (
        a.unit_coeff() * b.unit_coeff(),
        torus.into_iter().filter(|(_, c)| *c != 0).collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn associative(a in element(), b in element(), c in element()) {
        let l = a.checked_mul(&b).unwrap().checked_mul(&c).unwrap();
        let r = a.checked_mul(&b.checked_mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn commutative(a in element(), b in element()) {
        prop_assert_eq!(a.checked_mul(&b).unwrap(), b.checked_mul(&a).unwrap());
        prop_assert_eq!(a.checked_add(&b).unwrap(), b.checked_add(&a).unwrap());
    }

    #[test]
    fn distributive(a in element(), b in element(), c in element()) {
        let l = a.checked_mul(&b.checked_add(&c).unwrap()).unwrap();
        let r = a.checked_mul(&b).unwrap().checked_add(&a.checked_mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn unit_law(a in element()) {
        prop_assert_eq!(a.checked_mul(&EulerRingElement::one()).unwrap(), a.clone());
        prop_assert_eq!(a.checked_add(&EulerRingElement::zero()).unwrap(), a);
    }

    #[test]
    fn torus_generators_annihilate(k in 1u32..50, m in 1u32..50) {
        let p = EulerRingElement::torus_generator(k).checked_mul(&EulerRingElement::torus_generator(m)).unwrap();
        prop_assert!(p.is_zero());
    }

    #[test]
    fn product_matches_table(a in element(), b in element()) {
        let p = a.checked_mul(&b).unwrap();
        let (u, t) = table_product(&a, &b);
        prop_assert_eq!(p.unit_coeff(), u);
        prop_assert_eq!(p.torus_coeffs().collect::<Vec<_>>(), t);
    }

    #[test]
    fn sphere_is_multiplicative(v in representation(), w in representation()) {
        let lhs = chi_sphere(&v.direct_sum(&w)).unwrap();
        let rhs = chi_sphere(&v).unwrap().checked_mul(&chi_sphere(&w).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn inverse_times_element_is_unit(a in element(), sign in prop::bool::ANY) {
        let unit = if sign { 1 } else { -1 };
        let x = EulerRingElement::new(unit, a.torus_coeffs());
        prop_assert_eq!(x.invert().unwrap().checked_mul(&x).unwrap(), EulerRingElement::one());
    }

    #[test]
    fn text_round_trips(a in element()) {
        prop_assert_eq!(eval_expression(&a.to_string()).unwrap(), a);
    }
}

#[test]
fn sphere_of_trivial_and_rotation_modes() {
    let rep = |s: &str| parse_representation(s).unwrap();
    assert_eq!(chi_sphere(&rep("R[1,0]")).unwrap().to_string(), "-I");
    assert_eq!(chi_sphere(&rep("R[1,0]+R[1,1]")).unwrap().to_string(), "-I + Z1");
    assert_eq!(chi_sphere(&rep("R[2,1]")).unwrap().to_string(), "I - 2*Z1");
    assert_eq!(chi_sphere(&rep("0")).unwrap(), EulerRingElement::one());
}

#[test]
fn overflow_is_reported() {
    let big = EulerRingElement::new(i64::MAX, []);
    assert!(big.checked_add(&EulerRingElement::one()).is_err());
    assert!(big.checked_mul(&EulerRingElement::new(2, [])).is_err());
}
