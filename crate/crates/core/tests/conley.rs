mod common;

use lyapcenter_core::conley::{certify_bifurcation, negative_eigenspace_rep, resonance_set, ConleyOptions};
use lyapcenter_core::critical_orbits::{find_critical_orbits, spectral_data, SearchConfig};
use lyapcenter_core::symmetry::{orbit_geometry, BlockRotation, FinitePermGroup, GroupAction};
use lyapcenter_core::{parse_potential, RealMatrix, S1Representation};
use proptest::prelude::*;

fn galerkin_rep(h: &RealMatrix, lambda: f64, n0: u32) -> S1Representation {
    let g = common::galerkin_morse(&h.to_rows(), lambda, n0);
    S1Representation::new(g.trivial, g.modes)
}

fn symmetric() -> impl Strategy<Value = RealMatrix> {
    (1usize..4).prop_flat_map(|n| {
        prop::collection::vec(-4.0f64..4.0, n * n).prop_map(move |v| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    rows[i][j] = 0.5 * (v[i * n + j] + v[j * n + i]);
                }
            }
            RealMatrix::from_rows(rows)
        })
    })
}

fn trivial_geometry(n: usize) -> lyapcenter_core::symmetry::OrbitGeometry {
    orbit_geometry(&GroupAction::FinitePerm(FinitePermGroup::cyclic(1)), &vec![0.0; n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Closed-form mode counting equals the Morse index of the assembled
    /// Galerkin matrix, mode by mode.
    #[test]
    fn closed_form_matches_galerkin(h in symmetric(), lambda in 0.1f64..2.5, extra in 0u32..3) {
        let spectral = spectral_data(&h);
        let mus = spectral.all_eigenvalues();
        let top = mus.iter().fold(0.0f64, |m, v| m.max(*v));
        let n0 = (lambda * top.sqrt()).ceil() as u32 + 1 + extra;
        // stay clear of resonances, where a mode has a zero direction
        for k in 0..=n0 {
            let k2 = f64::from(k * k);
            prop_assume!(mus.iter().all(|mu| (k2 - lambda * lambda * mu).abs() > 1e-3 || *mu == 0.0));
        }
        let geometry = trivial_geometry(h.rows());
        let closed = negative_eigenspace_rep(&spectral, &geometry, lambda, n0).unwrap();
        prop_assert_eq!(closed, galerkin_rep(&h, lambda, n0));
    }

    /// Away from the resonance set the representation is constant, and it
    /// only grows with `λ`.
    #[test]
    fn representation_is_locally_constant_and_monotone(h in symmetric(), a in 0.05f64..2.0, b in 0.05f64..2.0) {
        let spectral = spectral_data(&h);
        prop_assume!(!spectral.positive_part.is_empty());
        let geometry = trivial_geometry(h.rows());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let n0 = (hi * spectral.positive_part[0]).ceil() as u32 + 2;
        let set = resonance_set(&spectral, n0).unwrap();
        prop_assume!(set.iter().all(|p| (p.lambda - lo).abs() > 1e-6 && (p.lambda - hi).abs() > 1e-6));
        let r_lo = negative_eigenspace_rep(&spectral, &geometry, lo, n0).unwrap();
        let r_hi = negative_eigenspace_rep(&spectral, &geometry, hi, n0).unwrap();
        prop_assert_eq!(r_lo.trivial_dim(), r_hi.trivial_dim());
        for k in 1..=n0 {
            prop_assert!(r_lo.multiplicity(k) <= r_hi.multiplicity(k));
        }
        let crossed = set.iter().any(|p| p.lambda > lo && p.lambda < hi);
        if !crossed {
            prop_assert_eq!(r_lo, r_hi);
        }
    }
}

#[test]
fn ex1_certification_matches_galerkin_at_every_truncation() {
    let spec = parse_potential(common::EX1).unwrap();
    let action = GroupAction::BlockRotation(BlockRotation::diagonal(2, vec![(0, 1)]).unwrap());
    let orbits = find_critical_orbits(&spec, &action, &SearchConfig::default())
        .unwrap()
        .orbits;
    let s1 = &orbits[1];
    let options = ConleyOptions {
        cross_check: true,
        ..Default::default()
    };
    let report = certify_bifurcation(s1, 1, &options).unwrap();
    assert_eq!(report.chi_minus.to_string(), "-I");
    assert_eq!(report.chi_plus.to_string(), "-I + Z1");
    assert!(report.bifurcation_certified && report.stabilized);
    assert!(report.cross_check.as_ref().unwrap().agrees);
    for n0 in [report.plan.n0, report.plan.n0 + 1, report.plan.n0 + 5] {
        for (lambda, closed) in [
            (report.plan.lambda_minus, &report.rep_minus),
            (report.plan.lambda_plus, &report.rep_plus),
        ] {
            assert_eq!(&galerkin_rep(&s1.hessian, lambda, n0), closed, "n0 = {n0}");
        }
    }
}

#[test]
fn ex2_orbit_crosses_one_double_mode() {
    let spec = parse_potential(common::EX2).unwrap();
    let action = GroupAction::BlockRotation(BlockRotation::diagonal(4, vec![(0, 1), (2, 3)]).unwrap());
    let orbits = find_critical_orbits(&spec, &action, &SearchConfig::default())
        .unwrap()
        .orbits;
    let x2 = orbits.iter().find(|o| o.geometry.orbit_dim == 1).unwrap();
    let report = certify_bifurcation(x2, 1, &ConleyOptions::default()).unwrap();
    assert_eq!(report.chi_minus.to_string(), "I");
    assert_eq!(report.chi_plus.to_string(), "I - 2*Z1");
    assert_eq!(report.crossing_multiplicity, 2);
    assert_eq!(
        galerkin_rep(&x2.hessian, report.plan.lambda_plus, report.plan.n0),
        report.rep_plus
    );
}
