mod common;

use std::f64::consts::PI;

use lyapcenter_core::critical_orbits::{find_critical_orbits, spectral_data, CriticalOrbitRecord, SearchConfig};
use lyapcenter_core::linalg::norm;
use lyapcenter_core::orbit_finder::{
    amplitude_sweep, refine_orbit, seed_from_linearization, shooting_residual, FinderOptions, Method, ShootingState,
};
use lyapcenter_core::symmetry::{BlockRotation, GroupAction};
use lyapcenter_core::{parse_potential, PotentialSpec};
use proptest::prelude::*;

fn ex1() -> (PotentialSpec, GroupAction, Vec<CriticalOrbitRecord>) {
    let spec = parse_potential(common::EX1).unwrap();
    let action = GroupAction::BlockRotation(BlockRotation::diagonal(2, vec![(0, 1)]).unwrap());
    let orbits = find_critical_orbits(&spec, &action, &SearchConfig::default())
        .unwrap()
        .orbits;
    (spec, action, orbits)
}

fn ex2() -> (PotentialSpec, GroupAction, Vec<CriticalOrbitRecord>) {
    let spec = parse_potential(common::EX2).unwrap();
    let action = GroupAction::BlockRotation(BlockRotation::diagonal(4, vec![(0, 1), (2, 3)]).unwrap());
    let orbits = find_critical_orbits(&spec, &action, &SearchConfig::default())
        .unwrap()
        .orbits;
    (spec, action, orbits)
}

#[test]
fn radial_oracle_reproduces_linear_period() {
    // tiny release amplitude: the period tends to 2π/√12
    let t = common::radial_period(common::ex1_dphi, 1.0 + 1e-5, 1e-4);
    assert!((t - 2.0 * PI / 12f64.sqrt()).abs() < 1e-6, "{t}");
}

#[test]
fn ex1_sweep_agrees_with_radial_oracle() {
    let (spec, action, orbits) = ex1();
    let options = FinderOptions {
        steps: 8192,
        ..Default::default()
    };
    let amplitudes = [1e-1, 3e-2, 1e-2, 3e-3];
    let sweep = amplitude_sweep(&spec, &action, &orbits[1], 1, &amplitudes, &options).unwrap();
    let t_lin = 2.0 * PI / 12f64.sqrt();
    let mut last_gap = f64::INFINITY;
    for entry in &sweep {
        let sol = entry.solution.as_ref().expect("converged");
        assert!(sol.accepted(), "{:?}", sol.checks);
        assert!(sol.residual < 1e-9 && sol.energy_drift < 1e-6);
        // the orbit is the radial oscillation released from the amplitude lock
        assert!(sol.state.x0[1].abs() < 1e-9 && sol.state.v0.iter().all(|v| v.abs() < 1e-9));
        let oracle = common::radial_period(common::ex1_dphi, sol.state.x0[0], 1e-4);
        assert!(
            (sol.state.period - oracle).abs() < 1e-6,
            "a = {}: {} vs {oracle}",
            entry.amplitude,
            sol.state.period
        );
        let gap = (sol.state.period - t_lin).abs();
        assert!(gap < last_gap);
        last_gap = gap;
        assert!(sol.unit_multipliers >= 2);
    }
    assert!(last_gap < 1e-3);
}

#[test]
fn ex2_sweep_tends_to_two_pi() {
    let (spec, action, orbits) = ex2();
    let x2 = orbits.iter().find(|o| o.geometry.orbit_dim == 1).unwrap();
    let seed = seed_from_linearization(x2, 1, 1e-2).unwrap();
    assert!(seed.direction[0].abs() < 1e-12 && seed.direction[1].abs() < 1e-12);
    assert!((seed.period - 2.0 * PI).abs() < 1e-12);
    // U is harmonic along w up to eighth order, so the only visible period
    // shift is the integrator's; RK4 keeps it below 1e-8
    let options = FinderOptions {
        method: Method::Rk4,
        ..Default::default()
    };
    let sweep = amplitude_sweep(&spec, &action, x2, 1, &[1e-1, 3e-2, 1e-2], &options).unwrap();
    let gaps: Vec<f64> = sweep
        .iter()
        .map(|e| {
            let sol = e.solution.as_ref().expect("converged");
            assert!(sol.accepted(), "{:?}", sol.checks);
            (sol.state.period - 2.0 * PI).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!(gaps[2] < 1e-8, "{gaps:?}");
}

#[test]
fn saddle_orbit_never_yields_an_accepted_solution() {
    let (spec, action, orbits) = ex1();
    let s2 = &orbits[2];
    assert!(s2.spectral.positive_part.is_empty());
    assert!(seed_from_linearization(s2, 1, 1e-2).is_err());
    let mu = s2.spectral.all_eigenvalues()[0];
    for a in [1e-1, 1e-2, 1e-3] {
        for sign in [1.0, -1.0] {
            let seed = ShootingState::new(
                s2.geometry.point.clone(),
                vec![sign, 0.0],
                s2.geometry.tangent_basis.clone(),
                a,
                2.0 * PI / mu.abs().sqrt(),
            )
            .unwrap();
            if let Ok(sol) = refine_orbit(&spec, &action, &seed, &FinderOptions::default()) {
                assert!(!sol.accepted(), "a = {a}, sign {sign}");
            }
        }
    }
}

#[test]
fn spectral_data_is_rotation_covariant() {
    let (spec, action, orbits) = ex1();
    let GroupAction::BlockRotation(b) = &action else {
        unreachable!()
    };
    for o in &orbits {
        for angle in [0.3, 1.7, -2.4] {
            let q = b.rotate(&[angle], o.point());
            let h = spec.eval_jet2(&q).unwrap().hessian;
            let s = spectral_data(&h);
            assert_eq!(s.kernel_dim, o.spectral.kernel_dim);
            for (x, y) in s.all_eigenvalues().iter().zip(o.spectral.all_eigenvalues()) {
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotated_solution_is_a_solution(angle in -PI..PI) {
        let (spec, action, orbits) = ex1();
        let options = FinderOptions::default();
        let sol = refine_orbit(&spec, &action, &seed_from_linearization(&orbits[1], 1, 3e-2).unwrap(), &options).unwrap();
        let GroupAction::BlockRotation(b) = &action else { unreachable!() };
        let mut rotated = sol.state.clone();
        rotated.x0 = b.rotate(&[angle], &sol.state.x0);
        rotated.v0 = b.rotate(&[angle], &sol.state.v0);
        let r = norm(&shooting_residual(&spec, &rotated, &options).unwrap());
        prop_assert!((r - sol.residual).abs() < 1e-10);
        prop_assert!(sol.energy_drift < 1e-6 * (1.0 + sol.energy.abs()));
    }
}
