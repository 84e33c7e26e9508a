//! Periodic orbits near a critical orbit by multiple-constraint shooting.
//!
//! Unknowns are `(x0, v0, T)`. Equations are the periodicity residual
//! `(x(T) − x0, v(T) − v0)` together with a phase condition `⟨v0, w⟩ = 0`,
//! one pin `⟨x0 − q0, τ⟩ = 0` per orbit tangent `τ`, and an amplitude lock
//! `⟨x0 − q0, w⟩ = a`. The system is overdetermined but consistent, so each
//! iteration takes a least-squares Gauss-Newton step through an SVD.

mod integrate;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

pub use integrate::{integrate, IntegrateOptions, Method, Sample, Trajectory};

use crate::critical_orbits::CriticalOrbitRecord;
use crate::linalg::{dot, norm, symmetric_eigen};
use crate::potential::{PotentialError, PotentialSpec};
use crate::symmetry::{distance_to_orbit, GroupAction};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot seed: {0}")]
    NotEligible(String),
    #[error("trajectory became non-finite near t = {t}")]
    NonFinite { t: f64 },
    #[error("trajectory left the search bounds near t = {t}")]
    LeftBounds { t: f64 },
    #[error("Newton stagnated after {iterations} iterations at residual {residual:.3e}")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("collapse to the trivial solution: orbit stays within {max_distance:.3e} of the critical orbit (amplitude {amplitude})")]
    Collapse { max_distance: f64, amplitude: f64 },
}

/// Current guess together with the data that pins it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingState {
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    pub period: f64,
    pub amplitude: f64,
    /// Critical point `q0`.
    pub anchor: Vec<f64>,
    /// Unit direction `w` of the amplitude lock and phase condition.
    pub direction: Vec<f64>,
    /// Orthonormal orbit tangents at `q0`.
    pub tangents: Vec<Vec<f64>>,
    /// Linearized period `2π/β`.
    pub predicted_period: f64,
}

impl ShootingState {
    /// Seed `x0 = q0 + a·w`, `v0 = 0`, `T = predicted_period`.
    pub fn new(
        anchor: Vec<f64>,
        direction: Vec<f64>,
        tangents: Vec<Vec<f64>>,
        amplitude: f64,
        predicted_period: f64,
    ) -> Result<Self, OrbitError> {
        let n = anchor.len();
        if direction.len() != n || tangents.iter().any(|t| t.len() != n) {
            return Err(OrbitError::InvalidInput("seed vectors differ in length".into()));
        }
        let len = norm(&direction);
        if !(len > 0.0) {
            return Err(OrbitError::InvalidInput("seed direction is zero".into()));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(OrbitError::InvalidInput(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        if !(predicted_period > 0.0 && predicted_period.is_finite()) {
            return Err(OrbitError::InvalidInput(format!(
                "period must be positive, got {predicted_period}"
            )));
        }
        let direction: Vec<f64> = direction.iter().map(|d| d / len).collect();
        Ok(Self {
            x0: anchor.iter().zip(&direction).map(|(q, w)| q + amplitude * w).collect(),
            v0: vec![0.0; n],
            period: predicted_period,
            amplitude,
            anchor,
            direction,
            tangents,
            predicted_period,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Same pins, new amplitude; the displacement from `q0` is rescaled.
    pub fn rescaled(&self, amplitude: f64) -> Self {
        let s = amplitude / self.amplitude;
        Self {
            x0: self.anchor.iter().zip(&self.x0).map(|(q, x)| q + s * (x - q)).collect(),
            v0: self.v0.iter().map(|v| s * v).collect(),
            amplitude,
            ..self.clone()
        }
    }

    fn constraints(&self) -> Vec<f64> {
        let d: Vec<f64> = self.x0.iter().zip(&self.anchor).map(|(x, q)| x - q).collect();
        let mut c = vec![dot(&self.v0, &self.direction)];
        c.extend(self.tangents.iter().map(|t| dot(&d, t)));
        c.push(dot(&d, &self.direction) - self.amplitude);
        c
    }
}

/// Seed along a unit eigenvector of `β_{j0}²` (1-based `j0`).
pub fn seed_from_linearization(
    record: &CriticalOrbitRecord,
    j0: usize,
    amplitude: f64,
) -> Result<ShootingState, OrbitError> {
    let beta = record.spectral.beta(j0).ok_or_else(|| {
        OrbitError::NotEligible(format!(
            "j0 = {j0} but the Hessian has {} distinct positive eigenvalues",
            record.spectral.positive_part.len()
        ))
    })?;
    let eig = symmetric_eigen(&record.hessian);
    let target = beta * beta;
    let idx = (0..eig.values.len())
        .filter(|&i| (eig.values[i] - target).abs() <= record.spectral.tol.max(1e-9 * target))
        .min_by(|&a, &b| {
            (eig.values[a] - target)
                .abs()
                .total_cmp(&(eig.values[b] - target).abs())
        })
        .ok_or_else(|| OrbitError::NotEligible(format!("no eigenvector for β² = {target}")))?;
    let mut w = eig.vectors[idx].clone();
    // sign convention: the largest component is positive
    let lead = (0..w.len())
        .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
        .unwrap_or(0);
    if w[lead] < 0.0 {
        w.iter_mut().for_each(|c| *c = -*c);
    }
    ShootingState::new(
        record.geometry.point.clone(),
        w,
        record.geometry.tangent_basis.clone(),
        amplitude,
        2.0 * PI / beta,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinderOptions {
    pub steps: usize,
    pub method: Method,
    pub tol_orbit: f64,
    pub max_iter: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for FinderOptions {
    fn default() -> Self {
        Self {
            steps: 2048,
            method: Method::Verlet,
            tol_orbit: 1e-9,
            max_iter: 30,
            bounds: None,
        }
    }
}

impl FinderOptions {
    fn integrate_opts(&self, monodromy: bool, record_samples: bool) -> IntegrateOptions {
        IntegrateOptions {
            steps: self.steps,
            method: self.method,
            monodromy,
            record_samples,
            bounds: self.bounds.clone(),
        }
    }
}

/// Acceptance tests applied to a converged solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitChecks {
    pub residual_ok: bool,
    pub energy_ok: bool,
    /// `max ‖ẋ‖ > a·β/2` and the orbit reaches distance `a/2` from `Γq0`.
    pub nonstationary: bool,
    /// The orbit stays within `4a` of the critical orbit.
    pub local: bool,
    /// `|T / T_pred − 1| ≤ 1/4`.
    pub period_close: bool,
}

impl OrbitChecks {
    pub fn all_pass(&self) -> bool {
        self.residual_ok && self.energy_ok && self.nonstationary && self.local && self.period_close
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbitSolution {
    pub state: ShootingState,
    /// Euclidean norm of the periodicity residual.
    pub residual: f64,
    pub iterations: usize,
    pub minimal_period: f64,
    pub energy: f64,
    pub energy_drift: f64,
    pub max_speed: f64,
    pub max_orbit_distance: f64,
    /// Eigenvalues of the monodromy matrix as `[re, im]`, sorted.
    pub floquet_multipliers: Vec<[f64; 2]>,
    /// Multipliers within `1e-4` of `1`.
    pub unit_multipliers: usize,
    pub checks: OrbitChecks,
    #[serde(skip)]
    pub samples: Vec<Sample<f64>>,
}

impl PeriodicOrbitSolution {
    pub fn accepted(&self) -> bool {
        self.checks.all_pass()
    }

    /// Samples as CSV with header `t,x1..xn,v1..vn,E`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.state.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("v{i}")));
        header.push("E".into());
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let row: Vec<String> = std::iter::once(s.t)
                .chain(s.x.iter().copied())
                .chain(s.v.iter().copied())
                .chain(std::iter::once(s.energy))
                .map(|v| format!("{v:.15e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Periodicity residual `(x(T) − x0, v(T) − v0)` of a state.
pub fn shooting_residual(
    spec: &PotentialSpec,
    state: &ShootingState,
    options: &FinderOptions,
) -> Result<Vec<f64>, OrbitError> {
    let tr = integrate(
        spec,
        &state.x0,
        &state.v0,
        state.period,
        &options.integrate_opts(false, false),
    )?;
    Ok(periodicity(state, &tr))
}

fn periodicity(state: &ShootingState, tr: &Trajectory<f64>) -> Vec<f64> {
    tr.x.iter()
        .zip(&state.x0)
        .chain(tr.v.iter().zip(&state.v0))
        .map(|(a, b)| a - b)
        .collect()
}

fn full_residual(spec: &PotentialSpec, state: &ShootingState, options: &FinderOptions) -> Result<f64, OrbitError> {
    let mut r = shooting_residual(spec, state, options)?;
    r.extend(state.constraints());
    Ok(norm(&r))
}

/// Gauss-Newton on the pinned shooting system.
pub fn refine_orbit(
    spec: &PotentialSpec,
    action: &GroupAction,
    seed: &ShootingState,
    options: &FinderOptions,
) -> Result<PeriodicOrbitSolution, OrbitError> {
    if !(seed.amplitude > 0.0) {
        return Err(OrbitError::InvalidInput("refinement needs a positive amplitude".into()));
    }
    let n = seed.dim();
    let unknowns = 2 * n + 1;
    let mut state = seed.clone();
    let mut iterations = 0;
    let (residual, monodromy) = loop {
        let tr = integrate(
            spec,
            &state.x0,
            &state.v0,
            state.period,
            &options.integrate_opts(true, false),
        )?;
        let per = periodicity(&state, &tr);
        let cons = state.constraints();
        let res = norm(&per);
        let total = norm(&per.iter().chain(&cons).copied().collect::<Vec<_>>());
        let monodromy = tr.monodromy.expect("requested");
        if res < options.tol_orbit && norm(&cons) < options.tol_orbit {
            break (res, monodromy);
        }
        if iterations == options.max_iter {
            return Err(OrbitError::Stagnation {
                iterations,
                residual: res,
            });
        }
        iterations += 1;

        let dp = tr.d_period.expect("requested");
        let rows = 2 * n + cons.len();
        let mut jac = DMatrix::<f64>::zeros(rows, unknowns);
        for r in 0..2 * n {
            for c in 0..2 * n {
                jac[(r, c)] = monodromy[(r, c)] - if r == c { 1.0 } else { 0.0 };
            }
            jac[(r, 2 * n)] = dp[r];
        }
        let mut row = 2 * n;
        for i in 0..n {
            jac[(row, n + i)] = state.direction[i];
        }
        row += 1;
        for t in &state.tangents {
            for i in 0..n {
                jac[(row, i)] = t[i];
            }
            row += 1;
        }
        for i in 0..n {
            jac[(row, i)] = state.direction[i];
        }
        let rhs = DVector::from_iterator(rows, per.iter().chain(&cons).map(|v| -v));
        let svd = jac.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        let step = svd
            .solve(&rhs, cutoff)
            .map_err(|e| OrbitError::InvalidInput(format!("least-squares step failed: {e}")))?;

        // backtrack until the full residual decreases
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let mut trial = state.clone();
            for i in 0..n {
                trial.x0[i] += lambda * step[i];
                trial.v0[i] += lambda * step[n + i];
            }
            trial.period += lambda * step[2 * n];
            if trial.period > 0.0 {
                if let Ok(r) = full_residual(spec, &trial, options) {
                    if r < total {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(s) => state = s,
            None => {
                return Err(OrbitError::Stagnation {
                    iterations,
                    residual: res,
                })
            }
        }
    };
    finish(spec, action, state, residual, iterations, &monodromy, options)
}

fn finish(
    spec: &PotentialSpec,
    action: &GroupAction,
    state: ShootingState,
    residual: f64,
    iterations: usize,
    monodromy: &crate::linalg::Matrix<f64>,
    options: &FinderOptions,
) -> Result<PeriodicOrbitSolution, OrbitError> {
    let n = state.dim();
    let tr = integrate(
        spec,
        &state.x0,
        &state.v0,
        state.period,
        &options.integrate_opts(false, true),
    )?;
    let samples = tr.samples;
    let e0 = samples[0].energy;
    let energy_drift = samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max);
    let max_speed = samples.iter().map(|s| norm(&s.v)).fold(0.0, f64::max);
    let max_orbit_distance = samples
        .iter()
        .map(|s| distance_to_orbit(action, &state.anchor, &s.x))
        .fold(0.0, f64::max);
    let a = state.amplitude;
    if max_orbit_distance < a / 10.0 {
        return Err(OrbitError::Collapse {
            max_distance: max_orbit_distance,
            amplitude: a,
        });
    }
    let minimal_period = minimal_period(spec, &state, options)?;

    let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| monodromy[(r, c)]);
    let mut floquet_multipliers: Vec<[f64; 2]> = m.complex_eigenvalues().iter().map(|z| [z.re, z.im]).collect();
    floquet_multipliers.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    let unit_multipliers = floquet_multipliers
        .iter()
        .filter(|z| (z[0] - 1.0).hypot(z[1]) < 1e-4)
        .count();

    let beta = 2.0 * PI / state.predicted_period;
    let checks = OrbitChecks {
        residual_ok: residual < options.tol_orbit,
        energy_ok: energy_drift < 1e-6 * (1.0 + e0.abs()),
        nonstationary: max_speed > a * beta / 2.0 && max_orbit_distance >= a / 2.0,
        local: max_orbit_distance <= 4.0 * a,
        period_close: (state.period / state.predicted_period - 1.0).abs() <= 0.25,
    };
    Ok(PeriodicOrbitSolution {
        state,
        residual,
        iterations,
        minimal_period,
        energy: e0,
        energy_drift,
        max_speed,
        max_orbit_distance,
        floquet_multipliers,
        unit_multipliers,
        checks,
        samples,
    })
}

/// Halve the period while the half-period map (same step size) still
/// closes up.
fn minimal_period(spec: &PotentialSpec, state: &ShootingState, options: &FinderOptions) -> Result<f64, OrbitError> {
    let scale = 1.0 + norm(&state.x0) + norm(&state.v0);
    let mut period = state.period;
    let mut steps = options.steps;
    while steps % 2 == 0 && steps / 2 >= 32 {
        let opts = IntegrateOptions {
            steps: steps / 2,
            ..options.integrate_opts(false, false)
        };
        let tr = integrate(spec, &state.x0, &state.v0, period / 2.0, &opts)?;
        let r = norm(&periodicity(state, &tr));
        if r < 1e-6 * scale {
            period /= 2.0;
            steps /= 2;
        } else {
            break;
        }
    }
    Ok(period)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub amplitude: f64,
    pub solution: Option<PeriodicOrbitSolution>,
    pub error: Option<String>,
}

/// Refine at each amplitude of a strictly decreasing list, warm-starting
/// from the last converged solution. Failures are recorded per amplitude.
pub fn amplitude_sweep(
    spec: &PotentialSpec,
    action: &GroupAction,
    record: &CriticalOrbitRecord,
    j0: usize,
    amplitudes: &[f64],
    options: &FinderOptions,
) -> Result<Vec<SweepEntry>, OrbitError> {
    if amplitudes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(OrbitError::InvalidInput("amplitudes must be positive".into()));
    }
    if amplitudes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(OrbitError::InvalidInput(
            "amplitudes must be strictly decreasing".into(),
        ));
    }
    let mut out = Vec::with_capacity(amplitudes.len());
    let mut last: Option<ShootingState> = None;
    for &a in amplitudes {
        let seed = match &last {
            Some(s) => s.rescaled(a),
            None => seed_from_linearization(record, j0, a)?,
        };
        match refine_orbit(spec, action, &seed, options) {
            Ok(sol) => {
                last = Some(sol.state.clone());
                out.push(SweepEntry {
                    amplitude: a,
                    solution: Some(sol),
                    error: None,
                });
            }
            Err(e) => out.push(SweepEntry {
                amplitude: a,
                solution: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical_orbits::{find_critical_orbits, SearchConfig};
    use crate::potential::parse_potential;
    use crate::symmetry::BlockRotation;

    const EX1: &str = "radial: -2*t^2 + (5/3)*t^3 - (1/4)*t^4";

    fn ex1() -> (PotentialSpec, GroupAction, Vec<CriticalOrbitRecord>) {
        let spec = parse_potential(EX1).unwrap();
        let action = GroupAction::BlockRotation(BlockRotation::diagonal(2, vec![(0, 1)]).unwrap());
        let found = find_critical_orbits(&spec, &action, &SearchConfig::default()).unwrap();
        (spec, action, found.orbits)
    }

    #[test]
    fn seed_uses_radial_direction() {
        let (_, _, orbits) = ex1();
        let s1 = &orbits[1];
        let seed = seed_from_linearization(s1, 1, 0.01).unwrap();
        assert!((seed.x0[0] - 1.01).abs() < 1e-12 && seed.x0[1].abs() < 1e-12);
        assert!((seed.period - 2.0 * PI / 12f64.sqrt()).abs() < 1e-12);
        assert!(seed_from_linearization(&orbits[2], 1, 0.01).is_err());
        assert!(seed_from_linearization(s1, 2, 0.01).is_err());
    }

    #[test]
    fn small_amplitude_orbit_near_s1() {
        let (spec, action, orbits) = ex1();
        let seed = seed_from_linearization(&orbits[1], 1, 0.01).unwrap();
        let sol = refine_orbit(&spec, &action, &seed, &FinderOptions::default()).unwrap();
        assert!(sol.accepted(), "{:?}", sol.checks);
        assert!(sol.residual < 1e-9);
        let t_lin = 2.0 * PI / 12f64.sqrt();
        assert!((sol.state.period / t_lin - 1.0).abs() < 0.01);
        assert!((sol.minimal_period - sol.state.period).abs() < 1e-12);
        assert!(sol.unit_multipliers >= 2, "{:?}", sol.floquet_multipliers);
        assert!(sol.energy_drift < 1e-6);
    }

    #[test]
    fn harmonic_oscillator_period_and_subharmonic() {
        let spec = parse_potential("radial: 0.5*t").unwrap();
        let action = GroupAction::FinitePerm(crate::symmetry::FinitePermGroup::cyclic(1));
        let seed = ShootingState::new(vec![0.0], vec![1.0], vec![], 0.3, 2.0 * PI).unwrap();
        let sol = refine_orbit(&spec, &action, &seed, &FinderOptions::default()).unwrap();
        // Verlet frequency shift is O(h²), RK4 is O(h⁴)
        assert!((sol.state.period - 2.0 * PI).abs() < 1e-4);
        assert!(sol.accepted());
        let rk4 = FinderOptions {
            method: Method::Rk4,
            ..Default::default()
        };
        let sol = refine_orbit(&spec, &action, &seed, &rk4).unwrap();
        assert!((sol.state.period - 2.0 * PI).abs() < 1e-8);
        // seeded at twice the period, the minimal period is detected
        let seed2 = ShootingState::new(vec![0.0], vec![1.0], vec![], 0.3, 4.0 * PI).unwrap();
        let opts = FinderOptions {
            steps: 4096,
            ..Default::default()
        };
        let sol2 = refine_orbit(&spec, &action, &seed2, &opts).unwrap();
        assert!((sol2.minimal_period - sol2.state.period / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rotated_solution_keeps_residual() {
        let (spec, action, orbits) = ex1();
        let seed = seed_from_linearization(&orbits[1], 1, 0.05).unwrap();
        let sol = refine_orbit(&spec, &action, &seed, &FinderOptions::default()).unwrap();
        let GroupAction::BlockRotation(b) = &action else {
            unreachable!()
        };
        let mut rotated = sol.state.clone();
        rotated.x0 = b.rotate(&[0.7], &sol.state.x0);
        rotated.v0 = b.rotate(&[0.7], &sol.state.v0);
        let r0 = norm(&shooting_residual(&spec, &sol.state, &FinderOptions::default()).unwrap());
        let r1 = norm(&shooting_residual(&spec, &rotated, &FinderOptions::default()).unwrap());
        assert!((r0 - r1).abs() < 1e-10);
    }

    #[test]
    fn saddle_seed_is_not_accepted() {
        let (spec, action, orbits) = ex1();
        let s2 = &orbits[2];
        for sign in [1.0, -1.0] {
            let seed = ShootingState::new(
                s2.geometry.point.clone(),
                vec![sign, 0.0],
                s2.geometry.tangent_basis.clone(),
                0.01,
                2.0 * PI / 192f64.sqrt(),
            )
            .unwrap();
            if let Ok(sol) = refine_orbit(&spec, &action, &seed, &FinderOptions::default()) {
                assert!(!sol.accepted());
            }
        }
    }

    #[test]
    fn sweep_warm_starts_and_exports() {
        let (spec, action, orbits) = ex1();
        let sweep = amplitude_sweep(
            &spec,
            &action,
            &orbits[1],
            1,
            &[0.05, 0.03, 0.01],
            &FinderOptions::default(),
        )
        .unwrap();
        assert_eq!(sweep.len(), 3);
        let periods: Vec<f64> = sweep
            .iter()
            .map(|e| e.solution.as_ref().unwrap().state.period)
            .collect();
        assert!(periods.windows(2).all(|w| w[0] != w[1]));
        let mut buf = Vec::new();
        sweep[0].solution.as_ref().unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x1,x2,v1,v2,E\n"));
        assert_eq!(text.lines().count(), 2048 + 2);
        assert!(
            amplitude_sweep(&spec, &action, &orbits[1], 1, &[], &FinderOptions::default())
                .unwrap()
                .is_empty()
        );
        assert!(amplitude_sweep(&spec, &action, &orbits[1], 1, &[0.01, 0.02], &FinderOptions::default()).is_err());
    }

    #[test]
    fn zero_amplitude_seed_is_the_critical_point() {
        let (spec, _, orbits) = ex1();
        let seed = seed_from_linearization(&orbits[1], 1, 0.0).unwrap();
        assert_eq!(seed.x0, orbits[1].geometry.point);
        let r = shooting_residual(&spec, &seed, &FinderOptions::default()).unwrap();
        assert!(norm(&r) < 1e-14);
    }
}
