//! Bifurcation certification through the truncated Conley index.
//!
//! For the family `ẍ = −λ²∇U(x)` of 2π-periodic problems the Hessian of the
//! action functional at the stationary orbit is block diagonal in Fourier
//! modes, with mode-`k` block `Λ(k;λ) = (k²·Id − λ²∇²U(q₀))/(k²+1)`. Its
//! negative eigenspace up to mode `n₀` is an S¹-representation whose sphere
//! has Euler characteristic `χ(S^V)`; a change of `χ` across a window
//! `[λ₋, λ₊]` around `1/β_{j₀}` certifies bifurcation.

use serde::Serialize;
use thiserror::Error;

use crate::critical_orbits::{CriticalOrbitRecord, SpectralData};
use crate::euler_ring::{
    chi_sphere, induce_to_g, ClassLabeling, EulerError, EulerRingElement, S1Representation, UGElement,
};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::symmetry::{admissible_gamma_cross_s1, AdmissibilityVerdict, OrbitGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConleyError {
    #[error("no positive eigenvalues")]
    NoPositiveEigenvalues,
    #[error("j0 = {j0} out of range 1..={m}")]
    InvalidJ0 { j0: usize, m: usize },
    #[error("hypotheses fail: {}", .0.join(", "))]
    HypothesesFail(Vec<String>),
    #[error("resonance: β_{i}/β_{j0} = {ratio} is within {tol} of an integer")]
    Resonant { j0: usize, i: usize, ratio: f64, tol: f64 },
    #[error("λ = {lambda} is on resonance: mode {k} has eigenvalue {value:e}")]
    OnResonance { lambda: f64, k: u32, value: f64 },
    #[error("could not isolate 1/β_{j0} in the resonance set: {reason}")]
    WindowIsolation { j0: usize, reason: String },
    #[error(transparent)]
    Euler(#[from] EulerError),
}

/// Mode-`k` block of the linearized gradient at parameter `λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeOperator {
    pub k: u32,
    pub lambda: f64,
    pub matrix: Matrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// −1, 0 or +1 per eigenvalue at the zero tolerance.
    pub eigen_signs: Vec<i8>,
}

fn on_resonance_tol(lambda: f64, spectral_radius: f64) -> f64 {
    1e-10 * (1.0 + lambda * lambda * spectral_radius)
}

/// Assemble `Λ(k;λ)` and diagonalize it directly.
pub fn mode_operator(hessian: &Matrix<f64>, k: u32, lambda: f64) -> ModeOperator {
    let n = hessian.rows();
    let k2 = f64::from(k) * f64::from(k);
    let mut m = hessian.scale(&(-lambda * lambda));
    for i in 0..n {
        m[(i, i)] += k2;
    }
    let matrix = m.scale(&(1.0 / (k2 + 1.0)));
    let eigenvalues = symmetric_eigen(&matrix).values;
    let tol = on_resonance_tol(lambda, hessian.max_abs() * n as f64);
    let eigen_signs = eigenvalues
        .iter()
        .map(|&v| {
            if v > tol {
                1
            } else if v < -tol {
                -1
            } else {
                0
            }
        })
        .collect();
    ModeOperator {
        k,
        lambda,
        matrix,
        eigenvalues,
        eigen_signs,
    }
}

/// An element `k/β_j` of the resonance set with every `(k, j)` producing it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonancePoint {
    pub lambda: f64,
    pub provenance: Vec<(u32, usize)>,
}

impl ResonancePoint {
    pub fn is_collision(&self) -> bool {
        self.provenance.len() > 1
    }
}

/// `{k/β_j : 1 ≤ k ≤ k_max}`, sorted, with coinciding values merged.
pub fn resonance_set(spectral: &SpectralData, k_max: u32) -> Result<Vec<ResonancePoint>, ConleyError> {
    if spectral.positive_part.is_empty() {
        return Err(ConleyError::NoPositiveEigenvalues);
    }
    let mut all: Vec<(f64, u32, usize)> = Vec::new();
    for (j, &beta) in spectral.positive_part.iter().enumerate() {
        for k in 1..=k_max {
            all.push((f64::from(k) / beta, k, j + 1));
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<ResonancePoint> = Vec::new();
    for (lambda, k, j) in all {
        match out.last_mut() {
            Some(p) if (p.lambda - lambda).abs() <= 1e-12 * lambda.max(1.0) => p.provenance.push((k, j)),
            _ => out.push(ResonancePoint {
                lambda,
                provenance: vec![(k, j)],
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationPlan {
    pub j0: usize,
    pub beta_j0: f64,
    pub n0: u32,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub epsilon: f64,
    pub epsilon_requested: f64,
    /// `k_j = ⌊β_j/β_{j₀}⌋` for `j < j₀`.
    pub k_bounds: Vec<u32>,
    /// `min_j n₀² − λ₊²β_j²`.
    pub stability_margin: f64,
    /// Nearest resonance-set elements below and above `1/β_{j₀}` (0 below if none).
    pub neighbours: (f64, f64),
}

/// Choose `n₀` and the window `λ± = (1±ε)/β_{j₀}`. The window is shrunk by
/// halving `ε` until it lies strictly inside the midpoints between
/// `1/β_{j₀}` and its neighbours in the resonance set (0 counts as the lower
/// neighbour); `n₀` starts at `max(k_j, 1) + 1` and grows until the margin
/// is positive.
pub fn plan_truncation(
    spectral: &SpectralData,
    j0: usize,
    epsilon: f64,
    tol_res: f64,
) -> Result<TruncationPlan, ConleyError> {
    let beta = &spectral.positive_part;
    if beta.is_empty() {
        return Err(ConleyError::NoPositiveEigenvalues);
    }
    if j0 == 0 || j0 > beta.len() {
        return Err(ConleyError::InvalidJ0 { j0, m: beta.len() });
    }
    let bj = beta[j0 - 1];
    let mut k_bounds = Vec::new();
    for (i, &b) in beta[..j0 - 1].iter().enumerate() {
        let ratio = b / bj;
        if (ratio - ratio.round()).abs() <= tol_res {
            return Err(ConleyError::Resonant {
                j0,
                i: i + 1,
                ratio,
                tol: tol_res,
            });
        }
        let k = ratio.floor() as u32;
        let (lo, hi) = (f64::from(k), f64::from(k + 1));
        assert!(lo * lo < ratio * ratio && ratio * ratio < hi * hi, "floor bracket");
        k_bounds.push(k);
    }

    // neighbours of 1/β_{j₀}: every k/β_j up to 2/β_{j₀}
    let centre = 1.0 / bj;
    let k_max = beta.iter().map(|b| (2.0 * b / bj).ceil() as u32 + 1).max().unwrap_or(2);
    let set = resonance_set(spectral, k_max)?;
    let close = |l: f64| (l - centre).abs() <= 1e-12 * centre.max(1.0);
    let below = set
        .iter()
        .map(|p| p.lambda)
        .filter(|&l| l < centre && !close(l))
        .fold(0.0f64, f64::max);
    let above = set
        .iter()
        .map(|p| p.lambda)
        .filter(|&l| l > centre && !close(l))
        .fold(f64::INFINITY, f64::min);
    let mut eps = epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ConleyError::WindowIsolation {
            j0,
            reason: format!("epsilon must be positive, got {epsilon}"),
        });
    }
    let isolated = |e: f64| (1.0 - e) * centre > 0.5 * (below + centre) && (1.0 + e) * centre < 0.5 * (above + centre);
    let mut halvings = 0;
    while !isolated(eps) {
        eps *= 0.5;
        halvings += 1;
        if halvings > 60 {
            return Err(ConleyError::WindowIsolation {
                j0,
                reason: "neighbouring resonance is too close".into(),
            });
        }
    }
    let lambda_minus = (1.0 - eps) * centre;
    let lambda_plus = (1.0 + eps) * centre;
    let margin = |n0: u32| {
        beta.iter()
            .map(|b| f64::from(n0 * n0) - lambda_plus * lambda_plus * b * b)
            .fold(f64::INFINITY, f64::min)
    };
    let mut n0 = k_bounds.iter().copied().max().unwrap_or(0).max(1) + 1;
    while margin(n0) <= 0.0 {
        n0 += 1;
    }
    Ok(TruncationPlan {
        j0,
        beta_j0: bj,
        n0,
        lambda_minus,
        lambda_plus,
        epsilon: eps,
        epsilon_requested: epsilon,
        k_bounds,
        stability_margin: margin(n0),
        neighbours: (below, above),
    })
}

/// Negative eigenspace of the Hessian of the action functional at `λ`,
/// truncated at mode `n0`, as an S¹-representation. Mode 0 contributes
/// one trivial dimension per positive `μ` (the tangent directions lie in
/// the kernel, so counting over the full space equals counting over the
/// normal space); mode `k ≥ 1` contributes one `R[1,k]` per `μ` with
/// `k² − λ²μ < 0`.
pub fn negative_eigenspace_rep(
    spectral: &SpectralData,
    geometry: &OrbitGeometry,
    lambda: f64,
    n0: u32,
) -> Result<S1Representation, ConleyError> {
    debug_assert!(spectral.kernel_dim >= geometry.orbit_dim);
    let mus = spectral.all_eigenvalues();
    let rho = mus.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = on_resonance_tol(lambda, rho);
    let trivial = mus.iter().filter(|&&mu| mu > spectral.tol).count() as u32;
    let mut rep = S1Representation::trivial(trivial);
    for k in 1..=n0 {
        let k2 = f64::from(k) * f64::from(k);
        let mut count = 0;
        for &mu in &mus {
            let value = (k2 - lambda * lambda * mu) / (k2 + 1.0);
            if value.abs() <= tol {
                return Err(ConleyError::OnResonance { lambda, k, value });
            }
            if value < 0.0 {
                count += 1;
            }
        }
        rep.add_mode(k, count);
    }
    Ok(rep)
}

/// Representations at truncation `n₀`, `n₀+1`, `n₀+5` agree at both ends
/// of the window.
pub fn stabilization_check(spectral: &SpectralData, geometry: &OrbitGeometry, plan: &TruncationPlan) -> bool {
    [plan.lambda_minus, plan.lambda_plus].iter().all(|&lambda| {
        let reps: Vec<_> = [plan.n0, plan.n0 + 1, plan.n0 + 5]
            .iter()
            .map(|&n| negative_eigenspace_rep(spectral, geometry, lambda, n).ok())
            .collect();
        reps[0].is_some() && reps.iter().all(|r| *r == reps[0])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCrossCheck {
    pub agrees: bool,
    /// `(λ, k, closed-form negative count, direct negative count)` per mode.
    pub counts: Vec<(f64, u32, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConleyReport {
    pub plan: TruncationPlan,
    pub resonance_set: Vec<ResonancePoint>,
    pub rep_minus: S1Representation,
    pub rep_plus: S1Representation,
    pub chi_minus: EulerRingElement,
    pub chi_plus: EulerRingElement,
    pub chi_g_minus: UGElement,
    pub chi_g_plus: UGElement,
    pub r_minus: u32,
    pub r_plus: u32,
    /// Multiplicity of `β_{j₀}²`; the mode-1 count should change by exactly this.
    pub crossing_multiplicity: usize,
    pub single_crossing_consistent: bool,
    pub stabilized: bool,
    pub admissibility: AdmissibilityVerdict,
    pub bifurcation_certified: bool,
    pub cross_check: Option<ModeCrossCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConleyOptions {
    pub epsilon: f64,
    pub tol_res: f64,
    /// Diagonalize every `Λ(k;λ±)` directly and compare with the closed form.
    pub cross_check: bool,
}

impl Default for ConleyOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            tol_res: 1e-6,
            cross_check: false,
        }
    }
}

/// Certify the change of Conley index across `1/β_{j₀}` at a critical orbit.
pub fn certify_bifurcation(
    record: &CriticalOrbitRecord,
    j0: usize,
    options: &ConleyOptions,
) -> Result<ConleyReport, ConleyError> {
    let check = &record.hypotheses.checklist;
    if !check.all_pass() {
        return Err(ConleyError::HypothesesFail(
            check.failures().into_iter().map(String::from).collect(),
        ));
    }
    let spectral = &record.spectral;
    let geometry = &record.geometry;
    let plan = plan_truncation(spectral, j0, options.epsilon, options.tol_res)?;
    let rep_minus = negative_eigenspace_rep(spectral, geometry, plan.lambda_minus, plan.n0)?;
    let rep_plus = negative_eigenspace_rep(spectral, geometry, plan.lambda_plus, plan.n0)?;
    let chi_minus = chi_sphere(&rep_minus)?;
    let chi_plus = chi_sphere(&rep_plus)?;
    let labels = ClassLabeling::default();
    let chi_g_minus = induce_to_g(&chi_minus, &labels)?;
    let chi_g_plus = induce_to_g(&chi_plus, &labels)?;
    let r_minus = rep_minus.multiplicity(1);
    let r_plus = rep_plus.multiplicity(1);
    let crossing_multiplicity = spectral.positive_multiplicities[j0 - 1];
    let single_crossing_consistent = rep_minus.trivial_dim() == rep_plus.trivial_dim()
        && (1..=plan.n0).all(|k| {
            let d = rep_plus.multiplicity(k) as i64 - rep_minus.multiplicity(k) as i64;
            d == if k == 1 { crossing_multiplicity as i64 } else { 0 }
        });
    let cross_check = options.cross_check.then(|| {
        let mut counts = Vec::new();
        for &lambda in &[plan.lambda_minus, plan.lambda_plus] {
            let closed = negative_eigenspace_rep(spectral, geometry, lambda, plan.n0).ok();
            for k in 1..=plan.n0 {
                let direct = mode_operator(&record.hessian, k, lambda)
                    .eigen_signs
                    .iter()
                    .filter(|&&s| s < 0)
                    .count();
                let closed_k = closed.as_ref().map_or(usize::MAX, |r| r.multiplicity(k) as usize);
                counts.push((lambda, k, closed_k, direct));
            }
        }
        ModeCrossCheck {
            agrees: counts.iter().all(|c| c.2 == c.3),
            counts,
        }
    });
    Ok(ConleyReport {
        resonance_set: resonance_set(spectral, plan.n0)?,
        stabilized: stabilization_check(spectral, geometry, &plan),
        bifurcation_certified: chi_minus != chi_plus,
        admissibility: admissible_gamma_cross_s1(),
        plan,
        rep_minus,
        rep_plus,
        chi_minus,
        chi_plus,
        chi_g_minus,
        chi_g_plus,
        r_minus,
        r_plus,
        crossing_multiplicity,
        single_crossing_consistent,
        cross_check,
    })
}
