//! Critical orbits of `∇U`: location, spectral classification, Hessian
//! block split and the hypothesis checklist of the symmetric Liapunov
//! center theorem.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::euler_ring::UGElement;
use crate::linalg::{norm, orthonormalize, symmetric_eigen, Matrix};
use crate::poly::{rational_coeffs_to_f64, real_roots, resultant_wrt_second, vanishes_at, Poly};
use crate::potential::{BlockRadialPolynomial, Jet2, PotentialError, PotentialSpec, RadialPolynomial};
use crate::scalar::{rational_approx, rational_sqrt, rational_to_f64, Rational};
use crate::symmetry::{orbit_geometry, GroupAction, OrbitGeometry, SymmetryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("cannot determine the ambient dimension: set it in the search config or the action")]
    UnknownDimension,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate orbit: kernel dimension {kernel_dim} exceeds orbit dimension {orbit_dim}")]
    Degenerate { kernel_dim: usize, orbit_dim: usize },
    #[error("φ' vanishes identically: every sphere is critical, no isolated orbits")]
    ContinuumOfCriticalPoints,
    #[error("no critical points found")]
    NoRoots,
    #[error("unsupported case: {0}")]
    Unsupported(String),
}

/// Search parameters for the seeded (non-polynomial-class) paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub seeds: Vec<Vec<f64>>,
    pub newton_max_iter: usize,
    pub tol_grad: f64,
    /// Non-resonance tolerance on the distance of `β_i/β_{j₀}` to ℕ.
    pub tol_res: f64,
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Ambient dimension when neither the action nor the potential fixes it.
    pub dim: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            newton_max_iter: 50,
            tol_grad: 1e-10,
            tol_res: 1e-6,
            bounds: None,
            dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    /// Distinct eigenvalues ascending, with multiplicities.
    pub eigenvalues: Vec<(f64, usize)>,
    /// `β_j = √μ_j` for the distinct positive eigenvalues, strictly decreasing.
    pub positive_part: Vec<f64>,
    /// Multiplicity of `β_j²`, aligned with `positive_part`.
    pub positive_multiplicities: Vec<usize>,
    pub kernel_dim: usize,
    pub negative_dim: usize,
    pub tol: f64,
}

impl SpectralData {
    /// Eigenvalues with repetition, ascending.
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    pub fn beta(&self, j0: usize) -> Option<f64> {
        j0.checked_sub(1).and_then(|i| self.positive_part.get(i).copied())
    }
}

/// Zero tolerance `1e-8·max(1, ρ)` for a spectral radius `ρ`.
pub fn zero_tolerance(spectral_radius: f64) -> f64 {
    1e-8 * spectral_radius.max(1.0)
}

/// Eigenvalues of a symmetric matrix grouped at the zero tolerance.
pub fn spectral_data(hessian: &Matrix<f64>) -> SpectralData {
    let eig = symmetric_eigen(hessian);
    let rho = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = zero_tolerance(rho);
    let mut eigenvalues: Vec<(f64, usize)> = Vec::new();
    for &v in &eig.values {
        let v = if v.abs() <= tol { 0.0 } else { v };
        match eigenvalues.last_mut() {
            Some((last, m)) if (v - *last).abs() <= tol => {
                // running mean keeps clusters centred
                *last += (v - *last) / (*m as f64 + 1.0);
                *m += 1;
            }
            _ => eigenvalues.push((v, 1)),
        }
    }
    let positive: Vec<(f64, usize)> = eigenvalues.iter().rev().filter(|(v, _)| *v > tol).copied().collect();
    SpectralData {
        positive_part: positive.iter().map(|(v, _)| v.sqrt()).collect(),
        positive_multiplicities: positive.iter().map(|(_, m)| *m).collect(),
        kernel_dim: eig.values.iter().filter(|v| v.abs() <= tol).count(),
        negative_dim: eig.values.iter().filter(|v| **v < -tol).count(),
        eigenvalues,
        tol,
    }
}

/// The normal-space Hessian split into the part fixed by the isotropy
/// group (`B`) and its complement (`C`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianBlocks {
    pub kernel_block_dim: usize,
    pub b: Matrix<f64>,
    pub c: Matrix<f64>,
    pub morse_b: usize,
    pub morse_c: usize,
}

fn morse_index(m: &Matrix<f64>) -> usize {
    if m.rows() == 0 {
        return 0;
    }
    let eig = symmetric_eigen(m);
    let tol = zero_tolerance(eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    eig.values.iter().filter(|v| **v < -tol).count()
}

/// Orthonormal basis of the subspace fixed by the isotropy group at the
/// geometry's point. For torus actions the identity component of the
/// stabilizer is used.
fn isotropy_fixed_basis(action: &GroupAction, geometry: &OrbitGeometry) -> Vec<Vec<f64>> {
    let n = geometry.point.len();
    let unit = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    if geometry.isotropy_trivial {
        return (0..n).map(unit).collect();
    }
    match action {
        GroupAction::BlockRotation(b) => {
            let tol = 1e-10 * (1.0 + norm(&geometry.point));
            let r = b.generators().len();
            let weight = |blk: usize| -> Vec<f64> {
                (0..r)
                    .map(|g| if b.generators()[g].contains(&blk) { 1.0 } else { 0.0 })
                    .collect()
            };
            let active: Vec<usize> = (0..b.blocks().len())
                .filter(|&k| {
                    let (i, j) = b.blocks()[k];
                    geometry.point[i].hypot(geometry.point[j]) > tol
                })
                .collect();
            // Lie algebra of the stabilizer: θ with weight(b)·θ = 0 on active blocks.
            let kernel = if active.is_empty() {
                (0..r)
                    .map(|g| {
                        let mut e = vec![0.0; r];
                        e[g] = 1.0;
                        e
                    })
                    .collect::<Vec<_>>()
            } else {
                let m = DMatrix::from_fn(active.len(), r, |i, g| weight(active[i])[g]);
                // MᵀM is r×r, so its SVD returns the full right basis
                let svd = (m.transpose() * &m).svd(false, true);
                let vt = svd.v_t.expect("v_t requested");
                let mut ker = Vec::new();
                for row in 0..r {
                    if svd.singular_values[row] <= 1e-10 {
                        ker.push(vt.row(row).iter().copied().collect());
                    }
                }
                ker
            };
            let mut basis: Vec<Vec<f64>> = b.fixed_indices().iter().map(|&i| unit(i)).collect();
            for (k, &(i, j)) in b.blocks().iter().enumerate() {
                let w = weight(k);
                let moved = kernel
                    .iter()
                    .any(|th: &Vec<f64>| w.iter().zip(th).map(|(a, c)| a * c).sum::<f64>().abs() > 1e-10);
                if !moved {
                    basis.push(unit(i));
                    basis.push(unit(j));
                }
            }
            basis
        }
        GroupAction::FinitePerm(g) => {
            let Some(perms) = g.perms() else {
                return (0..n).map(unit).collect();
            };
            let tol = 1e-10 * (1.0 + norm(&geometry.point));
            let stab: Vec<usize> = (0..g.order())
                .filter(|&e| (0..n).all(|i| (geometry.point[perms[e][i]] - geometry.point[i]).abs() <= tol))
                .collect();
            // orbits of the stabilizer on coordinates
            let mut label = vec![usize::MAX; n];
            let mut basis = Vec::new();
            for start in 0..n {
                if label[start] != usize::MAX {
                    continue;
                }
                let members: Vec<usize> = {
                    let mut set: Vec<usize> = stab.iter().map(|&e| perms[e][start]).collect();
                    set.sort_unstable();
                    set.dedup();
                    set
                };
                let mut v = vec![0.0; n];
                let s = 1.0 / (members.len() as f64).sqrt();
                for &i in &members {
                    label[i] = start;
                    v[i] = s;
                }
                basis.push(v);
            }
            basis
        }
    }
}

/// Split of the normal-space Hessian; errors on degenerate orbits.
pub fn hessian_blocks(
    hessian: &Matrix<f64>,
    geometry: &OrbitGeometry,
    action: &GroupAction,
) -> Result<HessianBlocks, CriticalError> {
    let spectral = spectral_data(hessian);
    if spectral.kernel_dim != geometry.orbit_dim {
        return Err(CriticalError::Degenerate {
            kernel_dim: spectral.kernel_dim,
            orbit_dim: geometry.orbit_dim,
        });
    }
    let n = geometry.point.len();
    let fixed = isotropy_fixed_basis(action, geometry);
    let tol = 1e-8;
    // fixed ⊖ tangent; the tangent space is fixed by the (abelian) isotropy
    let mut stacked = geometry.tangent_basis.clone();
    stacked.extend(fixed.iter().cloned());
    let b_basis: Vec<Vec<f64>> = orthonormalize(&stacked, tol)
        .into_iter()
        .skip(geometry.tangent_basis.len())
        .collect();
    let mut stacked = geometry.tangent_basis.clone();
    stacked.extend(b_basis.iter().cloned());
    let t_and_b = stacked.len();
    stacked.extend((0..n).map(|i| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }));
    let c_basis: Vec<Vec<f64>> = orthonormalize(&stacked, tol).into_iter().skip(t_and_b).collect();
    let b = hessian.congruence(&b_basis);
    let c = hessian.congruence(&c_basis);
    Ok(HessianBlocks {
        kernel_block_dim: geometry.orbit_dim,
        morse_b: morse_index(&b),
        morse_c: morse_index(&c),
        b,
        c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HypothesisChecklist {
    pub isotropy_trivial: bool,
    pub nondegenerate: bool,
    pub has_positive_eigenvalue: bool,
}

impl HypothesisChecklist {
    pub fn all_pass(&self) -> bool {
        self.isotropy_trivial && self.nondegenerate && self.has_positive_eigenvalue
    }

    /// Names of the failed hypotheses.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.isotropy_trivial {
            out.push("nontrivial isotropy");
        }
        if !self.nondegenerate {
            out.push("degenerate orbit");
        }
        if !self.has_positive_eigenvalue {
            out.push("no positive eigenvalue");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEvidence {
    pub i: usize,
    pub ratio: f64,
    pub distance_to_integer: f64,
}

/// Non-resonance evidence for one choice of `j₀` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceEntry {
    pub j0: usize,
    pub beta: f64,
    pub multiplicity: usize,
    pub eligible: bool,
    pub ratios: Vec<RatioEvidence>,
    pub predicted_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checklist: HypothesisChecklist,
    pub evidence: Vec<String>,
    pub resonance: Vec<ResonanceEntry>,
    pub eligible_j0: Vec<usize>,
}

/// Run the three hypotheses and the non-resonance test for every `j₀`.
pub fn hypothesis_check(geometry: &OrbitGeometry, spectral: &SpectralData, tol_res: f64) -> HypothesisReport {
    let checklist = HypothesisChecklist {
        isotropy_trivial: geometry.isotropy_trivial,
        nondegenerate: spectral.kernel_dim == geometry.orbit_dim,
        has_positive_eigenvalue: !spectral.positive_part.is_empty(),
    };
    let evidence = vec![
        format!(
            "isotropy {}",
            if geometry.isotropy_trivial {
                "trivial"
            } else {
                "nontrivial"
            }
        ),
        format!(
            "kernel dimension {} vs orbit dimension {}",
            spectral.kernel_dim, geometry.orbit_dim
        ),
        format!(
            "positive eigenvalues: [{}]",
            spectral
                .positive_part
                .iter()
                .map(|b| format!("{:.12}", b * b))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ];
    let beta = &spectral.positive_part;
    let resonance: Vec<ResonanceEntry> = (0..beta.len())
        .map(|j| {
            let ratios: Vec<RatioEvidence> = (0..j)
                .map(|i| {
                    let ratio = beta[i] / beta[j];
                    RatioEvidence {
                        i: i + 1,
                        ratio,
                        distance_to_integer: (ratio - ratio.round()).abs(),
                    }
                })
                .collect();
            ResonanceEntry {
                j0: j + 1,
                beta: beta[j],
                multiplicity: spectral.positive_multiplicities[j],
                eligible: ratios.iter().all(|r| r.distance_to_integer > tol_res),
                ratios,
                predicted_period: 2.0 * PI / beta[j],
            }
        })
        .collect();
    let eligible_j0 = if checklist.all_pass() {
        resonance.iter().filter(|e| e.eligible).map(|e| e.j0).collect()
    } else {
        Vec::new()
    };
    HypothesisReport {
        checklist,
        evidence,
        resonance,
        eligible_j0,
    }
}

fn serialize_exact<S: Serializer>(m: &Option<Matrix<Rational>>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<String>>> = m.as_ref().map(|m| {
        m.to_rows()
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect()
    });
    rows.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalOrbitRecord {
    pub geometry: OrbitGeometry,
    /// Label of the isotropy class (`"e"` when trivial).
    pub isotropy_class: String,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian: Matrix<f64>,
    /// Exact Hessian when the representative was recovered exactly.
    #[serde(serialize_with = "serialize_exact")]
    pub exact_hessian: Option<Matrix<Rational>>,
    pub spectral: SpectralData,
    pub blocks: Option<HessianBlocks>,
    pub nondegenerate: bool,
    pub hypotheses: HypothesisReport,
    /// How the representative was obtained.
    pub origin: String,
}

impl CriticalOrbitRecord {
    /// Classify the orbit through `q0`. When `exact_hessian` is given it
    /// replaces the floating-point Hessian.
    pub fn build(
        spec: &PotentialSpec,
        action: &GroupAction,
        q0: &[f64],
        exact_hessian: Option<Matrix<Rational>>,
        tol_res: f64,
        origin: impl Into<String>,
    ) -> Result<Self, CriticalError> {
        let jet = spec.eval_jet2(q0)?;
        let hessian = match &exact_hessian {
            Some(h) => h.map(rational_to_f64),
            None => jet.hessian.clone(),
        };
        let geometry = orbit_geometry(action, q0)?;
        let spectral = spectral_data(&hessian);
        let blocks = hessian_blocks(&hessian, &geometry, action).ok();
        let hypotheses = hypothesis_check(&geometry, &spectral, tol_res);
        Ok(Self {
            isotropy_class: isotropy_label(action, &geometry),
            value: jet.value,
            gradient_norm: norm(&jet.gradient),
            nondegenerate: spectral.kernel_dim == geometry.orbit_dim,
            hessian,
            exact_hessian,
            spectral,
            blocks,
            hypotheses,
            geometry,
            origin: origin.into(),
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.geometry.point
    }
}

fn isotropy_label(action: &GroupAction, geometry: &OrbitGeometry) -> String {
    if geometry.isotropy_trivial {
        return "e".into();
    }
    let tol = 1e-10 * (1.0 + norm(&geometry.point));
    match action {
        GroupAction::BlockRotation(b) => {
            let inactive: Vec<String> = b
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, &(i, j))| geometry.point[i].hypot(geometry.point[j]) <= tol)
                .map(|(k, _)| k.to_string())
                .collect();
            format!("stab(blocks {})", inactive.join(","))
        }
        GroupAction::FinitePerm(g) => match g.perms() {
            None => "G".into(),
            Some(perms) => {
                let n = geometry.point.len();
                let names: Vec<&str> = (0..g.order())
                    .filter(|&e| (0..n).all(|i| (geometry.point[perms[e][i]] - geometry.point[i]).abs() <= tol))
                    .map(|e| g.names()[e].as_str())
                    .collect();
                format!("{{{}}}", names.join(","))
            }
        },
    }
}

/// Move `x` to a canonical point of its orbit: each generator turns its
/// first nonzero block onto the positive first axis (block rotations), or
/// the lexicographically largest image is taken (permutations).
pub fn canonicalize(action: &GroupAction, x: &[f64]) -> Vec<f64> {
    let tol = 1e-12 * (1.0 + norm(x));
    match action {
        GroupAction::BlockRotation(b) => {
            let mut y = x.to_vec();
            let r = b.generators().len();
            for g in 0..r {
                let Some(&blk) = b.generators()[g].iter().find(|&&k| {
                    let (i, j) = b.blocks()[k];
                    y[i].hypot(y[j]) > tol
                }) else {
                    continue;
                };
                let (i, j) = b.blocks()[blk];
                let mut angles = vec![0.0; r];
                angles[g] = -y[j].atan2(y[i]);
                y = b.rotate(&angles, &y);
                y[j] = 0.0;
            }
            y
        }
        GroupAction::FinitePerm(g) => match g.perms() {
            None => x.to_vec(),
            Some(perms) => {
                let n = x.len();
                (0..g.order())
                    .map(|e| {
                        let mut y = vec![0.0; n];
                        for i in 0..n {
                            y[perms[e][i]] = x[i];
                        }
                        y
                    })
                    .max_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
                    .unwrap_or_else(|| x.to_vec())
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub orbits: Vec<CriticalOrbitRecord>,
    pub failures: Vec<SeedFailure>,
}

fn ambient_dim(spec: &PotentialSpec, action: &GroupAction, search: &SearchConfig) -> Result<usize, CriticalError> {
    let candidates = [action.dim(), spec.required_dim(), search.dim];
    let known: Vec<usize> = candidates.iter().flatten().copied().collect();
    let Some(&n) = known.first() else {
        return Err(CriticalError::UnknownDimension);
    };
    if known.iter().any(|&d| d != n) {
        return Err(CriticalError::Dimension(format!(
            "action, potential and search config disagree: {candidates:?}"
        )));
    }
    if n < spec.min_dim() {
        return Err(CriticalError::Dimension(format!(
            "potential needs at least {} coordinates, ambient dimension is {n}",
            spec.min_dim()
        )));
    }
    Ok(n)
}

/// Coordinate used for representatives: first index of the first block.
fn first_axis(action: &GroupAction) -> usize {
    match action {
        GroupAction::BlockRotation(b) => b.blocks().first().map_or(0, |&(i, _)| i),
        GroupAction::FinitePerm(_) => 0,
    }
}

/// Locate and classify the critical orbits of `spec`.
pub fn find_critical_orbits(
    spec: &PotentialSpec,
    action: &GroupAction,
    search: &SearchConfig,
) -> Result<SearchOutcome, CriticalError> {
    let n = ambient_dim(spec, action, search)?;
    let mut failures = Vec::new();
    let candidates: Vec<(Vec<f64>, Option<Matrix<Rational>>, String)> = match spec {
        PotentialSpec::Radial(r) => radial_candidates(r, n, first_axis(action))?,
        PotentialSpec::BlockRadial(b) => block_radial_candidates(b, search)?,
        PotentialSpec::Expression(_) => {
            let mut seeds = search.seeds.clone();
            seeds.push(vec![0.0; n]);
            let mut out = Vec::new();
            for (k, seed) in seeds.iter().enumerate() {
                if seed.len() != n {
                    failures.push(SeedFailure {
                        seed: k,
                        message: format!("seed has {} coordinates, expected {n}", seed.len()),
                    });
                    continue;
                }
                match newton_on_gradient(spec, seed, search) {
                    Ok(x) => {
                        let x = canonicalize(action, &x);
                        let exact = exact_hessian_at(spec, &x);
                        out.push((x, exact, format!("newton from seed {k}")));
                    }
                    Err(message) => failures.push(SeedFailure { seed: k, message }),
                }
            }
            out
        }
    };

    let mut orbits: Vec<CriticalOrbitRecord> = Vec::new();
    for (q0, exact, origin) in candidates {
        let rec = CriticalOrbitRecord::build(spec, action, &q0, exact, search.tol_res, origin)?;
        let scale = 1.0 + rec.hessian.norm() * norm(&q0);
        if rec.gradient_norm >= search.tol_grad * scale {
            failures.push(SeedFailure {
                seed: usize::MAX,
                message: format!("candidate {q0:?} rejected: |∇U| = {:e}", rec.gradient_norm),
            });
            continue;
        }
        let dup = orbits.iter().any(|o| {
            o.point()
                .iter()
                .zip(&q0)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs())))
        });
        if !dup {
            orbits.push(rec);
        }
    }
    if orbits.is_empty() {
        return Err(CriticalError::NoRoots);
    }
    orbits.sort_by(|a, b| {
        let key = |r: &CriticalOrbitRecord| (norm(r.point()), r.point().to_vec());
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SearchOutcome { orbits, failures })
}

type Candidate = (Vec<f64>, Option<Matrix<Rational>>, String);

fn exact_root(p: &Poly, t: f64) -> Option<Rational> {
    let r = rational_approx(t, 1_000_000)?;
    ((rational_to_f64(&r) - t).abs() <= 1e-9 * (1.0 + t.abs()) && vanishes_at(p, &[r])).then_some(r)
}

fn radial_candidates(r: &RadialPolynomial, n: usize, axis: usize) -> Result<Vec<Candidate>, CriticalError> {
    let dphi = r.derivative_coeffs();
    if dphi.iter().all(Zero::is_zero) {
        return Err(CriticalError::ContinuumOfCriticalPoints);
    }
    let dphi_poly = Poly::univariate(dphi);
    // Hessian at √t·e_axis is diagonal: 2φ' + 4φ''t on the axis, 2φ' elsewhere.
    let exact_hessian = |t: &Rational| {
        let two = Rational::from_integer(2);
        let d1 = r.dphi(t);
        let mut diag = vec![two * d1; n];
        diag[axis] = two * d1 + Rational::from_integer(4) * r.d2phi(t) * t;
        Matrix::from_diagonal(&diag)
    };
    let zero = Rational::zero();
    let mut out = vec![(vec![0.0; n], Some(exact_hessian(&zero)), "origin".to_string())];
    let scale = rational_coeffs_to_f64(dphi).iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for t in real_roots(&rational_coeffs_to_f64(dphi), 3) {
        if t <= 1e-12 * (1.0 + scale) {
            continue;
        }
        let exact = exact_root(&dphi_poly, t);
        let t = exact.as_ref().map_or(t, rational_to_f64);
        let mut q0 = vec![0.0; n];
        q0[axis] = t.sqrt();
        out.push((q0, exact.as_ref().map(exact_hessian), format!("root t = {t} of φ'")));
    }
    Ok(out)
}

/// Restrict a polynomial in `m` variables to the variables in `active`
/// (the others set to zero), renumbered `0..active.len()`.
fn restrict(p: &Poly, active: &[usize]) -> Poly {
    let m = p.nvars();
    Poly::from_terms(
        active.len(),
        p.terms()
            .filter(|(e, _)| (0..m).all(|v| active.contains(&v) || e[v] == 0))
            .map(|(e, c)| (active.iter().map(|&v| e[v]).collect(), *c)),
    )
}

fn eval_f64(p: &Poly, t: &[f64]) -> f64 {
    p.eval(t)
}

/// Newton on `g(t) = 0` with Jacobian `jac`; returns the converged point.
fn newton_system(g: &[Poly], jac: &[Vec<Poly>], start: &[f64], iters: usize) -> Option<Vec<f64>> {
    let k = start.len();
    let mut t = start.to_vec();
    for _ in 0..iters {
        let f: Vec<f64> = g.iter().map(|p| eval_f64(p, &t)).collect();
        let fnorm = norm(&f);
        if fnorm < 1e-14 {
            return Some(t);
        }
        let j = DMatrix::from_fn(k, k, |a, b| eval_f64(&jac[a][b], &t));
        let rhs = nalgebra::DVector::from_column_slice(&f);
        let step = j.svd(true, true).solve(&rhs, 1e-14).ok()?;
        for (ti, s) in t.iter_mut().zip(step.iter()) {
            *ti -= s;
        }
        if !t.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    let f: Vec<f64> = g.iter().map(|p| eval_f64(p, &t)).collect();
    let scale = g
        .iter()
        .map(|p| p.terms().map(|(_, c)| rational_to_f64(c).abs()).sum::<f64>())
        .sum::<f64>();
    (norm(&f) <= 1e-9 * (1.0 + scale)).then_some(t)
}

fn block_radial_candidates(b: &BlockRadialPolynomial, search: &SearchConfig) -> Result<Vec<Candidate>, CriticalError> {
    let m = b.block_dims().len();
    let n = b.dim();
    let w2 = b.omega_sq();
    let eps = *b.eps();
    // g_i(t) = ω² + ε ∂𝒰/∂t_i: block i is either zero or has g_i = 0.
    let g: Vec<Poly> = b
        .poly_gradient()
        .iter()
        .map(|d| Poly::constant(m, w2).add(&d.scale(&eps)))
        .collect();
    let starts: Vec<usize> = b
        .block_dims()
        .iter()
        .scan(0, |acc, &d| {
            let s = *acc;
            *acc += d;
            Some(s)
        })
        .collect();

    let mut t_solutions: Vec<(Vec<f64>, String)> = vec![(vec![0.0; m], "origin".into())];
    for mask in 1u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let gs: Vec<Poly> = active.iter().map(|&i| restrict(&g[i], &active)).collect();
        let k = active.len();
        let jac: Vec<Vec<Poly>> = gs.iter().map(|p| (0..k).map(|v| p.derivative(v)).collect()).collect();
        let mut sols: Vec<Vec<f64>> = Vec::new();
        let mut solved_exactly = false;
        if k == 1 {
            if let Some(c) = gs[0].univariate_coeffs() {
                if c.iter().all(Zero::is_zero) {
                    return Err(CriticalError::Unsupported(format!(
                        "block {} has a continuum of critical radii",
                        active[0] + 1
                    )));
                }
                sols.extend(real_roots(&rational_coeffs_to_f64(&c), 3).into_iter().map(|t| vec![t]));
                solved_exactly = true;
            }
        } else if k == 2 {
            if let Some(res) = resultant_wrt_second(&gs[0], &gs[1]) {
                solved_exactly = true;
                for ta in real_roots(&res, 3) {
                    if ta <= 0.0 {
                        continue;
                    }
                    for p in &gs {
                        let coeffs = univariate_in_second(p, ta);
                        if coeffs.iter().all(|c| *c == 0.0) {
                            continue;
                        }
                        for tb in real_roots(&coeffs, 3) {
                            if let Some(t) = newton_system(&gs, &jac, &[ta, tb], 20) {
                                sols.push(t);
                            }
                        }
                    }
                }
            }
        }
        if !solved_exactly {
            let mut seeds: Vec<Vec<f64>> = Vec::new();
            let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
            let mut idx = vec![0usize; k];
            loop {
                seeds.push(idx.iter().map(|&i| grid[i]).collect());
                let Some(pos) = (0..k).find(|&p| idx[p] + 1 < grid.len()) else {
                    break;
                };
                idx[pos] += 1;
                for q in 0..pos {
                    idx[q] = 0;
                }
            }
            for s in &search.seeds {
                if s.len() == n {
                    let t = b.block_invariants(s);
                    seeds.push(active.iter().map(|&i| t[i]).collect());
                }
            }
            for s in seeds {
                if let Some(t) = newton_system(&gs, &jac, &s, search.newton_max_iter) {
                    sols.push(t);
                }
            }
        }
        for t in sols {
            if t.iter().any(|&v| v <= 1e-12) {
                continue;
            }
            let mut full = vec![0.0; m];
            for (&i, &v) in active.iter().zip(&t) {
                full[i] = v;
            }
            let dup = t_solutions.iter().any(|(u, _)| {
                u.iter()
                    .zip(&full)
                    .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + a.abs()))
            });
            if !dup {
                let blocks: Vec<String> = active.iter().map(|i| (i + 1).to_string()).collect();
                t_solutions.push((full, format!("stationary radii on blocks {}", blocks.join(","))));
            }
        }
    }

    Ok(t_solutions
        .into_iter()
        .map(|(t, origin)| {
            let exact_t: Option<Vec<Rational>> = t
                .iter()
                .map(|&v| {
                    if v == 0.0 {
                        return Some(Rational::zero());
                    }
                    rational_approx(v, 1_000_000).filter(|r| (rational_to_f64(r) - v).abs() <= 1e-9 * (1.0 + v))
                })
                .collect();
            let exact_t = exact_t.filter(|et| (0..m).all(|i| et[i].is_zero() || vanishes_at(&g[i], et)));
            let t_used: Vec<f64> = exact_t
                .as_ref()
                .map_or(t.clone(), |et| et.iter().map(rational_to_f64).collect());
            let mut q0 = vec![0.0; n];
            for i in 0..m {
                q0[starts[i]] = t_used[i].sqrt();
            }
            let exact = exact_t.and_then(|et| exact_block_hessian(b, &g, &et, &starts));
            (q0, exact, origin)
        })
        .collect())
}

fn univariate_in_second(p: &Poly, ta: f64) -> Vec<f64> {
    let deg = p.degree_in(1) as usize;
    let mut out = vec![0.0; deg + 1];
    for (e, c) in p.terms() {
        out[e[1] as usize] += rational_to_f64(c) * ta.powi(e[0] as i32);
    }
    out
}

/// Exact Hessian at the axis-aligned representative with squared block
/// radii `t`. Cross-block entries need `√(t_i t_j)` to be rational or the
/// mixed derivative to vanish.
fn exact_block_hessian(
    b: &BlockRadialPolynomial,
    g: &[Poly],
    t: &[Rational],
    starts: &[usize],
) -> Option<Matrix<Rational>> {
    let n = b.dim();
    let m = t.len();
    let blocks = b.block_of();
    let eps = *b.eps();
    let two = Rational::from_integer(2);
    let d2: Vec<Vec<Rational>> = (0..m)
        .map(|i| (0..m).map(|j| b.poly_gradient()[i].derivative(j).eval(t)).collect())
        .collect();
    let gi: Vec<Rational> = g.iter().map(|p| p.eval(t)).collect();
    let mut h = Matrix::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = gi[blocks[k]];
    }
    for i in 0..m {
        for j in 0..m {
            if d2[i][j].is_zero() || t[i].is_zero() || t[j].is_zero() {
                continue;
            }
            let xx = if i == j { t[i] } else { rational_sqrt(&(t[i] * t[j]))? };
            let (a, c) = (starts[i], starts[j]);
            h[(a, c)] = h[(a, c)] + two * eps * d2[i][j] * xx;
        }
    }
    h.is_symmetric().then_some(h)
}

/// Exact Hessian of an expression at a rational recovery of `x`, checked
/// for an exactly vanishing gradient and agreement with floating point.
fn exact_hessian_at(spec: &PotentialSpec, x: &[f64]) -> Option<Matrix<Rational>> {
    let q: Vec<Rational> = x
        .iter()
        .map(|&v| rational_approx(v, 1000).filter(|r| (rational_to_f64(r) - v).abs() <= 1e-9 * (1.0 + v.abs())))
        .collect::<Option<_>>()?;
    let jet: Jet2<Rational> = catch_unwind(AssertUnwindSafe(|| spec.eval_jet2(&q))).ok()?.ok()?;
    if !jet.gradient.iter().all(Zero::is_zero) {
        return None;
    }
    let float = spec.eval_jet2(x).ok()?.hessian;
    let scale = 1.0 + float.max_abs();
    let agrees = (0..x.len())
        .all(|i| (0..x.len()).all(|j| (rational_to_f64(&jet.hessian[(i, j)]) - float[(i, j)]).abs() <= 1e-6 * scale));
    agrees.then_some(jet.hessian)
}

/// Newton on `∇U = 0` with a pseudo-inverse step (the Hessian is singular
/// along orbit directions) and backtracking on `‖∇U‖`.
fn newton_on_gradient(spec: &PotentialSpec, seed: &[f64], search: &SearchConfig) -> Result<Vec<f64>, String> {
    let n = seed.len();
    let mut x = seed.to_vec();
    let inside = |x: &[f64]| {
        search
            .bounds
            .as_ref()
            .is_none_or(|b| x.iter().zip(b).all(|(v, (lo, hi))| v >= lo && v <= hi))
    };
    for _ in 0..search.newton_max_iter {
        let jet = spec.eval_jet2(&x).map_err(|e| e.to_string())?;
        let gnorm = norm(&jet.gradient);
        if gnorm < search.tol_grad * (1.0 + jet.hessian.norm() * norm(&x)) {
            return Ok(x);
        }
        let h = DMatrix::from_fn(n, n, |i, j| jet.hessian[(i, j)]);
        let rhs = nalgebra::DVector::from_column_slice(&jet.gradient);
        let svd = h.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max().max(1e-300);
        let step = svd.solve(&rhs, cutoff).map_err(|e| e.to_string())?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Ok(j) = spec.eval_jet2(&trial) {
                if norm(&j.gradient) < gnorm && inside(&trial) {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(format!("Newton stalled at |∇U| = {gnorm:e}"));
        }
        if !inside(&x) {
            return Err("iterate left the search bounds".into());
        }
    }
    let jet = spec.eval_jet2(&x).map_err(|e| e.to_string())?;
    if norm(&jet.gradient) < search.tol_grad * (1.0 + jet.hessian.norm() * norm(&x)) {
        Ok(x)
    } else {
        Err(format!(
            "no convergence after {} iterations (|∇U| = {:e})",
            search.newton_max_iter,
            norm(&jet.gradient)
        ))
    }
}

/// Outcome of comparing two special orbits (no `C` block).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitComparison {
    pub distinct_isotropy_class: bool,
    pub distinct_conley_index: bool,
    pub distinct_chi_g: bool,
    pub chi_g_a: UGElement,
    pub chi_g_b: UGElement,
}

/// For a special orbit with isotropy `H`, `χ_G = (−1)^{morse_B}·χ_G(G/H⁺)`.
pub fn special_orbit_chi(record: &CriticalOrbitRecord) -> Result<UGElement, CriticalError> {
    let blocks = record.blocks.as_ref().ok_or(CriticalError::Degenerate {
        kernel_dim: record.spectral.kernel_dim,
        orbit_dim: record.geometry.orbit_dim,
    })?;
    if blocks.morse_c != 0 {
        return Err(CriticalError::Unsupported(format!(
            "orbit is not special: Morse index of C is {}",
            blocks.morse_c
        )));
    }
    let sign = if blocks.morse_b % 2 == 0 { 1 } else { -1 };
    Ok(UGElement::new([(format!("(G/{})", record.isotropy_class), sign)]))
}

/// Distinguish two special orbits by Conley index and `χ_G`.
pub fn compare_special_orbits(
    a: &CriticalOrbitRecord,
    b: &CriticalOrbitRecord,
) -> Result<OrbitComparison, CriticalError> {
    let chi_g_a = special_orbit_chi(a)?;
    let chi_g_b = special_orbit_chi(b)?;
    let morse = |r: &CriticalOrbitRecord| r.blocks.as_ref().map_or(0, |b| b.morse_b);
    let distinct_isotropy_class = a.isotropy_class != b.isotropy_class;
    let (ma, mb) = (morse(a), morse(b));
    Ok(OrbitComparison {
        distinct_isotropy_class,
        distinct_conley_index: distinct_isotropy_class || ma != mb,
        distinct_chi_g: distinct_isotropy_class || ma.abs_diff(mb) % 2 == 1,
        chi_g_a,
        chi_g_b,
    })
}

/// Exact rational Hessian rendered as rows of strings.
pub fn format_exact(m: &Matrix<Rational>) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| {
                    if v.is_negative() {
                        format!("-{}", -v)
                    } else {
                        v.to_string()
                    }
                })
                .collect()
        })
        .collect()
}
