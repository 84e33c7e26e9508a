//! Group actions on `R^n`: products of SO(2) block rotations and finite
//! coordinate-permutation groups. Provides orbit geometry at a point and
//! admissibility of subgroup pairs.

mod finite;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{dot, norm, orthogonal_complement, orthonormalize};

pub use finite::{
    check_admissible_finite, verify_witness, AdmissibilityVerdict, FinitePermGroup, Witness, MAX_ENUMERATION_ORDER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid block rotation: {0}")]
    InvalidBlocks(String),
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("unknown group element `{0}`")]
    UnknownElement(String),
    #[error("subgroup of order {0} exceeds the enumeration limit")]
    TooLarge(usize),
    #[error("point has {got} coordinates, action is on R^{expected}")]
    Dimension { expected: usize, got: usize },
}

/// A torus `T^r` acting on `R^n` by rotating coordinate planes. Generator
/// `g` rotates every block listed in `generators[g]` by the same angle;
/// a block listed under several generators turns by the sum of their angles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockRotation {
    n: usize,
    blocks: Vec<(usize, usize)>,
    fixed_indices: Vec<usize>,
    generators: Vec<Vec<usize>>,
}

impl BlockRotation {
    pub fn new(n: usize, blocks: Vec<(usize, usize)>, generators: Vec<Vec<usize>>) -> Result<Self, SymmetryError> {
        let mut used = vec![false; n];
        for &(i, j) in &blocks {
            if i >= n || j >= n || i == j {
                return Err(SymmetryError::InvalidBlocks(format!(
                    "block ({i},{j}) invalid in R^{n}"
                )));
            }
            for k in [i, j] {
                if std::mem::replace(&mut used[k], true) {
                    return Err(SymmetryError::InvalidBlocks(format!("index {k} used by two blocks")));
                }
            }
        }
        for g in &generators {
            if g.is_empty() || g.iter().any(|&b| b >= blocks.len()) {
                return Err(SymmetryError::InvalidBlocks(
                    "each generator must list at least one existing block".into(),
                ));
            }
        }
        let fixed_indices = (0..n).filter(|&k| !used[k]).collect();
        Ok(Self {
            n,
            blocks,
            fixed_indices,
            generators,
        })
    }

    /// One SO(2) turning all blocks simultaneously.
    pub fn diagonal(n: usize, blocks: Vec<(usize, usize)>) -> Result<Self, SymmetryError> {
        let all = (0..blocks.len()).collect::<Vec<_>>();
        let gens = if all.is_empty() { vec![] } else { vec![all] };
        Self::new(n, blocks, gens)
    }

    /// One independent SO(2) per block.
    pub fn torus(n: usize, blocks: Vec<(usize, usize)>) -> Result<Self, SymmetryError> {
        let gens = (0..blocks.len()).map(|b| vec![b]).collect();
        Self::new(n, blocks, gens)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn fixed_indices(&self) -> &[usize] {
        &self.fixed_indices
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// Infinitesimal rotation `J_g x` of generator `g`.
    pub fn generator_field(&self, g: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &b in &self.generators[g] {
            let (i, j) = self.blocks[b];
            out[i] = -x[j];
            out[j] = x[i];
        }
        out
    }

    /// Apply the group element with one angle per generator.
    pub fn rotate(&self, angles: &[f64], x: &[f64]) -> Vec<f64> {
        assert_eq!(angles.len(), self.generators.len(), "one angle per generator");
        let mut theta = vec![0.0; self.blocks.len()];
        for (g, blocks) in self.generators.iter().enumerate() {
            for &b in blocks {
                theta[b] += angles[g];
            }
        }
        let mut out = x.to_vec();
        for (b, &(i, j)) in self.blocks.iter().enumerate() {
            let (s, c) = theta[b].sin_cos();
            out[i] = c * x[i] - s * x[j];
            out[j] = s * x[i] + c * x[j];
        }
        out
    }

    /// Whether the stabilizer of `x` in the torus is trivial. With
    /// `M[b][g] = 1` when generator `g` turns active block `b`, the
    /// stabilizer is `{θ : Mθ ∈ 2πZ}`; it is trivial exactly when `M` has
    /// full column rank and its maximal minors are coprime.
    fn stabilizer_trivial(&self, x: &[f64], tol: f64) -> bool {
        let r = self.generators.len();
        if r == 0 {
            return true;
        }
        let active: Vec<usize> = (0..self.blocks.len())
            .filter(|&b| {
                let (i, j) = self.blocks[b];
                x[i].hypot(x[j]) > tol
            })
            .collect();
        if active.len() < r {
            return false;
        }
        let m: Vec<Vec<i128>> = active
            .iter()
            .map(|&b| (0..r).map(|g| i128::from(self.generators[g].contains(&b))).collect())
            .collect();
        let mut gcd = 0i128;
        for rows in combinations(active.len(), r) {
            let sub: Vec<Vec<i128>> = rows.iter().map(|&i| m[i].clone()).collect();
            gcd = num_integer::gcd(gcd, bareiss_det(sub));
            if gcd == 1 {
                return true;
            }
        }
        false
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Fraction-free Gaussian elimination; exact for integer matrices.
fn bareiss_det(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupAction {
    BlockRotation(BlockRotation),
    FinitePerm(FinitePermGroup),
}

impl GroupAction {
    /// Dimension of the space acted on, when the action fixes it.
    pub fn dim(&self) -> Option<usize> {
        match self {
            GroupAction::BlockRotation(b) => Some(b.dim()),
            GroupAction::FinitePerm(g) => g.perms().map(|p| p[0].len()),
        }
    }
}

/// Tangent and normal spaces of the orbit through a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitGeometry {
    pub point: Vec<f64>,
    pub tangent_basis: Vec<Vec<f64>>,
    pub normal_basis: Vec<Vec<f64>>,
    pub isotropy_trivial: bool,
    pub orbit_dim: usize,
}

/// Orbit tangent space, its orthogonal complement and the isotropy verdict
/// at `q0`.
pub fn orbit_geometry(action: &GroupAction, q0: &[f64]) -> Result<OrbitGeometry, SymmetryError> {
    let n = q0.len();
    if let Some(d) = action.dim() {
        if d != n {
            return Err(SymmetryError::Dimension { expected: d, got: n });
        }
    }
    let tol = 1e-10 * (1.0 + norm(q0));
    let (tangent_basis, isotropy_trivial) = match action {
        GroupAction::BlockRotation(b) => {
            let fields: Vec<Vec<f64>> = (0..b.generators.len())
                .map(|g| b.generator_field(g, q0))
                .filter(|v| norm(v) >= tol)
                .collect();
            (orthonormalize(&fields, tol), b.stabilizer_trivial(q0, tol))
        }
        GroupAction::FinitePerm(g) => {
            let trivial = match g.perms() {
                // without coordinate permutations the action is trivial
                None => g.order() == 1,
                Some(perms) => (0..g.order())
                    .filter(|&e| e != g.identity())
                    .all(|e| (0..n).any(|i| (q0[perms[e][i]] - q0[i]).abs() > tol)),
            };
            (Vec::new(), trivial)
        }
    };
    let normal_basis = orthogonal_complement(&tangent_basis, n);
    Ok(OrbitGeometry {
        point: q0.to_vec(),
        orbit_dim: tangent_basis.len(),
        tangent_basis,
        normal_basis,
        isotropy_trivial,
    })
}

/// Distance from `x` to the group orbit of `q0`. Rotation groups are
/// handled by coordinate ascent over the generator angles.
pub fn distance_to_orbit(action: &GroupAction, q0: &[f64], x: &[f64]) -> f64 {
    let dist = |y: &[f64]| norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    match action {
        GroupAction::BlockRotation(b) => {
            let r = b.generators.len();
            let mut angles = vec![0.0; r];
            for _ in 0..50 {
                let before = angles.clone();
                for g in 0..r {
                    let y = b.rotate(&angles, q0);
                    let jy = b.generator_field(g, &y);
                    let mut along = 0.0;
                    for &blk in &b.generators[g] {
                        let (i, j) = b.blocks[blk];
                        along += x[i] * y[i] + x[j] * y[j];
                    }
                    let across = dot(x, &jy);
                    if along.hypot(across) > 0.0 {
                        angles[g] += across.atan2(along);
                    }
                }
                if angles.iter().zip(&before).all(|(a, c)| (a - c).abs() < 1e-14) {
                    break;
                }
            }
            dist(&b.rotate(&angles, q0))
        }
        GroupAction::FinitePerm(g) => match g.perms() {
            None => dist(q0),
            Some(perms) => perms
                .iter()
                .map(|p| dist(&(0..q0.len()).map(|i| q0[p[i]]).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min),
        },
    }
}

/// The pair `(Γ×S¹, {e}×S¹)` is admissible for every compact `Γ`: the
/// factor `{e}×S¹` is central, so each of its subgroups is normal in
/// `Γ×S¹` and conjugacy classes on either side are singletons.
pub fn admissible_gamma_cross_s1() -> AdmissibilityVerdict {
    AdmissibilityVerdict {
        admissible: true,
        witness: None,
        reason: "{e}×S¹ is central in Γ×S¹, so its subgroups are normal and no conjugacy classes fuse".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn orthonormal(g: &OrbitGeometry) -> bool {
        let all: Vec<&Vec<f64>> = g.tangent_basis.iter().chain(&g.normal_basis).collect();
        all.len() == g.point.len()
            && all.iter().enumerate().all(|(i, a)| {
                all.iter()
                    .enumerate()
                    .all(|(j, b)| (dot(a, b) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12)
            })
    }

    #[test]
    fn circle_orbit_in_the_plane() {
        let a = GroupAction::BlockRotation(BlockRotation::diagonal(2, vec![(0, 1)]).unwrap());
        let g = orbit_geometry(&a, &[1.0, 0.0]).unwrap();
        assert_eq!(g.orbit_dim, 1);
        assert!(g.isotropy_trivial);
        assert!((g.tangent_basis[0][1].abs() - 1.0).abs() < 1e-15);
        assert!(orthonormal(&g));

        let o = orbit_geometry(&a, &[0.0, 0.0]).unwrap();
        assert_eq!(o.orbit_dim, 0);
        assert!(!o.isotropy_trivial);
        assert_eq!(o.normal_basis.len(), 2);
    }

    #[test]
    fn diagonal_action_on_two_blocks() {
        let a = GroupAction::BlockRotation(BlockRotation::diagonal(4, vec![(0, 1), (2, 3)]).unwrap());
        let g = orbit_geometry(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(g.orbit_dim, 1);
        assert!(g.isotropy_trivial);
        assert!((g.tangent_basis[0][1].abs() - 1.0).abs() < 1e-15);
        assert!(orthonormal(&g));
    }

    #[test]
    fn torus_isotropy_needs_every_factor() {
        let t = BlockRotation::torus(4, vec![(0, 1), (2, 3)]).unwrap();
        let a = GroupAction::BlockRotation(t.clone());
        assert!(!orbit_geometry(&a, &[1.0, 0.0, 0.0, 0.0]).unwrap().isotropy_trivial);
        let g = orbit_geometry(&a, &[1.0, 0.0, 0.5, 0.5]).unwrap();
        assert!(g.isotropy_trivial);
        assert_eq!(g.orbit_dim, 2);
        // generators (b0+b1) and (b1): minors coprime
        let skew = BlockRotation::new(4, vec![(0, 1), (2, 3)], vec![vec![0, 1], vec![1]]).unwrap();
        assert!(skew.stabilizer_trivial(&[1.0, 0.0, 1.0, 0.0], 1e-10));
        // generators (b0+b1) twice over a single block pair: rank deficient
        let dup = BlockRotation::new(4, vec![(0, 1), (2, 3)], vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert!(!dup.stabilizer_trivial(&[1.0, 0.0, 1.0, 0.0], 1e-10));
    }

    #[test]
    fn rotation_preserves_norm_and_composes() {
        let b = BlockRotation::diagonal(5, vec![(0, 1), (3, 4)]).unwrap();
        let x = [0.3, -1.2, 7.0, 0.5, 2.0];
        let y = b.rotate(&[0.7], &x);
        assert!((norm(&x) - norm(&y)).abs() < 1e-12);
        assert_eq!(y[2], 7.0);
        let z = b.rotate(&[-0.7], &y);
        assert!(x.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn rejects_overlapping_blocks() {
        assert!(BlockRotation::diagonal(3, vec![(0, 1), (1, 2)]).is_err());
        assert!(BlockRotation::diagonal(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn permutation_isotropy() {
        let s2 = FinitePermGroup::from_permutations(&[vec![1, 0]]).unwrap();
        let a = GroupAction::FinitePerm(s2);
        assert!(orbit_geometry(&a, &[1.0, 0.0]).unwrap().isotropy_trivial);
        assert!(!orbit_geometry(&a, &[1.0, 1.0]).unwrap().isotropy_trivial);
        assert_eq!(orbit_geometry(&a, &[1.0, 0.0]).unwrap().orbit_dim, 0);
    }

    #[test]
    fn determinant_is_exact() {
        assert_eq!(bareiss_det(vec![vec![2, 1], vec![1, 1]]), 1);
        assert_eq!(bareiss_det(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]), 2);
        assert_eq!(bareiss_det(vec![vec![1, 1], vec![1, 1]]), 0);
    }
}
