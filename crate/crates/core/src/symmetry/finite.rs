//! Finite groups given by a multiplication table, their subgroup lattices,
//! and the admissibility test for a pair `(G, H)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::SymmetryError;

/// Largest group order for which subgroups are enumerated.
pub const MAX_ENUMERATION_ORDER: usize = 256;

/// A finite group as a multiplication table, optionally acting on `R^n` by
/// coordinate permutations. `table[a][b]` is the index of `a*b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinitePermGroup {
    order: usize,
    table: Vec<Vec<usize>>,
    names: Vec<String>,
    identity: usize,
    inverse: Vec<usize>,
    /// `perms[g][i]` is where coordinate `i` is sent by `g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    perms: Option<Vec<Vec<usize>>>,
}

#[derive(Deserialize)]
struct RawGroup {
    order: usize,
    table: Vec<Vec<usize>>,
    #[serde(default)]
    names: Vec<String>,
    #[serde(default)]
    perms: Option<Vec<Vec<usize>>>,
}

impl FinitePermGroup {
    /// Validate a table: closure, identity, inverses and associativity.
    pub fn new(
        table: Vec<Vec<usize>>,
        names: Vec<String>,
        perms: Option<Vec<Vec<usize>>>,
    ) -> Result<Self, SymmetryError> {
        let order = table.len();
        let bad = |m: &str| SymmetryError::InvalidGroup(m.to_string());
        if order == 0 {
            return Err(bad("empty table"));
        }
        if table.iter().any(|r| r.len() != order || r.iter().any(|&x| x >= order)) {
            return Err(bad("table is not a square table of element indices"));
        }
        let names = if names.is_empty() {
            (0..order).map(|i| format!("g{i}")).collect()
        } else {
            names
        };
        if names.len() != order {
            return Err(bad("names length differs from order"));
        }
        if names.iter().collect::<BTreeSet<_>>().len() != order {
            return Err(bad("duplicate element names"));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| bad("no identity element"))?;
        let mut inverse = vec![0; order];
        for a in 0..order {
            inverse[a] = (0..order)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| SymmetryError::InvalidGroup(format!("element {} has no inverse", names[a])))?;
        }
        for a in 0..order {
            for b in 0..order {
                let ab = table[a][b];
                for c in 0..order {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(SymmetryError::InvalidGroup(format!(
                            "associativity fails for ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        if let Some(p) = &perms {
            if p.len() != order {
                return Err(bad("perms length differs from order"));
            }
            let n = p[0].len();
            for q in p {
                let mut seen = vec![false; n];
                if q.len() != n || q.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                    return Err(bad("perms entries must be permutations of one common size"));
                }
            }
            for a in 0..order {
                for b in 0..order {
                    let composed: Vec<usize> = (0..n).map(|i| p[a][p[b][i]]).collect();
                    if composed != p[table[a][b]] {
                        return Err(bad("perms are not a homomorphism of the table"));
                    }
                }
            }
        }
        Ok(Self {
            order,
            table,
            names,
            identity,
            inverse,
            perms,
        })
    }

    /// Load `{order, table, names, perms?}` JSON.
    pub fn from_json(text: &str) -> Result<Self, SymmetryError> {
        let raw: RawGroup =
            serde_json::from_str(text).map_err(|e| SymmetryError::InvalidGroup(format!("bad JSON: {e}")))?;
        if raw.order != raw.table.len() {
            return Err(SymmetryError::InvalidGroup(format!(
                "order {} does not match table with {} rows",
                raw.order,
                raw.table.len()
            )));
        }
        Self::new(raw.table, raw.names, raw.perms)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "order": self.order,
            "table": self.table,
            "names": self.names,
            "perms": self.perms,
        })
        .to_string()
    }

    /// Cyclic group `Z_n` with names `0..n-1` (additive notation).
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let names = (0..n).map(|a| a.to_string()).collect();
        Self::new(table, names, None).expect("cyclic table is a group")
    }

    /// Direct product; element `(a, b)` has index `a * |other| + b`.
    pub fn direct_product(&self, other: &Self) -> Self {
        let (m, k) = (self.order, other.order);
        let mut table = vec![vec![0; m * k]; m * k];
        for a in 0..m * k {
            for b in 0..m * k {
                let (a1, a2) = (a / k, a % k);
                let (b1, b2) = (b / k, b % k);
                table[a][b] = self.table[a1][b1] * k + other.table[a2][b2];
            }
        }
        let names = (0..m * k)
            .map(|a| format!("({},{})", self.names[a / k], other.names[a % k]))
            .collect();
        Self::new(table, names, None).expect("product of groups is a group")
    }

    /// The permutation group generated by `generators` (images of `0..d`),
    /// acting on `R^d` by permuting coordinates. Elements are ordered
    /// lexicographically by image vector and named in 1-based cycle notation.
    pub fn from_permutations(generators: &[Vec<usize>]) -> Result<Self, SymmetryError> {
        let d = generators.first().map_or(0, Vec::len);
        let id: Vec<usize> = (0..d).collect();
        let mut elems = BTreeSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        while let Some(p) = queue.pop_front() {
            for g in generators {
                if g.len() != d {
                    return Err(SymmetryError::InvalidGroup("generators of different degree".into()));
                }
                let q: Vec<usize> = (0..d).map(|i| g[p[i]]).collect();
                if elems.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
            if elems.len() > 40_320 {
                return Err(SymmetryError::InvalidGroup("generated group too large".into()));
            }
        }
        let elems: Vec<Vec<usize>> = elems.into_iter().collect();
        let index: BTreeMap<&Vec<usize>, usize> = elems.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let table = elems
            .iter()
            .map(|a| {
                elems
                    .iter()
                    .map(|b| index[&(0..d).map(|i| a[b[i]]).collect::<Vec<_>>()])
                    .collect()
            })
            .collect();
        let names = elems.iter().map(|p| cycle_notation(p)).collect();
        Self::new(table, names, Some(elems))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn perms(&self) -> Option<&[Vec<usize>]> {
        self.perms.as_deref()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.table[a][b] == self.table[b][a]))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Resolve a comma-separated list of element names.
    pub fn parse_subset(&self, text: &str) -> Result<Vec<usize>, SymmetryError> {
        let mut out: Vec<usize> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                self.index_of(s)
                    .ok_or_else(|| SymmetryError::UnknownElement(s.to_string()))
            })
            .collect::<Result<_, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `g K g⁻¹`, sorted.
    pub fn conjugate(&self, g: usize, k: &[usize]) -> Vec<usize> {
        let gi = self.inverse[g];
        let mut out: Vec<usize> = k.iter().map(|&x| self.table[self.table[g][x]][gi]).collect();
        out.sort_unstable();
        out
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[self.identity] = true;
        let mut out = vec![self.identity];
        let mut i = 0;
        while i < out.len() {
            let x = out[i];
            for &g in gens {
                let y = self.table[x][g];
                if !seen[y] {
                    seen[y] = true;
                    out.push(y);
                }
            }
            i += 1;
        }
        out.sort_unstable();
        out
    }

    /// Sorted, deduplicated subset that is closed under the product.
    pub fn check_subgroup(&self, subset: &[usize]) -> Result<Vec<usize>, SymmetryError> {
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() || s.iter().any(|&x| x >= self.order) {
            return Err(SymmetryError::NotASubgroup("empty subset or index out of range".into()));
        }
        let mut member = vec![false; self.order];
        for &x in &s {
            member[x] = true;
        }
        for &a in &s {
            for &b in &s {
                if !member[self.table[a][b]] {
                    return Err(SymmetryError::NotASubgroup(format!(
                        "{} * {} = {} lies outside the subset",
                        self.names[a], self.names[b], self.names[self.table[a][b]]
                    )));
                }
            }
        }
        Ok(s)
    }

    /// All subgroups of `h` (a subgroup), sorted by (size, elements).
    pub fn subgroups_of(&self, h: &[usize]) -> Result<Vec<Vec<usize>>, SymmetryError> {
        let h = self.check_subgroup(h)?;
        if h.len() > MAX_ENUMERATION_ORDER {
            return Err(SymmetryError::TooLarge(h.len()));
        }
        let cyclic: BTreeSet<Vec<usize>> = h.iter().map(|&g| self.closure(&[g])).collect();
        // Each subgroup is kept with a generating set so that joins with a
        // cyclic subgroup only need one extra generator.
        let mut found: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let mut frontier: Vec<Vec<usize>> = Vec::new();
        for c in &cyclic {
            let gen = c
                .iter()
                .copied()
                .find(|&g| self.closure(&[g]) == *c)
                .unwrap_or(self.identity);
            if found.insert(c.clone(), vec![gen]).is_none() {
                frontier.push(c.clone());
            }
        }
        while let Some(k) = frontier.pop() {
            let gens = found[&k].clone();
            for c in &cyclic {
                let g = found[c][0];
                if k.binary_search(&g).is_ok() {
                    continue;
                }
                let mut new_gens = gens.clone();
                new_gens.push(g);
                let j = self.closure(&new_gens);
                if !found.contains_key(&j) {
                    found.insert(j.clone(), new_gens);
                    frontier.push(j);
                }
            }
        }
        let mut all: Vec<Vec<usize>> = found.into_keys().collect();
        all.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        Ok(all)
    }

    /// Canonical representative of the class of `k` under conjugation by
    /// elements of `by`, with the conjugating element reaching it.
    fn class_rep(&self, k: &[usize], by: &[usize]) -> (Vec<usize>, usize) {
        by.iter()
            .map(|&g| (self.conjugate(g, k), g))
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("conjugating set contains the identity")
    }

    fn format_subset(&self, s: &[usize]) -> Vec<String> {
        s.iter().map(|&i| self.names[i].clone()).collect()
    }
}

fn cycle_notation(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut out = String::new();
    for start in 0..p.len() {
        if seen[start] || p[start] == start {
            continue;
        }
        out.push('(');
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            out.push_str(&(i + 1).to_string());
            i = p[i];
        }
        out.push(')');
    }
    if out.is_empty() {
        "id".into()
    } else {
        out
    }
}

/// A pair of subgroups of `H` that are not conjugate in `H` but become
/// conjugate in `G`, with the fusing element of `G`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
    pub k1_names: Vec<String>,
    pub k2_names: Vec<String>,
    pub conjugator: usize,
    pub conjugator_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub witness: Option<Witness>,
    pub reason: String,
}

/// Decide whether distinct `H`-conjugacy classes of subgroups of `H` stay
/// distinct as `G`-conjugacy classes.
pub fn check_admissible_finite(g: &FinitePermGroup, h: &[usize]) -> Result<AdmissibilityVerdict, SymmetryError> {
    let h = g.check_subgroup(h)?;
    let subgroups = g.subgroups_of(&h)?;
    let all: Vec<usize> = (0..g.order()).collect();
    let mut h_classes: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut by_g_class: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for k in &subgroups {
        let (h_rep, _) = g.class_rep(k, &h);
        if !h_classes.insert(h_rep.clone()) {
            continue;
        }
        let (g_rep, _) = g.class_rep(k, &all);
        if let Some(first) = by_g_class.get(&g_rep) {
            let k1 = first.clone();
            let k2 = h_rep;
            let conjugator = all
                .iter()
                .copied()
                .find(|&x| g.conjugate(x, &k1) == k2)
                .expect("same G-class implies a conjugator");
            return Ok(AdmissibilityVerdict {
                admissible: false,
                reason: format!(
                    "subgroups {{{}}} and {{{}}} are conjugate in G but not in H",
                    g.format_subset(&k1).join(","),
                    g.format_subset(&k2).join(",")
                ),
                witness: Some(Witness {
                    k1_names: g.format_subset(&k1),
                    k2_names: g.format_subset(&k2),
                    k1,
                    k2,
                    conjugator,
                    conjugator_name: g.names()[conjugator].clone(),
                }),
            });
        }
        by_g_class.insert(g_rep, h_rep);
    }
    Ok(AdmissibilityVerdict {
        admissible: true,
        witness: None,
        reason: format!(
            "{} conjugacy classes of subgroups of H remain distinct in G",
            h_classes.len()
        ),
    })
}

/// Direct check of a witness against the table: some element of `G`
/// carries `k1` onto `k2` and no element of `h` does.
pub fn verify_witness(g: &FinitePermGroup, h: &[usize], w: &Witness) -> bool {
    let fused = g.conjugate(w.conjugator, &w.k1) == w.k2;
    let separated_in_h = h.iter().all(|&x| g.conjugate(x, &w.k1) != w.k2);
    fused && separated_in_h
}
