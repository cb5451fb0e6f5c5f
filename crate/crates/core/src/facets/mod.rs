//! Linear inequalities valid on the BME polytope: the known facet families,
//! the splitohedron catalog, tightness scans and rank-based facet checks.

mod stats;

pub use stats::{facet_stats, FamilyStats, FacetStatsReport};

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::coords::{pair_count, pairs, topo_distance_vector, x_exponents, CoordVector};
use crate::error::{BmeError, Result};
use crate::exact::{clear_denominators, format_rational, integer_rank, pow2};
use crate::trees::{enumerate_binary_trees, Leaf, PhyloTree, Split};

/// Largest `n` for which [`tight_vertices`] will enumerate trees.
pub const TIGHT_SCAN_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Caterpillar,
    IntersectingCherry,
    Split,
    CherryClade,
    CyclicOrdering,
    TreeFace,
    Kraft,
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Caterpillar => "caterpillar",
            Family::IntersectingCherry => "intersecting-cherry",
            Family::Split => "split",
            Family::CherryClade => "cherry-clade",
            Family::CyclicOrdering => "cyclic-ordering",
            Family::TreeFace => "tree-face",
            Family::Kraft => "kraft",
            Family::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = BmeError;

    fn from_str(s: &str) -> Result<Family> {
        Ok(match s {
            "caterpillar" => Family::Caterpillar,
            "intersecting-cherry" | "ic" => Family::IntersectingCherry,
            "split" => Family::Split,
            "cherry-clade" => Family::CherryClade,
            "cyclic" | "cyclic-ordering" => Family::CyclicOrdering,
            "tree-face" => Family::TreeFace,
            "kraft" => Family::Kraft,
            "custom" => Family::Custom,
            other => return Err(BmeError::domain(format!("unknown family {other:?}"))),
        })
    }
}

/// `coeffs . x  (sense)  rhs`, tagged with the family and defining leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearInequality {
    pub coeffs: CoordVector,
    pub sense: Sense,
    pub rhs: BigRational,
    pub family: Family,
    /// Leaves (or leaf sets) that define the inequality within its family.
    pub params: Vec<Vec<Leaf>>,
}

impl LinearInequality {
    pub fn n(&self) -> usize {
        self.coeffs.n()
    }

    pub fn lhs(&self, v: &CoordVector) -> Result<BigRational> {
        self.coeffs.dot(v)
    }

    /// Whether `v` satisfies the inequality.
    pub fn holds(&self, v: &CoordVector) -> Result<bool> {
        let lhs = self.lhs(v)?;
        Ok(match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        })
    }

    /// Whether `v` meets the inequality with equality.
    pub fn is_tight(&self, v: &CoordVector) -> Result<bool> {
        Ok(self.lhs(v)? == self.rhs)
    }

    /// Evaluation on a tree vector given as exponents; returns `lhs - rhs`.
    pub(crate) fn slack_on_exponents(&self, exps: &[u32]) -> BigRational {
        let mut lhs = BigRational::zero();
        for (c, &e) in self.coeffs.entries().iter().zip(exps) {
            if !c.is_zero() {
                lhs += c * BigRational::from_integer(BigInt::one() << e);
            }
        }
        lhs - &self.rhs
    }

    pub(crate) fn satisfied_by_slack(&self, slack: &BigRational) -> bool {
        match self.sense {
            Sense::Le => !slack.is_positive(),
            Sense::Ge => !slack.is_negative(),
            Sense::Eq => slack.is_zero(),
        }
    }

    /// Human-readable form such as `x12+x23-x13 <= 8`.
    pub fn render(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for ((i, j), c) in pairs(n).zip(self.coeffs.entries()) {
            if c.is_zero() {
                continue;
            }
            let var = if n <= 9 {
                format!("x{i}{j}")
            } else {
                format!("x{{{i},{j}}}")
            };
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else if out.is_empty() { "" } else { "+" };
            out.push_str(sign);
            if !mag.is_one() {
                out.push_str(&format_rational(&mag));
            }
            out.push_str(&var);
        }
        if out.is_empty() {
            out.push('0');
        }
        format!("{out} {} {}", self.sense, format_rational(&self.rhs))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family.name(),
            "params": self.params,
            "coeffs": self.coeffs.entries().iter().map(format_rational).collect::<Vec<_>>(),
            "sense": self.sense.to_string(),
            "rhs": format_rational(&self.rhs),
        })
    }
}

impl fmt::Display for LinearInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn check_leaves(n: usize, leaves: &[Leaf]) -> Result<()> {
    for (k, &l) in leaves.iter().enumerate() {
        if l == 0 || l > n {
            return Err(BmeError::domain(format!("leaf {l} outside 1..={n}")));
        }
        if leaves[..k].contains(&l) {
            return Err(BmeError::domain(format!("leaf {l} repeated")));
        }
    }
    Ok(())
}

fn sparse(n: usize, terms: &[((Leaf, Leaf), i64)]) -> CoordVector {
    let mut v = CoordVector::zeros(n);
    for &((i, j), c) in terms {
        let cur = v.get(i, j).clone();
        v.set(i, j, cur + int(c));
    }
    v
}

/// `x_ab >= 1`.
pub fn caterpillar_facet(a: Leaf, b: Leaf, n: usize) -> Result<LinearInequality> {
    check_leaves(n, &[a, b])?;
    Ok(LinearInequality {
        coeffs: sparse(n, &[((a, b), 1)]),
        sense: Sense::Ge,
        rhs: int(1),
        family: Family::Caterpillar,
        params: vec![vec![a.min(b), a.max(b)]],
    })
}

/// `x_ab + x_bc - x_ac <= 2^(n-3)`; `b` is the shared leaf.
pub fn intersecting_cherry_facet(a: Leaf, b: Leaf, c: Leaf, n: usize) -> Result<LinearInequality> {
    check_leaves(n, &[a, b, c])?;
    if n < 4 {
        return Err(BmeError::domain("intersecting-cherry inequalities need n >= 4"));
    }
    Ok(LinearInequality {
        coeffs: sparse(n, &[((a, b), 1), ((b, c), 1), ((a, c), -1)]),
        sense: Sense::Le,
        rhs: pow2(n - 3),
        family: Family::IntersectingCherry,
        params: vec![vec![a.min(c), b, a.max(c)]],
    })
}

/// `sum_{i<j in S1} x_ij <= (k-1) 2^(n-3)` over the smaller side `S1`.
pub fn split_facet(split: &Split) -> Result<LinearInequality> {
    let n = split.n();
    let (small, _) = split.shape();
    if small < 3 {
        return Err(BmeError::domain(format!(
            "split {split} has a part with {small} leaves; use the caterpillar or cherry clade-face families"
        )));
    }
    let side = split.smaller_side();
    let k = side.len();
    let mut terms = Vec::new();
    for (x, &i) in side.iter().enumerate() {
        for &j in &side[x + 1..] {
            terms.push(((i, j), 1));
        }
    }
    Ok(LinearInequality {
        coeffs: sparse(n, &terms),
        sense: Sense::Le,
        rhs: int(k as i64 - 1) * pow2(n - 3),
        family: Family::Split,
        params: vec![side],
    })
}

/// `x_ab <= 2^(n-3)`.
pub fn cherry_cladeface(a: Leaf, b: Leaf, n: usize) -> Result<LinearInequality> {
    check_leaves(n, &[a, b])?;
    if n < 3 {
        return Err(BmeError::domain("need n >= 3"));
    }
    Ok(LinearInequality {
        coeffs: sparse(n, &[((a, b), 1)]),
        sense: Sense::Le,
        rhs: pow2(n - 3),
        family: Family::CherryClade,
        params: vec![vec![a.min(b), a.max(b)]],
    })
}

/// Canonical rotation/reflection of a 5-cycle: starts at its smallest leaf,
/// second entry smaller than the last.
fn canonical_cycle(cycle: &[Leaf]) -> Vec<Leaf> {
    let len = cycle.len();
    let start = (0..len).min_by_key(|&i| cycle[i]).expect("nonempty");
    let fwd: Vec<Leaf> = (0..len).map(|k| cycle[(start + k) % len]).collect();
    let bwd: Vec<Leaf> = (0..len).map(|k| cycle[(start + len - k) % len]).collect();
    fwd.min(bwd)
}

/// `x_ab + x_bc + x_cd + x_de + x_ea <= 13` for a cyclic order of the 5 leaves.
pub fn cyclic_ordering_facet(cycle: &[Leaf]) -> Result<LinearInequality> {
    if cycle.len() != 5 {
        return Err(BmeError::domain("cyclic-ordering facets exist for n = 5 only"));
    }
    check_leaves(5, cycle)?;
    let terms: Vec<((Leaf, Leaf), i64)> =
        (0..5).map(|k| ((cycle[k], cycle[(k + 1) % 5]), 1)).collect();
    Ok(LinearInequality {
        coeffs: sparse(5, &terms),
        sense: Sense::Le,
        rhs: int(13),
        family: Family::CyclicOrdering,
        params: vec![canonical_cycle(cycle)],
    })
}

/// All 12 cyclic-ordering inequalities of `P_5`.
pub fn cyclic_ordering_family() -> Vec<LinearInequality> {
    let mut out = Vec::new();
    let rest = [2usize, 3, 4, 5];
    for p in permutations(&rest) {
        let cycle: Vec<Leaf> = std::iter::once(1).chain(p).collect();
        if cycle[1] < cycle[4] {
            out.push(cyclic_ordering_facet(&cycle).expect("valid cycle"));
        }
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// `sum d_ij(t) x_ij >= 2^(n-2) |E(t)|` for a non-binary tree `t`.
pub fn tree_face_inequality(t: &PhyloTree) -> Result<LinearInequality> {
    if t.is_binary() {
        return Err(BmeError::domain("a binary tree is a vertex, not a proper face"));
    }
    if t.internal_nodes().count() == 1 {
        return Err(BmeError::domain("the star gives the whole polytope, not a proper face"));
    }
    let n = t.n();
    Ok(LinearInequality {
        coeffs: topo_distance_vector(t),
        sense: Sense::Ge,
        rhs: pow2(n - 2) * int(t.edge_count() as i64),
        family: Family::TreeFace,
        params: t.splits().iter().map(|s| s.side().to_vec()).collect(),
    })
}

/// `sum_{j != i} x_ij = 2^(n-2)`.
pub fn kraft_equality(i: Leaf, n: usize) -> Result<LinearInequality> {
    check_leaves(n, &[i])?;
    let terms: Vec<((Leaf, Leaf), i64)> = (1..=n).filter(|&j| j != i).map(|j| ((i, j), 1)).collect();
    Ok(LinearInequality {
        coeffs: sparse(n, &terms),
        sense: Sense::Eq,
        rhs: pow2(n - 2),
        family: Family::Kraft,
        params: vec![vec![i]],
    })
}

pub fn caterpillar_family(n: usize) -> Vec<LinearInequality> {
    pairs(n).map(|(a, b)| caterpillar_facet(a, b, n).expect("distinct")).collect()
}

pub fn intersecting_cherry_family(n: usize) -> Vec<LinearInequality> {
    let mut out = Vec::new();
    for (a, c) in pairs(n) {
        for b in (1..=n).filter(|&b| b != a && b != c) {
            out.push(intersecting_cherry_facet(a, b, c, n).expect("distinct"));
        }
    }
    out
}

/// Splits with both parts of size at least 3, ordered by their canonical side.
pub fn facet_splits(n: usize) -> Vec<Split> {
    let mut out = Vec::new();
    if n < 6 {
        return out;
    }
    // sides avoiding leaf 1: subsets of 2..=n
    let others = n - 1;
    for mask in 1u64..(1u64 << others) {
        let size = mask.count_ones() as usize;
        if size < 3 || n - size < 3 {
            continue;
        }
        let side: Vec<Leaf> = (0..others).filter(|b| mask >> b & 1 == 1).map(|b| b + 2).collect();
        out.push(Split::new(n, &side).expect("proper split"));
    }
    out.sort();
    out
}

pub fn split_family(n: usize) -> Vec<LinearInequality> {
    facet_splits(n).iter().map(|s| split_facet(s).expect("large parts")).collect()
}

pub fn cherry_clade_family(n: usize) -> Vec<LinearInequality> {
    pairs(n).map(|(a, b)| cherry_cladeface(a, b, n).expect("distinct")).collect()
}

pub fn kraft_equalities(n: usize) -> Vec<LinearInequality> {
    (1..=n).map(|i| kraft_equality(i, n).expect("in range")).collect()
}

/// Half-spaces and equalities cutting out the splitohedron.
#[derive(Clone, Debug)]
pub struct SplitohedronCatalog {
    pub n: usize,
    /// Caterpillar, intersecting-cherry, split and cherry clade-face
    /// inequalities, in that order.
    pub inequalities: Vec<LinearInequality>,
    pub equalities: Vec<LinearInequality>,
}

impl SplitohedronCatalog {
    pub fn family(&self, family: Family) -> impl Iterator<Item = &LinearInequality> {
        self.inequalities.iter().filter(move |q| q.family == family)
    }

    pub fn count(&self, family: Family) -> usize {
        self.family(family).count()
    }
}

pub fn splitohedron_catalog(n: usize) -> Result<SplitohedronCatalog> {
    if n < 4 {
        return Err(BmeError::domain(format!("splitohedron needs n >= 4, got {n}")));
    }
    let mut inequalities = caterpillar_family(n);
    inequalities.extend(intersecting_cherry_family(n));
    inequalities.extend(split_family(n));
    inequalities.extend(cherry_clade_family(n));
    Ok(SplitohedronCatalog {
        n,
        inequalities,
        equalities: kraft_equalities(n),
    })
}

/// Binary trees on which `q` is tight; fails if some tree violates `q`.
pub fn tight_vertices(q: &LinearInequality, n: usize) -> Result<Vec<PhyloTree>> {
    if n != q.n() {
        return Err(BmeError::domain("inequality is over a different n"));
    }
    if n > TIGHT_SCAN_LIMIT {
        return Err(BmeError::Guard {
            operation: "tight_vertices",
            n,
            limit: TIGHT_SCAN_LIMIT,
        });
    }
    let mut out = Vec::new();
    for t in enumerate_binary_trees(n)? {
        let slack = q.slack_on_exponents(&x_exponents(&t));
        if !q.satisfied_by_slack(&slack) {
            return Err(BmeError::ValidityViolation {
                inequality: q.render(),
                counterexample: t.to_newick(),
            });
        }
        if slack.is_zero() {
            out.push(t);
        }
    }
    Ok(out)
}

/// Dimension of the affine hull of the points.
pub fn affine_rank(points: &[CoordVector]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(BmeError::domain("affine rank of an empty point set"));
    };
    if points.iter().any(|p| p.n() != first.n()) {
        return Err(BmeError::domain("points over different n"));
    }
    let rows: Vec<Vec<BigInt>> = points[1..]
        .iter()
        .map(|p| clear_denominators(p.sub(first).entries()))
        .collect();
    Ok(integer_rank(&rows))
}

/// Affine rank of the x-vectors of a set of binary trees.
pub fn tree_affine_rank(trees: &[PhyloTree]) -> usize {
    let Some(first) = trees.first() else {
        return 0;
    };
    let base: Vec<i64> = x_exponents(first).iter().map(|&e| 1i64 << e).collect();
    let rows: Vec<Vec<BigInt>> = trees[1..]
        .iter()
        .map(|t| {
            x_exponents(t)
                .iter()
                .zip(&base)
                .map(|(&e, &b)| BigInt::from((1i64 << e) - b))
                .collect()
        })
        .collect();
    integer_rank(&rows)
}

/// Rank of the normals of the catalog constraints active at `x(t)`.
pub(crate) fn active_normal_rank(constraints: &[&LinearInequality]) -> usize {
    let rows: Vec<Vec<BigInt>> = constraints
        .iter()
        .map(|q| clear_denominators(q.coeffs.entries()))
        .collect();
    integer_rank(&rows)
}

/// Groups inequalities by their tight vertex set, keeping the first of each.
pub fn dedup_by_tight_set(qs: &[LinearInequality], n: usize) -> Result<Vec<LinearInequality>> {
    let mut seen: BTreeMap<Vec<String>, ()> = BTreeMap::new();
    let mut out = Vec::new();
    for q in qs {
        let key: Vec<String> = tight_vertices(q, n)?.iter().map(|t| t.to_newick()).collect();
        if seen.insert(key, ()).is_none() {
            out.push(q.clone());
        }
    }
    Ok(out)
}

/// `(2k-1)!!` style product `m (m-2) (m-4) ...` down to 1, with `(-1)!! = 1`.
pub fn double_factorial(m: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = m;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

/// Number of binary trees on `n` leaves, `(2n-5)!!`.
pub fn tree_count(n: usize) -> BigInt {
    double_factorial(2 * n as i64 - 5)
}

pub(crate) fn dimension(n: usize) -> usize {
    pair_count(n) - n
}
