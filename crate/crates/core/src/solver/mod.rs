//! BME tree reconstruction: an exhaustive oracle, neighbor joining, and
//! branch-and-bound over the exact splitohedron relaxation.

mod bnb;
mod exhaustive;
mod matrix;
mod nj;

pub use bnb::{solve_bnb, solve_bnb_with, BnbCertificate, BnbConfig, NodeLog, NodeOutcome};
pub use exhaustive::{solve_exhaustive, solve_exhaustive_restricted, ExhaustiveResult, EXHAUSTIVE_LIMIT};
pub use matrix::{constant_matrix, parse_csv, parse_matrix, parse_phylip, DistanceMatrix};
pub use nj::solve_nj;

use num::{BigRational, Signed};
use serde::Serialize;

use crate::coords::{pair_count, pairs, x_vector, CoordVector};
use crate::error::{BmeError, Result};
use crate::exact::pow2;
use crate::facets::{active_normal_rank, dimension, splitohedron_catalog, Family, LinearInequality};
use crate::trees::{Leaf, PhyloTree};

/// `d . x(t)` for a binary tree.
pub fn tree_value(d: &DistanceMatrix, t: &PhyloTree) -> Result<BigRational> {
    if d.n() != t.n() {
        return Err(BmeError::domain("matrix and tree have different leaf counts"));
    }
    x_vector(t)?.dot(d.as_coords())
}

/// Label of leaf `l` after merging `{a, b}` (`a < b`) into `a`.
pub(crate) fn merged_label(l: Leaf, b: Leaf) -> Leaf {
    if l > b {
        l - 1
    } else {
        l
    }
}

/// Collapses the cherry `{a, b}` into one leaf.
///
/// The merged leaf is labelled `min(a, b)` and the labels above `max(a, b)`
/// shift down by one. Over trees with the cherry, `d . x(t)` equals
/// `offset + d' . x'(t')` where `t'` is `t` with the cherry contracted.
pub fn reduce_on_cherry(d: &DistanceMatrix, a: Leaf, b: Leaf) -> Result<(DistanceMatrix, BigRational)> {
    let n = d.n();
    if a == b || a == 0 || b == 0 || a > n || b > n {
        return Err(BmeError::domain(format!("({a},{b}) is not a pair of distinct leaves")));
    }
    if n < 5 {
        return Err(BmeError::domain("reduce only from n >= 5; evaluate n = 4 directly"));
    }
    let (a, b) = (a.min(b), a.max(b));
    let m = n - 1;
    let two = BigRational::from_integer(2.into());
    let mut entries = vec![BigRational::from_integer(0.into()); pair_count(m)];
    for (i, j) in pairs(n) {
        if [i, j].contains(&a) || [i, j].contains(&b) {
            continue;
        }
        let k = crate::coords::pair_rank(merged_label(i, b), merged_label(j, b), m);
        entries[k] = &two * d.get(i, j);
    }
    for i in (1..=n).filter(|&i| i != a && i != b) {
        let (x, y) = (merged_label(i, b), a);
        entries[crate::coords::pair_rank(x.min(y), x.max(y), m)] = d.get(i, a) + d.get(i, b);
    }
    let offset = d.get(a, b) * pow2(n - 3);
    Ok((DistanceMatrix::new(CoordVector::new(m, entries)?)?, offset))
}

/// Splitohedron vertex evidence for a binary tree: the facet-incidence count
/// by formula and by direct evaluation, and the exact rank of the normals of
/// every catalog constraint active at `x(t)` together with the Kraft
/// equalities.
#[derive(Clone, Debug, Serialize)]
pub struct VertexCertificate {
    pub tree: String,
    pub n: usize,
    pub cherries: usize,
    pub caterpillar: bool,
    pub dimension: usize,
    /// `(2n-5)p + n - 3`, plus 4 for caterpillars.
    pub formula_count: usize,
    /// Tight caterpillar, intersecting-cherry and split inequalities.
    pub direct_count: usize,
    /// Tight cherry clade-faces (one per cherry), listed apart.
    pub cherry_clade_tight: usize,
    pub active_rank: usize,
    /// `active_rank = C(n,2)`: the point is a vertex of the relaxation.
    pub certified: bool,
}

pub fn certify_splitohedron_vertex(t: &PhyloTree) -> Result<VertexCertificate> {
    if !t.is_binary() {
        return Err(BmeError::domain("vertex certificates need a binary tree"));
    }
    let n = t.n();
    if n < 4 {
        return Err(BmeError::domain("vertex certificates need n >= 4"));
    }
    let x = x_vector(t)?;
    let cat = splitohedron_catalog(n)?;
    let tight: Vec<&LinearInequality> = cat
        .inequalities
        .iter()
        .filter(|q| q.is_tight(&x).expect("same dimension"))
        .collect();
    let direct_count = tight
        .iter()
        .filter(|q| matches!(q.family, Family::Caterpillar | Family::IntersectingCherry | Family::Split))
        .count();
    let cherry_clade_tight = tight.iter().filter(|q| q.family == Family::CherryClade).count();
    let mut active: Vec<&LinearInequality> = tight.clone();
    active.extend(cat.equalities.iter());
    let active_rank = active_normal_rank(&active);
    let p = t.cherries().len();
    let caterpillar = t.is_caterpillar()?.is_some();
    let formula_count = (2 * n - 5) * p + n - 3 + if caterpillar { 4 } else { 0 };
    Ok(VertexCertificate {
        tree: t.to_newick(),
        n,
        cherries: p,
        caterpillar,
        dimension: dimension(n),
        formula_count,
        direct_count,
        cherry_clade_tight,
        active_rank,
        certified: active_rank == pair_count(n),
    })
}

/// Distances along a tree with the given edge lengths, indexed like
/// [`PhyloTree::edges`].
pub fn additive_matrix(t: &PhyloTree, lengths: &[BigRational]) -> Result<DistanceMatrix> {
    let edges = t.edges();
    if lengths.len() != edges.len() {
        return Err(BmeError::domain("one length per edge is required"));
    }
    if lengths.iter().any(|l| l.is_negative()) {
        return Err(BmeError::domain("edge lengths must be nonnegative"));
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); t.node_count()];
    for (k, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    let n = t.n();
    let mut full = vec![vec![BigRational::from_integer(0.into()); n]; n];
    for src in 0..n {
        let mut stack = vec![(src, usize::MAX, BigRational::from_integer(0.into()))];
        while let Some((v, parent, acc)) = stack.pop() {
            if v < n {
                full[src][v] = acc.clone();
            }
            for &(w, k) in &adj[v] {
                if w != parent {
                    stack.push((w, v, &acc + &lengths[k]));
                }
            }
        }
    }
    DistanceMatrix::from_square(&full)
}

/// Total edge length.
pub fn tree_length(lengths: &[BigRational]) -> BigRational {
    lengths.iter().fold(BigRational::from_integer(0.into()), |acc, l| acc + l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{enumerate_binary_trees, parse_newick};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(n: usize, rng: &mut StdRng) -> DistanceMatrix {
        let entries = (0..pair_count(n))
            .map(|_| BigRational::new(rng.gen_range(0..100).into(), rng.gen_range(1..7).into()))
            .collect();
        DistanceMatrix::new(CoordVector::new(n, entries).unwrap()).unwrap()
    }

    #[test]
    fn reduction_identity_holds_on_every_tree() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 6;
        let d = random_matrix(n, &mut rng);
        for t in enumerate_binary_trees(n).unwrap() {
            for (a, b) in t.cherries() {
                let (dr, offset) = reduce_on_cherry(&d, a, b).unwrap();
                let small = t.contract_clade(&[a, b], a).unwrap();
                let lhs = tree_value(&d, &t).unwrap();
                assert_eq!(lhs, offset + tree_value(&dr, &small).unwrap());
            }
        }
    }

    #[test]
    fn reduction_matches_restricted_oracle() {
        let mut rng = StdRng::seed_from_u64(8);
        for n in [6, 7] {
            for _ in 0..3 {
                let d = random_matrix(n, &mut rng);
                let (a, b) = (2, n - 1);
                let (dr, offset) = reduce_on_cherry(&d, a, b).unwrap();
                let reduced = solve_exhaustive(&dr).unwrap().value + offset;
                let direct = enumerate_binary_trees(n)
                    .unwrap()
                    .filter(|t| t.cherries().contains(&(a, b)))
                    .map(|t| tree_value(&d, &t).unwrap())
                    .min()
                    .unwrap();
                assert_eq!(reduced, direct);
            }
        }
    }

    #[test]
    fn reduction_edge_cases() {
        let zero = constant_matrix(6, BigRational::from_integer(0.into()));
        let (dr, off) = reduce_on_cherry(&zero, 5, 2).unwrap();
        assert_eq!(dr, constant_matrix(5, BigRational::from_integer(0.into())));
        assert_eq!(off, BigRational::from_integer(0.into()));
        assert!(reduce_on_cherry(&constant_matrix(4, BigRational::from_integer(1.into())), 1, 2).is_err());
        assert!(reduce_on_cherry(&zero, 3, 3).is_err());
    }

    #[test]
    fn certificates_for_snowflake_and_caterpillar() {
        let snow = certify_splitohedron_vertex(&parse_newick("((1,2),(3,4),(5,6));").unwrap()).unwrap();
        assert_eq!((snow.formula_count, snow.direct_count, snow.dimension), (24, 24, 9));
        assert!(snow.certified && !snow.caterpillar);
        let cat = certify_splitohedron_vertex(&parse_newick("((1,2),3,4,(5,6));").unwrap());
        assert!(cat.is_err());
        let cat = certify_splitohedron_vertex(&parse_newick("((1,2),3,(4,(5,6)));").unwrap()).unwrap();
        assert_eq!((cat.formula_count, cat.direct_count), (21, 21));
        assert!(cat.certified && cat.caterpillar);
        assert_eq!(cat.cherry_clade_tight, 2);
    }

    #[test]
    fn seven_leaf_caterpillar_lies_inside_a_segment() {
        // x(t) +- eps*v stays in the relaxation, so x(t) is not one of its vertices
        let t = parse_newick("(1,((((2,3),4),5),6),7);").unwrap();
        let x = x_vector(&t).unwrap();
        let mut v = CoordVector::zeros(7);
        for (i, j, c) in [(2, 5, 1), (2, 6, -1), (3, 5, 1), (3, 6, -1), (4, 5, -2), (4, 6, 2)] {
            v.set(i, j, BigRational::new(c.into(), 1000.into()));
        }
        let cat = splitohedron_catalog(7).unwrap();
        for sign in [1, -1] {
            let mut p = x.clone();
            for (i, j) in pairs(7) {
                p.set(i, j, x.get(i, j) + v.get(i, j) * BigRational::from_integer(sign.into()));
            }
            assert!(cat.inequalities.iter().chain(&cat.equalities).all(|q| q.holds(&p).unwrap()));
        }
        let c = certify_splitohedron_vertex(&t).unwrap();
        assert_eq!((c.formula_count, c.direct_count, c.active_rank), (26, 26, 19));
        assert!(!c.certified);
    }

    #[test]
    fn additive_values_are_scaled_tree_length() {
        let t = parse_newick("((1,2),3,(4,(5,6)));").unwrap();
        let lengths: Vec<BigRational> = (1..=9).map(|k| BigRational::new(k.into(), 3.into())).collect();
        let d = additive_matrix(&t, &lengths).unwrap();
        let want = tree_length(&lengths) * pow2(4);
        assert_eq!(tree_value(&d, &t).unwrap(), want);
        let unit = additive_matrix(&t, &vec![BigRational::from_integer(1.into()); 9]).unwrap();
        assert_eq!(solve_exhaustive(&unit).unwrap().value, BigRational::from_integer(144.into()));
        assert_eq!(solve_exhaustive(&unit).unwrap().tree, t);
    }
}
