//! Coordinate vectors indexed by leaf pairs in lexicographic order
//! `12, 13, ..., 1n, 23, ..., (n-1)n`.
//!
//! Tree vectors use the scaled Pauplin weights `x_ij = 2^(n-2-l_ij)`, where
//! `l_ij` counts the internal nodes on the path between leaves `i` and `j`.
//! The unscaled weights are available through [`CoordVector::c_view`].

use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{BmeError, Result};
use crate::exact::{format_rational, log2_exact, parse_rational, pow2};
use crate::trees::{Leaf, PhyloTree};

/// Number of leaf pairs, `C(n, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// 0-based lexicographic rank of the pair `(i, j)`, `1 <= i < j <= n`.
pub fn pair_index(i: Leaf, j: Leaf, n: usize) -> Result<usize> {
    if i == 0 || i >= j || j > n {
        return Err(BmeError::domain(format!(
            "pair ({i},{j}) is not 1 <= i < j <= {n}"
        )));
    }
    Ok(pair_rank(i, j, n))
}

/// Unchecked [`pair_index`]; the pair may be given in either order.
#[inline]
pub(crate) fn pair_rank(i: Leaf, j: Leaf, n: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    // pairs (a, .) for a < i come first
    (i - 1) * n - (i - 1) * i / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(index: usize, n: usize) -> Result<(Leaf, Leaf)> {
    if index >= pair_count(n) {
        return Err(BmeError::domain(format!("pair index {index} out of range for n = {n}")));
    }
    let mut rest = index;
    for i in 1..n {
        let row = n - i;
        if rest < row {
            return Ok((i, i + 1 + rest));
        }
        rest -= row;
    }
    unreachable!()
}

/// Iterator over all pairs in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (Leaf, Leaf)> {
    (1..=n).flat_map(move |i| (i + 1..=n).map(move |j| (i, j)))
}

/// Exact rational vector over the `C(n,2)` leaf pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoordVector {
    n: usize,
    entries: Vec<BigRational>,
}

impl CoordVector {
    pub fn new(n: usize, entries: Vec<BigRational>) -> Result<CoordVector> {
        if entries.len() != pair_count(n) {
            return Err(BmeError::domain(format!(
                "vector for n = {n} needs {} entries, got {}",
                pair_count(n),
                entries.len()
            )));
        }
        Ok(CoordVector { n, entries })
    }

    pub fn zeros(n: usize) -> CoordVector {
        CoordVector {
            n,
            entries: vec![BigRational::zero(); pair_count(n)],
        }
    }

    pub fn from_integers(n: usize, values: &[i64]) -> Result<CoordVector> {
        CoordVector::new(
            n,
            values.iter().map(|&v| BigRational::from_integer(v.into())).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<BigRational> {
        self.entries
    }

    /// Entry for the unordered pair `{i, j}`.
    pub fn get(&self, i: Leaf, j: Leaf) -> &BigRational {
        &self.entries[pair_rank(i, j, self.n)]
    }

    pub fn set(&mut self, i: Leaf, j: Leaf, value: BigRational) {
        let k = pair_rank(i, j, self.n);
        self.entries[k] = value;
    }

    /// Exact inner product.
    pub fn dot(&self, other: &CoordVector) -> Result<BigRational> {
        if self.n != other.n {
            return Err(BmeError::domain(format!(
                "dot product of vectors for n = {} and n = {}",
                self.n, other.n
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .fold(BigRational::zero(), |acc, (a, b)| acc + a * b))
    }

    /// The unscaled Pauplin view `c = x / 2^(n-2)`.
    pub fn c_view(&self) -> CoordVector {
        let scale = pow2(self.n.saturating_sub(2));
        CoordVector {
            n: self.n,
            entries: self.entries.iter().map(|v| v / &scale).collect(),
        }
    }

    pub fn sub(&self, other: &CoordVector) -> CoordVector {
        CoordVector {
            n: self.n,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for CoordVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Serialize, Deserialize)]
struct CoordWire {
    n: usize,
    entries: Vec<String>,
}

impl Serialize for CoordVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoordWire {
            n: self.n,
            entries: self.entries.iter().map(format_rational).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoordVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = CoordWire::deserialize(d)?;
        let entries = wire
            .entries
            .iter()
            .map(|e| parse_rational(e))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        CoordVector::new(wire.n, entries).map_err(D::Error::custom)
    }
}

/// `log2 x_ij` for every pair of a binary tree, in lexicographic order.
pub(crate) fn x_exponents(t: &PhyloTree) -> Vec<u32> {
    let n = t.n();
    let dist = t.leaf_distances();
    // binary tree: l_ij = d_ij - 1, so x_ij = 2^(n - 1 - d_ij)
    pairs(n)
        .map(|(i, j)| (n as u32 - 1) - dist[i - 1][j - 1])
        .collect()
}

/// Scaled BME vector `x(t)` of a binary tree.
pub fn x_vector(t: &PhyloTree) -> Result<CoordVector> {
    if !t.is_binary() {
        return Err(BmeError::domain(
            "x(t) is defined for binary trees; non-binary trees give faces",
        ));
    }
    let entries = x_exponents(t)
        .into_iter()
        .map(|e| BigRational::from_integer(BigInt::one() << e))
        .collect();
    Ok(CoordVector { n: t.n(), entries })
}

/// Per-leaf residuals `sum_{j != i} v_ij - 2^(n-2)`; all zero iff Kraft holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KraftReport {
    pub residuals: Vec<BigRational>,
}

impl KraftReport {
    pub fn passes(&self) -> bool {
        self.residuals.iter().all(|r| r.is_zero())
    }
}

pub fn kraft_check(v: &CoordVector) -> KraftReport {
    let n = v.n;
    let target = pow2(n.saturating_sub(2));
    let residuals = (1..=n)
        .map(|i| {
            let sum = (1..=n)
                .filter(|&j| j != i)
                .fold(BigRational::zero(), |acc, j| acc + v.get(i, j));
            sum - &target
        })
        .collect();
    KraftReport { residuals }
}

/// Edge counts of the leaf-to-leaf paths of any tree.
pub fn topo_distance_vector(t: &PhyloTree) -> CoordVector {
    let dist = t.leaf_distances();
    let entries = pairs(t.n())
        .map(|(i, j)| BigRational::from_integer(dist[i - 1][j - 1].into()))
        .collect();
    CoordVector { n: t.n(), entries }
}

pub fn dot(a: &CoordVector, b: &CoordVector) -> Result<BigRational> {
    a.dot(b)
}

/// The binary tree whose vector is `v`, if there is one.
///
/// Peels cherries (pairs at the maximal value `2^(n-3)`), contracts them,
/// and finally checks the round trip `x(t) = v`.
pub fn tree_from_x(v: &CoordVector) -> Option<PhyloTree> {
    let n = v.n;
    if n < 3 || !kraft_check(v).passes() {
        return None;
    }
    let mut exps = Vec::with_capacity(v.len());
    for e in &v.entries {
        exps.push(log2_exact(e)? as u32);
    }
    let tree = peel(n, exps)?;
    (x_vector(&tree).ok()? == *v).then_some(tree)
}

fn peel(n: usize, exps: Vec<u32>) -> Option<PhyloTree> {
    if n == 3 {
        return exps.iter().all(|&e| e == 0).then(|| PhyloTree::star(3).expect("star"));
    }
    let top = n as u32 - 3;
    let (a, b) = pairs(n).zip(&exps).find(|(_, &e)| e == top).map(|(p, _)| p)?;
    // contract {a, b} into leaf a; survivors above b shift down by one
    let new_label = |l: Leaf| if l > b { l - 1 } else { l };
    let m = n - 1;
    let mut reduced = vec![0u32; crate::coords::pair_count(m)];
    for (i, j) in pairs(n) {
        if j == b || i == b {
            continue;
        }
        let e = exps[pair_rank(i, j, n)];
        let (ni, nj) = (new_label(i), new_label(j));
        let value = if i == a || j == a {
            let other = if i == a { j } else { i };
            if exps[pair_rank(b, other, n)] != e {
                return None;
            }
            e
        } else {
            e.checked_sub(1)?
        };
        reduced[pair_rank(ni, nj, m)] = value;
    }
    let small = peel(m, reduced)?;
    small
        .expand_leaf_to_cherry(a, a, b, &|l| if l >= b { l + 1 } else { l })
        .ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{enumerate_binary_trees, parse_newick};

    fn ints(v: &CoordVector) -> Vec<i64> {
        v.entries().iter().map(|q| q.to_integer().try_into().unwrap()).collect()
    }

    #[test]
    fn pair_indexing() {
        assert_eq!(pair_index(1, 2, 5).unwrap(), 0);
        assert_eq!(pair_index(2, 3, 5).unwrap(), 4);
        assert_eq!(pair_index(4, 5, 5).unwrap(), 9);
        assert!(pair_index(3, 3, 5).is_err());
        assert!(pair_index(3, 2, 5).is_err());
        assert!(pair_index(1, 6, 5).is_err());
        for n in 2..9 {
            for (k, (i, j)) in pairs(n).enumerate() {
                assert_eq!(pair_index(i, j, n).unwrap(), k);
                assert_eq!(pair_from_index(k, n).unwrap(), (i, j));
            }
            assert!(pair_from_index(pair_count(n), n).is_err());
        }
    }

    #[test]
    fn small_x_vectors() {
        let star = PhyloTree::star(3).unwrap();
        let x = x_vector(&star).unwrap();
        assert_eq!(ints(&x), vec![1, 1, 1]);
        assert!(kraft_check(&x).passes());
        let t = parse_newick("((1,2),(3,4));").unwrap();
        assert_eq!(ints(&x_vector(&t).unwrap()), vec![2, 1, 1, 1, 1, 2]);
        assert!(x_vector(&PhyloTree::star(5).unwrap()).is_err());
    }

    #[test]
    fn kraft_residuals() {
        let ones = CoordVector::from_integers(5, &[1; 10]).unwrap();
        let r = kraft_check(&ones);
        assert!(r.residuals.iter().all(|q| *q == BigRational::from_integer((-4).into())));
        for t in enumerate_binary_trees(5).unwrap() {
            let x = x_vector(&t).unwrap();
            assert!(kraft_check(&x).passes());
            assert!(ints(&x).iter().all(|v| [1, 2, 4].contains(v)));
        }
    }

    #[test]
    fn topological_distances() {
        let center = parse_newick("(1,2,3,(4,5));").unwrap();
        let d = topo_distance_vector(&center);
        assert_eq!(ints(&d), vec![2, 2, 3, 3, 2, 3, 3, 3, 3, 2]);
        assert_eq!(ints(&topo_distance_vector(&PhyloTree::star(3).unwrap())), vec![2, 2, 2]);
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let d = topo_distance_vector(&t);
        assert_eq!(d.get(1, 2), &BigRational::from_integer(2.into()));
        assert_eq!(d.get(1, 3), &BigRational::from_integer(3.into()));
    }

    #[test]
    fn dot_products() {
        let center = parse_newick("(1,2,3,(4,5));").unwrap();
        let d = topo_distance_vector(&center);
        let forty_eight = BigRational::from_integer(48.into());
        for t in enumerate_binary_trees(5).unwrap() {
            let v = d.dot(&x_vector(&t).unwrap()).unwrap();
            if t.refines(&center).unwrap() {
                assert_eq!(v, forty_eight);
            } else {
                assert!(v > forty_eight);
            }
        }
        assert!(d.dot(&CoordVector::zeros(5)).unwrap().is_zero());
        assert!(d.dot(&CoordVector::zeros(4)).is_err());
    }

    #[test]
    fn inverse_recovers_trees() {
        for n in 3..=6 {
            for t in enumerate_binary_trees(n).unwrap() {
                let back = tree_from_x(&x_vector(&t).unwrap()).unwrap();
                assert_eq!(back, t);
            }
        }
        assert!(tree_from_x(&CoordVector::from_integers(5, &[1; 10]).unwrap()).is_none());
        let trees: Vec<_> = enumerate_binary_trees(4).unwrap().collect();
        let a = x_vector(&trees[0]).unwrap();
        let b = x_vector(&trees[1]).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let mid = CoordVector::new(
            4,
            a.entries().iter().zip(b.entries()).map(|(p, q)| (p + q) * &half).collect(),
        )
        .unwrap();
        assert!(tree_from_x(&mid).is_none());
    }

    #[test]
    fn c_view_and_json() {
        let t = parse_newick("((1,2),(3,4));").unwrap();
        let x = x_vector(&t).unwrap();
        let c = x.c_view();
        assert_eq!(c.get(1, 2), &BigRational::new(1.into(), 2.into()));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"n":4,"entries":["1/2","1/4","1/4","1/4","1/4","1/2"]}"#);
        let back: CoordVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CoordVector>(r#"{"n":4,"entries":["1"]}"#).is_err());
    }
}
