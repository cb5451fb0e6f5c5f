use num::{BigRational, Zero};

use super::DistanceMatrix;
use crate::error::{BmeError, Result};
use crate::trees::{Leaf, PhyloTree};

/// Neighbor joining in exact arithmetic.
///
/// At each step the pair minimizing `(r-2) d_ij - R_i - R_j` is joined; ties
/// go to the pair whose smallest leaf labels are lexicographically first.
pub fn solve_nj(d: &DistanceMatrix) -> Result<PhyloTree> {
    let n = d.n();
    if n < 3 {
        return Err(BmeError::domain(format!("neighbor joining needs n >= 3, got {n}")));
    }
    if n == 3 {
        return PhyloTree::star(3);
    }
    let total = 2 * n - 2;
    let mut dist = vec![vec![BigRational::zero(); total]; total];
    for i in 1..=n {
        for j in i + 1..=n {
            let v = d.get(i, j);
            dist[i - 1][j - 1] = v.clone();
            dist[j - 1][i - 1] = v;
        }
    }
    // active node ids with the smallest leaf label below each
    let mut active: Vec<(usize, Leaf)> = (0..n).map(|i| (i, i + 1)).collect();
    let mut edges = Vec::with_capacity(total - 1);
    let mut next = n;
    while active.len() > 3 {
        let r = active.len();
        let sums: Vec<BigRational> = active
            .iter()
            .map(|&(u, _)| active.iter().fold(BigRational::zero(), |acc, &(v, _)| acc + &dist[u][v]))
            .collect();
        let scale = BigRational::from_integer((r as i64 - 2).into());
        let mut best: Option<(BigRational, (Leaf, Leaf), usize, usize)> = None;
        for a in 0..r {
            for b in a + 1..r {
                let (u, lu) = active[a];
                let (v, lv) = active[b];
                let q = &scale * &dist[u][v] - &sums[a] - &sums[b];
                let key = (lu.min(lv), lu.max(lv));
                let better = match &best {
                    None => true,
                    Some((bq, bk, _, _)) => q < *bq || (q == *bq && key < *bk),
                };
                if better {
                    best = Some((q, key, a, b));
                }
            }
        }
        let (_, _, a, b) = best.expect("at least one pair");
        let ((u, lu), (v, lv)) = (active[a], active[b]);
        let w = next;
        next += 1;
        edges.push((w, u));
        edges.push((w, v));
        let duv = dist[u][v].clone();
        for &(k, _) in &active {
            if k == u || k == v {
                continue;
            }
            let val = (&dist[u][k] + &dist[v][k] - &duv) / BigRational::from_integer(2.into());
            dist[w][k] = val.clone();
            dist[k][w] = val;
        }
        active.remove(b);
        active.remove(a);
        active.push((w, lu.min(lv)));
    }
    let center = next;
    for &(k, _) in &active {
        edges.push((center, k));
    }
    PhyloTree::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{pairs, CoordVector};
    use crate::solver::constant_matrix;
    use crate::trees::parse_newick;

    fn additive(t: &PhyloTree, lengths: &dyn Fn(usize) -> i64) -> DistanceMatrix {
        // path length with weight lengths(edge index)
        let edges = t.edges();
        let n = t.n();
        let mut adj = vec![Vec::new(); t.node_count()];
        for (k, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, lengths(k)));
            adj[b].push((a, lengths(k)));
        }
        let mut entries = Vec::new();
        for (i, j) in pairs(n) {
            let mut stack = vec![(i - 1, usize::MAX, 0i64)];
            let mut found = 0;
            while let Some((v, p, acc)) = stack.pop() {
                if v == j - 1 {
                    found = acc;
                    break;
                }
                for &(w, l) in &adj[v] {
                    if w != p {
                        stack.push((w, v, acc + l));
                    }
                }
            }
            entries.push(BigRational::from_integer(found.into()));
        }
        DistanceMatrix::new(CoordVector::new(n, entries).unwrap()).unwrap()
    }

    #[test]
    fn recovers_additive_trees() {
        for s in ["((1,2),(3,4),5);", "((1,5),(2,(3,6)),4);", "(((1,2),3),((4,5),6),7);"] {
            let t = parse_newick(s).unwrap();
            let d = additive(&t, &|k| 1 + (k as i64 * 7) % 5);
            assert_eq!(solve_nj(&d).unwrap(), t, "{s}");
        }
    }

    #[test]
    fn ties_are_deterministic() {
        let d = constant_matrix(5, BigRational::from_integer(1.into()));
        let t = solve_nj(&d).unwrap();
        assert!(t.is_binary());
        assert!(t.is_caterpillar().unwrap().is_some());
        assert_eq!(t, solve_nj(&d).unwrap());
        assert_eq!(t.cherries()[0], (1, 2));
        assert_eq!(solve_nj(&constant_matrix(3, BigRational::zero())).unwrap(), PhyloTree::star(3).unwrap());
    }
}
