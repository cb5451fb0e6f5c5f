use rand::Rng;

use super::PhyloTree;
use crate::error::{BmeError, Result};

/// Stream of all binary topologies on `n` leaves, each exactly once.
///
/// Trees are grown by leaf insertion: starting from the 3-leaf star, leaf `k`
/// is inserted on every edge of every `(k-1)`-leaf tree. Edges are visited in
/// edge-list order, where inserting on edge `(u, v)` rewrites it in place to
/// `(u, w)` and appends `(w, v)` and `(w, k)`. The order is reproducible.
pub struct BinaryTrees {
    n: usize,
    edges: Vec<(usize, usize)>,
    choice: Vec<usize>,
    started: bool,
    done: bool,
}

impl BinaryTrees {
    fn insert(&mut self, leaf: usize, edge: usize) {
        let w = self.n + leaf - 2;
        let (u, v) = self.edges[edge];
        self.edges[edge] = (u, w);
        self.edges.push((w, v));
        self.edges.push((w, leaf));
    }

    fn remove(&mut self, edge: usize) {
        self.edges.pop();
        let (_, v) = self.edges.pop().expect("inserted edge");
        self.edges[edge].1 = v;
    }

    /// Current tree as an edge list over node ids (leaves `0..n`).
    pub(crate) fn advance(&mut self) -> Option<&[(usize, usize)]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            for leaf in 3..self.n {
                self.insert(leaf, 0);
                self.choice.push(0);
            }
            return Some(&self.edges);
        }
        // backtrack to the deepest level with an untried edge
        loop {
            let Some(edge) = self.choice.pop() else {
                self.done = true;
                return None;
            };
            let leaf = 3 + self.choice.len();
            self.remove(edge);
            let available = 2 * leaf - 3;
            if edge + 1 < available {
                self.insert(leaf, edge + 1);
                self.choice.push(edge + 1);
                for deeper in leaf + 1..self.n {
                    self.insert(deeper, 0);
                    self.choice.push(0);
                }
                return Some(&self.edges);
            }
        }
    }
}

impl Iterator for BinaryTrees {
    type Item = PhyloTree;

    fn next(&mut self) -> Option<PhyloTree> {
        let n = self.n;
        self.advance()
            .map(|edges| PhyloTree::from_edges(n, edges).expect("insertion keeps trees valid"))
    }
}

/// All `(2n-5)!!` binary trees on leaves `1..=n`.
pub fn enumerate_binary_trees(n: usize) -> Result<BinaryTrees> {
    if n < 3 {
        return Err(BmeError::domain(format!("enumeration needs n >= 3, got {n}")));
    }
    Ok(BinaryTrees {
        n,
        edges: vec![(0, n), (1, n), (2, n)],
        choice: Vec::with_capacity(n),
        started: false,
        done: false,
    })
}

/// A uniformly random binary topology (uniform leaf insertion).
pub fn random_binary_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PhyloTree> {
    let mut it = enumerate_binary_trees(n)?;
    for leaf in 3..n {
        let edge = rng.gen_range(0..2 * leaf - 3);
        it.insert(leaf, edge);
    }
    PhyloTree::from_edges(n, &it.edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::collections::HashSet;

    #[test]
    fn counts_match_double_factorial() {
        for (n, want) in [(3, 1), (4, 3), (5, 15), (6, 105), (7, 945)] {
            let trees: Vec<PhyloTree> = enumerate_binary_trees(n).unwrap().collect();
            assert_eq!(trees.len(), want, "n = {n}");
            let distinct: HashSet<String> = trees.iter().map(|t| t.to_newick()).collect();
            assert_eq!(distinct.len(), want);
            assert!(trees.iter().all(|t| t.is_binary()));
        }
        assert!(enumerate_binary_trees(2).is_err());
    }

    #[test]
    fn order_is_reproducible() {
        let a: Vec<String> = enumerate_binary_trees(6).unwrap().map(|t| t.to_newick()).collect();
        let b: Vec<String> = enumerate_binary_trees(6).unwrap().map(|t| t.to_newick()).collect();
        assert_eq!(a, b);
        assert_eq!(a[0], enumerate_binary_trees(6).unwrap().next().unwrap().to_newick());
    }

    #[test]
    fn random_trees_are_binary() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in 3..12 {
            let t = random_binary_tree(n, &mut rng).unwrap();
            assert!(t.is_binary());
            assert_eq!(t.n(), n);
        }
    }
}
