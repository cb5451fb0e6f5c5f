use num::{BigInt, BigRational, Integer, One, ToPrimitive, Zero};
use rayon::prelude::*;

use super::DistanceMatrix;
use crate::coords::pair_count;
use crate::error::{BmeError, Result};
use crate::trees::{enumerate_binary_trees, Leaf, PhyloTree};

/// Largest `n` that [`solve_exhaustive`] accepts: `(2n-5)!! = 2,027,025` trees.
pub const EXHAUSTIVE_LIMIT: usize = 10;

const BATCH: usize = 4096;

#[derive(Clone, Debug)]
pub struct ExhaustiveResult {
    /// The optimal tree that comes first in canonical Newick order.
    pub tree: PhyloTree,
    /// `d . x(t)`.
    pub value: BigRational,
    /// Every optimal tree, in canonical Newick order.
    pub ties: Vec<PhyloTree>,
    pub evaluated: u64,
}

/// `d` over a common denominator: integer weights and the denominator.
fn scaled(d: &DistanceMatrix) -> (Vec<BigInt>, BigInt) {
    let den = d
        .as_coords()
        .entries()
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let weights = d
        .as_coords()
        .entries()
        .iter()
        .map(|q| q.numer() * (&den / q.denom()))
        .collect();
    (weights, den)
}

/// Leaf-to-leaf edge counts of an edge list, in lexicographic pair order.
fn pair_distances(n: usize, edges: &[(usize, usize)], out: &mut Vec<u32>) {
    let nodes = edges.len() + 1;
    let mut adj = vec![[usize::MAX; 3]; nodes];
    let mut deg = vec![0usize; nodes];
    for &(a, b) in edges {
        adj[a][deg[a]] = b;
        deg[a] += 1;
        adj[b][deg[b]] = a;
        deg[b] += 1;
    }
    out.clear();
    let mut dist = vec![u32::MAX; nodes];
    let mut queue = Vec::with_capacity(nodes);
    for src in 0..n {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[src] = 0;
        queue.clear();
        queue.push(src);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &w in &adj[v][..deg[v]] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push(w);
                }
            }
        }
        out.extend_from_slice(&dist[src + 1..n]);
    }
}

enum Weights {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

impl Weights {
    fn new(w: Vec<BigInt>, n: usize) -> Weights {
        // every term is at most max|w| * 2^(n-3); the sum has C(n,2) terms
        let bound_bits = n.saturating_sub(3) + 64 - (pair_count(n) as u64).leading_zeros() as usize;
        let small: Option<Vec<i128>> = w
            .iter()
            .map(|v| v.to_i128().filter(|x| x.unsigned_abs().leading_zeros() as usize > bound_bits + 1))
            .collect();
        match small {
            Some(s) => Weights::Small(s),
            None => Weights::Big(w),
        }
    }

    fn eval(&self, n: usize, dist: &[u32]) -> BigInt {
        let top = n as u32 - 1;
        match self {
            Weights::Small(w) => {
                let total: i128 = w.iter().zip(dist).map(|(&c, &d)| c << (top - d)).sum();
                BigInt::from(total)
            }
            Weights::Big(w) => w
                .iter()
                .zip(dist)
                .fold(BigInt::zero(), |acc, (c, &d)| acc + (c << (top - d) as usize)),
        }
    }
}

/// Minimizes `d . x(t)` over every binary tree; refuses `n > EXHAUSTIVE_LIMIT`.
pub fn solve_exhaustive(d: &DistanceMatrix) -> Result<ExhaustiveResult> {
    if d.n() > EXHAUSTIVE_LIMIT {
        return Err(BmeError::Guard {
            operation: "solve_exhaustive (use solve_bnb for larger inputs)",
            n: d.n(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    solve_exhaustive_restricted(d, &[])?
        .ok_or_else(|| BmeError::domain("no tree satisfies the restrictions"))
}

/// Minimizes over the binary trees that have none of `forbidden` as a
/// cherry. No size guard; `None` when every tree is excluded.
pub fn solve_exhaustive_restricted(
    d: &DistanceMatrix,
    forbidden: &[(Leaf, Leaf)],
) -> Result<Option<ExhaustiveResult>> {
    let n = d.n();
    let (weights, den) = scaled(d);
    let weights = Weights::new(weights, n);
    let forbidden_ranks: Vec<usize> = forbidden
        .iter()
        .map(|&(a, b)| crate::coords::pair_index(a.min(b), a.max(b), n))
        .collect::<Result<_>>()?;
    let mut trees = enumerate_binary_trees(n)?;
    let mut best: Option<(BigInt, Vec<Vec<(usize, usize)>>)> = None;
    let mut evaluated = 0u64;
    loop {
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            match trees.advance() {
                Some(e) => batch.push(e.to_vec()),
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        evaluated += batch.len() as u64;
        let scored: Vec<Option<BigInt>> = batch
            .par_iter()
            .map_init(Vec::new, |buf, edges| {
                pair_distances(n, edges, buf);
                if forbidden_ranks.iter().any(|&r| buf[r] == 2) {
                    return None;
                }
                Some(weights.eval(n, buf))
            })
            .collect();
        for (edges, score) in batch.into_iter().zip(scored) {
            let Some(score) = score else { continue };
            match &mut best {
                Some((v, ties)) if score == *v => ties.push(edges),
                Some((v, _)) if score > *v => {}
                _ => best = Some((score, vec![edges])),
            }
        }
    }
    let Some((score, ties)) = best else {
        return Ok(None);
    };
    let mut ties: Vec<PhyloTree> = ties
        .iter()
        .map(|e| PhyloTree::from_edges(n, e).expect("enumerated trees are valid"))
        .collect();
    ties.sort();
    Ok(Some(ExhaustiveResult {
        tree: ties[0].clone(),
        value: BigRational::new(score, den),
        ties,
        evaluated,
    }))
}
