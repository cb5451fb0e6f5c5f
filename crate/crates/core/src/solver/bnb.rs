use std::cmp::Ordering;

use log::debug;
use num::{BigRational, One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use super::{merged_label, reduce_on_cherry, solve_exhaustive_restricted, solve_nj, tree_value, DistanceMatrix};
use crate::coords::{pairs, tree_from_x, CoordVector};
use crate::error::{BmeError, Result};
use crate::exact::{format_rational, pow2};
use crate::facets::{splitohedron_catalog, Family, LinearInequality, Sense};
use crate::lp::{lp_min_with, LpOptions, LpProblem, LpStatus};
use crate::trees::{Leaf, PhyloTree};

#[derive(Clone, Copy, Debug)]
pub struct BnbConfig {
    /// Nodes with at most this many leaves are closed by enumeration (min 4).
    pub exhaustive_threshold: usize,
    /// Keep exploring nodes whose bound equals the incumbent, to report ties.
    pub collect_ties: bool,
    pub lp: LpOptions,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig { exhaustive_threshold: 7, collect_ties: false, lp: LpOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOutcome {
    PrunedByBound,
    Infeasible,
    IntegralLp,
    ClosedExhaustive,
    Branched,
}

#[derive(Clone, Debug)]
pub struct NodeLog {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Leaves of the node's reduced problem.
    pub leaves: usize,
    /// Offset plus the node's LP optimum, when an LP was solved.
    pub lp_bound: Option<BigRational>,
    /// The larger of `lp_bound` and the parent's bound.
    pub bound: Option<BigRational>,
    /// Branching pair, as the sets of original leaves behind each label.
    pub branch: Option<(Vec<Leaf>, Vec<Leaf>)>,
    pub outcome: NodeOutcome,
}

impl NodeLog {
    pub fn to_json(&self) -> Value {
        let q = |v: &Option<BigRational>| v.as_ref().map(format_rational);
        json!({
            "id": self.id,
            "parent": self.parent,
            "depth": self.depth,
            "leaves": self.leaves,
            "lp_bound": q(&self.lp_bound),
            "bound": q(&self.bound),
            "branch": self.branch,
            "outcome": self.outcome,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BnbCertificate {
    pub tree: PhyloTree,
    /// `d . x(t)`.
    pub value_x: BigRational,
    /// `d . c(t) = value_x / 2^(n-2)`.
    pub value_c: BigRational,
    /// Optimal trees met during the search, in canonical order.
    pub ties: Vec<PhyloTree>,
    pub incumbent_nj: BigRational,
    pub nodes: usize,
    pub log: Vec<NodeLog>,
}

impl BnbCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "value_x": format_rational(&self.value_x),
            "value_c": format_rational(&self.value_c),
            "tree": self.tree.to_newick(),
            "ties": self.ties.iter().map(|t| t.to_newick()).collect::<Vec<_>>(),
            "incumbent_nj": format_rational(&self.incumbent_nj),
            "nodes": self.nodes,
            "log": self.log.iter().map(NodeLog::to_json).collect::<Vec<_>>(),
        })
    }
}

struct Node {
    d: DistanceMatrix,
    offset: BigRational,
    forbidden: Vec<(Leaf, Leaf)>,
    /// Cherry merges from the root, innermost last.
    merges: Vec<(Leaf, Leaf)>,
    /// Original leaves behind each label.
    members: Vec<Vec<Leaf>>,
    parent: Option<usize>,
    depth: usize,
    parent_bound: Option<BigRational>,
}

struct Incumbent {
    value: BigRational,
    trees: Vec<PhyloTree>,
}

impl Incumbent {
    fn offer(&mut self, value: BigRational, trees: Vec<PhyloTree>) {
        match value.cmp(&self.value) {
            Ordering::Less => {
                self.value = value;
                self.trees = trees;
            }
            Ordering::Equal => self.trees.extend(trees),
            Ordering::Greater => return,
        }
        self.trees.sort();
        self.trees.dedup();
    }

    fn prunes(&self, bound: &BigRational, collect_ties: bool) -> bool {
        if collect_ties {
            *bound > self.value
        } else {
            *bound >= self.value
        }
    }
}

fn unwind(mut t: PhyloTree, merges: &[(Leaf, Leaf)]) -> PhyloTree {
    for &(a, b) in merges.iter().rev() {
        t = t
            .expand_leaf_to_cherry(a, a, b, &|l| if l >= b { l + 1 } else { l })
            .expect("merge records are consistent");
    }
    t
}

/// Distance from `v` to the nearest power of two (`v >= 1`), else `1 - v`.
fn off_power_of_two(v: &BigRational) -> BigRational {
    let one = BigRational::one();
    if *v < one {
        return one - v;
    }
    let mut lo = one;
    while &lo * BigRational::from_integer(2.into()) <= *v {
        lo *= BigRational::from_integer(2.into());
    }
    let hi = &lo * BigRational::from_integer(2.into());
    (v - &lo).min(&hi - v)
}

/// Undecided pair farthest from a power of two, then largest, then first.
fn branching_pair(x: &CoordVector, forbidden: &[(Leaf, Leaf)]) -> Option<(Leaf, Leaf)> {
    let n = x.n();
    let mut best: Option<(BigRational, BigRational, (Leaf, Leaf))> = None;
    for (i, j) in pairs(n) {
        if forbidden.contains(&(i, j)) {
            continue;
        }
        let v = x.get(i, j).clone();
        let off = off_power_of_two(&v);
        let better = match &best {
            None => true,
            Some((bo, bv, _)) => off > *bo || (off == *bo && v > *bv),
        };
        if better {
            best = Some((off, v, (i, j)));
        }
    }
    best.map(|(_, _, p)| p)
}

fn forbid(n: usize, a: Leaf, b: Leaf) -> LinearInequality {
    let mut coeffs = CoordVector::zeros(n);
    coeffs.set(a, b, BigRational::one());
    LinearInequality {
        coeffs,
        sense: Sense::Le,
        rhs: pow2(n - 4),
        family: Family::Custom,
        params: vec![vec![a, b]],
    }
}

fn merge_child(node: &Node, a: Leaf, b: Leaf, bound: BigRational) -> Result<Node> {
    let (d, offset) = reduce_on_cherry(&node.d, a, b)?;
    let n = node.d.n();
    let forbidden = node
        .forbidden
        .iter()
        .filter(|(x, y)| ![a, b].contains(x) && ![a, b].contains(y))
        .map(|&(x, y)| (merged_label(x, b), merged_label(y, b)))
        .collect();
    let mut merges = node.merges.clone();
    merges.push((a, b));
    let members = (1..n)
        .map(|l| {
            if l == a {
                let mut m = node.members[a - 1].clone();
                m.extend(&node.members[b - 1]);
                m.sort_unstable();
                m
            } else {
                node.members[if l >= b { l } else { l - 1 }].clone()
            }
        })
        .collect();
    Ok(Node {
        d,
        offset: &node.offset + offset,
        forbidden,
        merges,
        members,
        parent: None,
        depth: node.depth + 1,
        parent_bound: Some(bound),
    })
}

/// Provably optimal BME tree with the default configuration.
pub fn solve_bnb(d: &DistanceMatrix) -> Result<BnbCertificate> {
    solve_bnb_with(d, BnbConfig::default())
}

/// Depth-first branch-and-bound. Each node either closes by enumeration
/// (few leaves), or solves the splitohedron LP with the node's forbidden
/// cherries; it is pruned by bound or infeasibility, closed when the LP
/// point is a tree vector, or split into "force cherry {a,b}" (reduced to
/// one leaf fewer) and "forbid cherry {a,b}" (`x_ab <= 2^(n-4)`).
pub fn solve_bnb_with(d: &DistanceMatrix, cfg: BnbConfig) -> Result<BnbCertificate> {
    let n = d.n();
    if n < 3 {
        return Err(BmeError::domain(format!("reconstruction needs n >= 3, got {n}")));
    }
    let threshold = cfg.exhaustive_threshold.max(4);
    let nj = solve_nj(d)?;
    let nj_value = tree_value(d, &nj)?;
    let mut inc = Incumbent { value: nj_value.clone(), trees: vec![nj] };
    let mut log: Vec<NodeLog> = Vec::new();
    let mut stack = vec![Node {
        d: d.clone(),
        offset: BigRational::zero(),
        forbidden: Vec::new(),
        merges: Vec::new(),
        members: (1..=n).map(|l| vec![l]).collect(),
        parent: None,
        depth: 0,
        parent_bound: None,
    }];
    while let Some(node) = stack.pop() {
        let id = log.len();
        let leaves = node.d.n();
        let mut entry = NodeLog {
            id,
            parent: node.parent,
            depth: node.depth,
            leaves,
            lp_bound: None,
            bound: node.parent_bound.clone(),
            branch: None,
            outcome: NodeOutcome::PrunedByBound,
        };
        if node.parent_bound.as_ref().is_some_and(|b| inc.prunes(b, cfg.collect_ties)) {
            log.push(entry);
            continue;
        }
        if leaves <= threshold {
            entry.outcome = match solve_exhaustive_restricted(&node.d, &node.forbidden)? {
                None => NodeOutcome::Infeasible,
                Some(r) => {
                    let value = &node.offset + &r.value;
                    entry.bound = Some(value.clone());
                    let trees = r.ties.into_iter().map(|t| unwind(t, &node.merges)).collect();
                    inc.offer(value, trees);
                    NodeOutcome::ClosedExhaustive
                }
            };
            log.push(entry);
            continue;
        }
        let cat = splitohedron_catalog(leaves)?;
        let mut inequalities = cat.inequalities;
        inequalities.extend(node.forbidden.iter().map(|&(a, b)| forbid(leaves, a, b)));
        let problem = LpProblem {
            n: leaves,
            objective: node.d.as_coords().clone(),
            inequalities,
            equalities: cat.equalities,
        };
        let r = lp_min_with(&problem, cfg.lp)?;
        debug!("node {id}: {} leaves, {:?}, {} pivots", leaves, r.status, r.pivots);
        match r.status {
            LpStatus::Infeasible => {
                entry.outcome = NodeOutcome::Infeasible;
                log.push(entry);
                continue;
            }
            LpStatus::Unbounded => {
                return Err(BmeError::domain("the splitohedron relaxation cannot be unbounded"));
            }
            LpStatus::Optimal => {}
        }
        let lp_bound = &node.offset + r.optimum.as_ref().expect("optimal has a value");
        let bound = match &node.parent_bound {
            Some(p) if *p > lp_bound => p.clone(),
            _ => lp_bound.clone(),
        };
        entry.lp_bound = Some(lp_bound.clone());
        entry.bound = Some(bound.clone());
        if inc.prunes(&bound, cfg.collect_ties) {
            log.push(entry);
            continue;
        }
        let x = r.point.expect("optimal has a point");
        if let Some(t) = tree_from_x(&x) {
            inc.offer(lp_bound, vec![unwind(t, &node.merges)]);
            entry.outcome = NodeOutcome::IntegralLp;
            log.push(entry);
            continue;
        }
        let Some((a, b)) = branching_pair(&x, &node.forbidden) else {
            // every pair is forbidden, and every binary tree has a cherry
            entry.outcome = NodeOutcome::Infeasible;
            log.push(entry);
            continue;
        };
        entry.branch = Some((node.members[a - 1].clone(), node.members[b - 1].clone()));
        entry.outcome = NodeOutcome::Branched;
        log.push(entry);
        let mut left = merge_child(&node, a, b, bound.clone())?;
        left.parent = Some(id);
        let mut forbidden = node.forbidden.clone();
        forbidden.push((a, b));
        let right = Node {
            forbidden,
            parent: Some(id),
            depth: node.depth + 1,
            parent_bound: Some(bound),
            ..node
        };
        stack.push(right);
        stack.push(left);
    }
    let tree = inc.trees[0].clone();
    let value_c = &inc.value / pow2(n - 2);
    Ok(BnbCertificate {
        tree,
        value_x: inc.value,
        value_c,
        ties: inc.trees,
        incumbent_nj: nj_value,
        nodes: log.len(),
        log,
    })
}
