//! Unrooted leaf-labelled phylogenetic trees.
//!
//! Leaves carry the labels `1..=n`. Internally node `i < n` is the leaf with
//! label `i + 1` and nodes `n..` are internal. Trees are immutable once built
//! and every constructor enforces the structural invariants: connected,
//! acyclic, each label present once, and no internal node of degree below 3.
//!
//! # Canonical form
//!
//! [`PhyloTree::to_newick`] roots the tree at the internal neighbour of leaf 1
//! and orders the children of every node by the smallest leaf label below
//! them. Two trees are isomorphic exactly when their canonical strings are
//! equal, which is what `PartialEq`, `Ord` and `Hash` use.

mod enumerate;
mod newick;

pub use enumerate::{enumerate_binary_trees, random_binary_tree, BinaryTrees};
pub use newick::parse_newick;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{BmeError, Result};

/// Leaf label, `1..=n`.
pub type Leaf = usize;

/// Unrooted phylogenetic tree on leaves `1..=n`.
#[derive(Clone)]
pub struct PhyloTree {
    n: usize,
    adj: Vec<Vec<usize>>,
}

/// Bipartition of `1..=n`, stored as the side that does not contain leaf 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Split {
    n: usize,
    side: Vec<Leaf>,
}

impl Split {
    /// Builds the split with one part equal to `part`.
    pub fn new(n: usize, part: &[Leaf]) -> Result<Split> {
        let set: BTreeSet<Leaf> = part.iter().copied().collect();
        if set.len() != part.len() {
            return Err(BmeError::domain("split part has repeated leaves"));
        }
        if set.iter().any(|&l| l == 0 || l > n) {
            return Err(BmeError::domain(format!("split leaf outside 1..={n}")));
        }
        if set.is_empty() || set.len() == n {
            return Err(BmeError::domain("split parts must be nonempty"));
        }
        let side: Vec<Leaf> = if set.contains(&1) {
            (1..=n).filter(|l| !set.contains(l)).collect()
        } else {
            set.into_iter().collect()
        };
        Ok(Split { n, side })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The part not containing leaf 1, sorted.
    pub fn side(&self) -> &[Leaf] {
        &self.side
    }

    /// The part containing leaf 1, sorted.
    pub fn other_side(&self) -> Vec<Leaf> {
        (1..=self.n).filter(|l| self.side.binary_search(l).is_err()).collect()
    }

    /// The smaller part; on a tie, the part containing leaf 1.
    pub fn smaller_side(&self) -> Vec<Leaf> {
        if self.side.len() * 2 < self.n {
            self.side.clone()
        } else {
            self.other_side()
        }
    }

    /// Sizes of both parts, smaller first.
    pub fn shape(&self) -> (usize, usize) {
        let a = self.side.len();
        let b = self.n - a;
        (a.min(b), a.max(b))
    }

    pub fn contains(&self, leaf: Leaf) -> bool {
        self.side.binary_search(&leaf).is_ok()
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Leaf]| {
            v.iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{{{}}}|{{{}}}", join(&self.other_side()), join(&self.side))
    }
}

impl PhyloTree {
    /// Builds a tree from an edge list over node ids (`0..n` are leaves).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<PhyloTree> {
        if n < 3 {
            return Err(BmeError::domain(format!("trees need at least 3 leaves, got {n}")));
        }
        let nodes = edges.iter().flat_map(|&(a, b)| [a, b]).max().map_or(0, |m| m + 1).max(n);
        if edges.len() + 1 != nodes {
            return Err(BmeError::domain(format!(
                "{} edges over {} nodes cannot form a tree",
                edges.len(),
                nodes
            )));
        }
        let mut adj = vec![Vec::new(); nodes];
        for &(a, b) in edges {
            if a == b {
                return Err(BmeError::domain("self-loop in edge list"));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let tree = PhyloTree { n, adj };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        for (v, nb) in self.adj.iter().enumerate() {
            if v < self.n && nb.len() != 1 {
                return Err(BmeError::domain(format!(
                    "leaf {} has degree {}",
                    v + 1,
                    nb.len()
                )));
            }
            if v >= self.n && nb.len() < 3 {
                return Err(BmeError::domain(format!(
                    "internal node has degree {}",
                    nb.len()
                )));
            }
        }
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        if count != self.adj.len() {
            return Err(BmeError::domain("edge list is not connected"));
        }
        Ok(())
    }

    /// The star (a single internal node) on `n` leaves.
    pub fn star(n: usize) -> Result<PhyloTree> {
        let edges: Vec<(usize, usize)> = (0..n).map(|l| (l, n)).collect();
        PhyloTree::from_edges(n, &edges)
    }

    /// Builds the tree displaying exactly the given pairwise compatible splits.
    pub fn from_splits(n: usize, splits: &[Split]) -> Result<PhyloTree> {
        if n < 3 {
            return Err(BmeError::domain("trees need at least 3 leaves"));
        }
        // clusters are split sides avoiding leaf 1; the root cluster is {2..n}
        let mut clusters: Vec<Vec<Leaf>> = Vec::new();
        for s in splits {
            if s.n != n {
                return Err(BmeError::domain("split over a different leaf set"));
            }
            let (small, _) = s.shape();
            if small < 2 {
                return Err(BmeError::domain(format!("trivial split {s}")));
            }
            if !clusters.contains(&s.side) {
                clusters.push(s.side.clone());
            }
        }
        for (i, a) in clusters.iter().enumerate() {
            for b in &clusters[i + 1..] {
                let inter = a.iter().filter(|l| b.binary_search(l).is_ok()).count();
                if inter != 0 && inter != a.len() && inter != b.len() {
                    return Err(BmeError::domain("splits are not pairwise compatible"));
                }
            }
        }
        clusters.push((2..=n).collect());
        clusters.sort_by_key(|c| c.len());
        let root = clusters.len() - 1;
        let node_of = |c: usize| n + c;
        let mut edges = Vec::new();
        for (i, c) in clusters.iter().enumerate().take(root) {
            let parent = (i + 1..clusters.len())
                .find(|&j| c.iter().all(|l| clusters[j].binary_search(l).is_ok()))
                .expect("root cluster contains everything");
            edges.push((node_of(i), node_of(parent)));
        }
        for leaf in 2..=n {
            let parent = (0..clusters.len())
                .find(|&j| clusters[j].binary_search(&leaf).is_ok())
                .expect("root cluster contains every leaf but 1");
            edges.push((leaf - 1, node_of(parent)));
        }
        edges.push((0, node_of(root)));
        PhyloTree::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    /// Node id of a leaf label.
    pub fn leaf_node(&self, leaf: Leaf) -> usize {
        leaf - 1
    }

    pub fn is_leaf_node(&self, node: usize) -> bool {
        node < self.n
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.n..self.adj.len()
    }

    /// All edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.adj.len() - 1);
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() - 1
    }

    pub fn is_binary(&self) -> bool {
        self.internal_nodes().all(|v| self.adj[v].len() == 3)
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    /// Leaves reachable from `to` without passing through `from`.
    pub fn leaves_beyond(&self, from: usize, to: usize) -> Vec<Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![(from, to)];
        while let Some((p, v)) = stack.pop() {
            if v < self.n {
                out.push(v + 1);
                continue;
            }
            for &w in &self.adj[v] {
                if w != p {
                    stack.push((v, w));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Edge counts between every pair of leaves, `dist[i][j]` for node ids.
    pub fn leaf_distances(&self) -> Vec<Vec<u32>> {
        let total = self.adj.len();
        let mut out = Vec::with_capacity(self.n);
        let mut dist = vec![u32::MAX; total];
        let mut queue = VecDeque::with_capacity(total);
        for leaf in 0..self.n {
            dist.iter_mut().for_each(|d| *d = u32::MAX);
            dist[leaf] = 0;
            queue.push_back(leaf);
            while let Some(v) = queue.pop_front() {
                for &w in &self.adj[v] {
                    if dist[w] == u32::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            out.push(dist[..self.n].to_vec());
        }
        out
    }

    /// One split per internal edge.
    pub fn splits(&self) -> BTreeSet<Split> {
        let mut out = BTreeSet::new();
        for (u, v) in self.edges() {
            if u < self.n || v < self.n {
                continue;
            }
            let side = self.leaves_beyond(u, v);
            out.insert(Split::new(self.n, &side).expect("internal edge gives a proper split"));
        }
        out
    }

    pub fn displays(&self, split: &Split) -> Result<bool> {
        if split.n != self.n {
            return Err(BmeError::domain(format!(
                "split over {} leaves, tree over {}",
                split.n, self.n
            )));
        }
        let (small, _) = split.shape();
        if small == 1 {
            return Ok(true);
        }
        Ok(self.splits().contains(split))
    }

    /// Pairs of leaves that share their neighbour, each as `(a, b)` with `a < b`.
    pub fn cherries(&self) -> Vec<(Leaf, Leaf)> {
        let mut out = Vec::new();
        for v in self.internal_nodes() {
            let leaves: Vec<Leaf> = self.adj[v]
                .iter()
                .filter(|&&w| w < self.n)
                .map(|&w| w + 1)
                .collect();
            if leaves.len() == 2 && self.adj[v].len() == 3 {
                out.push((leaves[0].min(leaves[1]), leaves[0].max(leaves[1])));
            }
        }
        out.sort_unstable();
        out
    }

    /// The two end cherries when the binary tree has exactly two cherries.
    pub fn is_caterpillar(&self) -> Result<Option<((Leaf, Leaf), (Leaf, Leaf))>> {
        if !self.is_binary() {
            return Err(BmeError::domain("caterpillar test needs a binary tree"));
        }
        let ch = self.cherries();
        Ok(if ch.len() == 2 { Some((ch[0], ch[1])) } else { None })
    }

    /// True iff every split of `coarse` is displayed by `self` (a binary tree).
    pub fn refines(&self, coarse: &PhyloTree) -> Result<bool> {
        if self.n != coarse.n {
            return Err(BmeError::domain("trees over different leaf sets"));
        }
        if !self.is_binary() {
            return Err(BmeError::domain("refinement test needs a binary candidate"));
        }
        let fine = self.splits();
        Ok(coarse.splits().iter().all(|s| fine.contains(s)))
    }

    /// Replaces a displayed clade by a single leaf labelled `new_label`.
    ///
    /// The result has `n - |clade| + 1` leaves labelled `1..=n'`. The new leaf
    /// takes `new_label`; the surviving leaves keep their relative order and
    /// fill the remaining labels in increasing order.
    pub fn contract_clade(&self, clade: &[Leaf], new_label: Leaf) -> Result<PhyloTree> {
        let set: BTreeSet<Leaf> = clade.iter().copied().collect();
        if set.len() < 2 || set.len() != clade.len() {
            return Err(BmeError::domain("a clade needs at least two distinct leaves"));
        }
        if set.iter().any(|&l| l == 0 || l > self.n) {
            return Err(BmeError::domain("clade leaf out of range"));
        }
        let new_n = self.n - set.len() + 1;
        if new_n < 3 {
            return Err(BmeError::domain("contraction would leave fewer than 3 leaves"));
        }
        if new_label == 0 || new_label > new_n {
            return Err(BmeError::domain(format!("new label must lie in 1..={new_n}")));
        }
        let members: Vec<Leaf> = set.iter().copied().collect();
        // the clade is cut off by an edge (u, v) with the clade beyond v
        let cut = self.edges().into_iter().flat_map(|(a, b)| [(a, b), (b, a)]).find(|&(u, v)| {
            v >= self.n && self.leaves_beyond(u, v) == members
        });
        let Some((attach, root)) = cut else {
            return Err(BmeError::domain(format!("{members:?} is not a clade of the tree")));
        };
        let relabel = merge_relabeling(self.n, &members, new_label);
        // collect nodes of the clade subtree
        let mut removed = vec![false; self.adj.len()];
        let mut stack = vec![(attach, root)];
        while let Some((p, v)) = stack.pop() {
            removed[v] = true;
            for &w in &self.adj[v] {
                if w != p {
                    stack.push((v, w));
                }
            }
        }
        let mut ids = vec![usize::MAX; self.adj.len()];
        for leaf in 0..self.n {
            if let Some(l) = relabel[leaf + 1] {
                ids[leaf] = l - 1;
            }
        }
        let mut next = new_n;
        for v in self.internal_nodes() {
            if !removed[v] {
                ids[v] = next;
                next += 1;
            }
        }
        let mut edges = Vec::new();
        for (u, v) in self.edges() {
            if removed[u] || removed[v] {
                continue;
            }
            edges.push((ids[u], ids[v]));
        }
        edges.push((new_label - 1, ids[attach]));
        PhyloTree::from_edges(new_n, &edges)
    }

    /// Inverse of contracting a cherry: leaf `leaf` becomes a cherry whose two
    /// leaves get the labels `a` and `b` of an `(n + 1)`-leaf tree. Every other
    /// leaf is mapped through `relabel` (old label -> new label).
    pub fn expand_leaf_to_cherry(
        &self,
        leaf: Leaf,
        a: Leaf,
        b: Leaf,
        relabel: &dyn Fn(Leaf) -> Leaf,
    ) -> Result<PhyloTree> {
        let new_n = self.n + 1;
        let mut ids = vec![usize::MAX; self.adj.len()];
        for l in 1..=self.n {
            if l != leaf {
                ids[l - 1] = relabel(l) - 1;
            }
        }
        let w = new_n + (self.adj.len() - self.n);
        for v in self.internal_nodes() {
            ids[v] = v + 1;
        }
        ids[leaf - 1] = w;
        let mut edges: Vec<(usize, usize)> =
            self.edges().into_iter().map(|(u, v)| (ids[u], ids[v])).collect();
        edges.push((a - 1, w));
        edges.push((b - 1, w));
        PhyloTree::from_edges(new_n, &edges)
    }

    /// Contracts the given internal edges (node-id pairs).
    pub fn contract_edges(&self, contract: &[(usize, usize)]) -> Result<PhyloTree> {
        let total = self.adj.len();
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for &(u, v) in contract {
            if u < self.n || v < self.n || !self.adj[u].contains(&v) {
                return Err(BmeError::domain("only internal edges can be contracted"));
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru.max(rv)] = ru.min(rv);
        }
        let mut ids = vec![usize::MAX; total];
        let mut next = self.n;
        for v in 0..total {
            let r = find(&mut parent, v);
            if v < self.n {
                ids[v] = v;
            } else if r == v {
                ids[v] = next;
                next += 1;
            }
        }
        for v in self.n..total {
            let r = find(&mut parent, v);
            ids[v] = ids[r];
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .filter(|&(u, v)| ids[u] != ids[v])
            .map(|(u, v)| (ids[u], ids[v]))
            .collect();
        PhyloTree::from_edges(self.n, &edges)
    }

    /// Internal edges as node-id pairs.
    pub fn internal_edges(&self) -> Vec<(usize, usize)> {
        self.edges()
            .into_iter()
            .filter(|&(u, v)| u >= self.n && v >= self.n)
            .collect()
    }

    /// Canonical Newick string (see module docs).
    pub fn to_newick(&self) -> String {
        let root = self.adj[0][0];
        let mut out = String::new();
        self.write_subtree(usize::MAX, root, &mut out, &|l| l.to_string());
        out.push(';');
        out
    }

    /// Canonical Newick with leaf labels rendered through `name`.
    pub fn to_newick_with(&self, name: &dyn Fn(Leaf) -> String) -> String {
        let root = self.adj[0][0];
        let mut out = String::new();
        self.write_subtree(usize::MAX, root, &mut out, name);
        out.push(';');
        out
    }

    fn min_leaf(&self, parent: usize, v: usize) -> Leaf {
        if v < self.n {
            return v + 1;
        }
        self.adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .map(|&w| self.min_leaf(v, w))
            .min()
            .expect("internal node has children")
    }

    fn write_subtree(&self, parent: usize, v: usize, out: &mut String, name: &dyn Fn(Leaf) -> String) {
        if v < self.n {
            out.push_str(&name(v + 1));
            return;
        }
        let mut kids: Vec<(Leaf, usize)> = self.adj[v]
            .iter()
            .filter(|&&w| w != parent)
            .map(|&w| (self.min_leaf(v, w), w))
            .collect();
        kids.sort_unstable();
        out.push('(');
        for (i, &(_, w)) in kids.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_subtree(v, w, out, name);
        }
        out.push(')');
    }
}

/// Label map after merging `members` into one leaf labelled `new_label`:
/// index by old label, `None` for merged leaves.
pub(crate) fn merge_relabeling(n: usize, members: &[Leaf], new_label: Leaf) -> Vec<Option<Leaf>> {
    let mut out = vec![None; n + 1];
    let mut free = (1..).filter(|&l| l != new_label);
    for old in 1..=n {
        if members.binary_search(&old).is_err() {
            out[old] = free.next();
        }
    }
    out
}

impl fmt::Debug for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhyloTree({})", self.to_newick())
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

impl PartialEq for PhyloTree {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.to_newick() == other.to_newick()
    }
}

impl Eq for PhyloTree {}

impl Hash for PhyloTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_newick().hash(state);
    }
}

impl PartialOrd for PhyloTree {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PhyloTree {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_newick().cmp(&other.to_newick())
    }
}
