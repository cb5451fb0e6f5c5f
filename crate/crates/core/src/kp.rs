//! Permutoassociahedron faces and the map `phi` onto tree-faces.
//!
//! A face is a rooted plane tree whose leaves, left to right, carry the
//! blocks of an ordered partition of `S \ {r}` where `S = {1, ..., m+1}` and
//! `r` labels the root. In bracketing text every pair of parentheses is an
//! internal node, e.g. `(({3},{4,5}),{2},{1,6,7})`. The improper top face is a
//! root with a single block, `({1,2,3})`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{BmeError, Result};
use crate::trees::{Leaf, PhyloTree};

/// Largest `m` for which [`phi_fibers`] enumerates vertices.
pub const FIBER_LIMIT: usize = 7;
/// Largest `m` for which [`enumerate_kp_faces`] lists every face.
pub const FACE_LIMIT: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaneTree {
    /// A block of the ordered partition, sorted.
    Block(Vec<Leaf>),
    /// An internal node with at least two ordered children.
    Bracket(Vec<PlaneTree>),
}

impl PlaneTree {
    fn elements(&self, out: &mut Vec<Leaf>) {
        match self {
            PlaneTree::Block(b) => out.extend_from_slice(b),
            PlaneTree::Bracket(kids) => kids.iter().for_each(|k| k.elements(out)),
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            PlaneTree::Block(b) => {
                out.push('{');
                let items: Vec<String> = b.iter().map(|l| l.to_string()).collect();
                out.push_str(&items.join(","));
                out.push('}');
            }
            PlaneTree::Bracket(kids) => write_children(kids, out),
        }
    }
}

fn write_children(kids: &[PlaneTree], out: &mut String) {
    out.push('(');
    for (i, k) in kids.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        k.write(out);
    }
    out.push(')');
}

/// A face of the permutoassociahedron.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KPFace {
    root: Leaf,
    children: Vec<PlaneTree>,
}

impl KPFace {
    /// Validates a face given the root label and the root's children.
    pub fn new(root: Leaf, children: Vec<PlaneTree>) -> Result<KPFace> {
        let face = KPFace { root, children };
        face.validate()?;
        Ok(face)
    }

    fn validate(&self) -> Result<()> {
        fn check(t: &PlaneTree) -> Result<()> {
            match t {
                PlaneTree::Block(b) => {
                    if b.is_empty() {
                        return Err(BmeError::domain("empty block"));
                    }
                    if b.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(BmeError::domain("blocks must be sorted without repeats"));
                    }
                }
                PlaneTree::Bracket(kids) => {
                    if kids.len() < 2 {
                        return Err(BmeError::domain("unary bracket"));
                    }
                    kids.iter().try_for_each(check)?;
                }
            }
            Ok(())
        }
        match self.children.as_slice() {
            [] => return Err(BmeError::domain("a face needs at least one block")),
            [PlaneTree::Block(b)] if b.len() < 2 => {
                return Err(BmeError::domain("a face needs at least two elements besides the root"))
            }
            [PlaneTree::Bracket(_)] => return Err(BmeError::domain("unary bracket at the root")),
            _ => {}
        }
        self.children.iter().try_for_each(check)?;
        let mut elems = self.elements();
        elems.sort_unstable();
        let m = elems.len();
        if m < 2 {
            return Err(BmeError::domain("a face needs at least two elements besides the root"));
        }
        if elems.windows(2).any(|w| w[0] == w[1]) {
            return Err(BmeError::domain("blocks overlap"));
        }
        if self.root == 0 || self.root > m + 1 {
            return Err(BmeError::domain(format!("root label {} outside 1..={}", self.root, m + 1)));
        }
        let want: Vec<Leaf> = (1..=m + 1).filter(|&l| l != self.root).collect();
        if elems != want {
            return Err(BmeError::domain(format!(
                "blocks must cover {{1..{}}} minus the root {}",
                m + 1,
                self.root
            )));
        }
        Ok(())
    }

    pub fn root(&self) -> Leaf {
        self.root
    }

    pub fn children(&self) -> &[PlaneTree] {
        &self.children
    }

    /// Number of elements `m = |S| - 1`.
    pub fn m(&self) -> usize {
        self.elements().len()
    }

    /// Elements in left-to-right leaf order.
    pub fn elements(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.children.iter().for_each(|c| c.elements(&mut out));
        out
    }

    /// Blocks in left-to-right order.
    pub fn blocks(&self) -> Vec<Vec<Leaf>> {
        fn walk(t: &PlaneTree, out: &mut Vec<Vec<Leaf>>) {
            match t {
                PlaneTree::Block(b) => out.push(b.clone()),
                PlaneTree::Bracket(kids) => kids.iter().for_each(|k| walk(k, out)),
            }
        }
        let mut out = Vec::new();
        self.children.iter().for_each(|c| walk(c, &mut out));
        out
    }

    pub fn is_top(&self) -> bool {
        self.children.len() == 1
    }

    /// Binary plane tree with singleton blocks.
    pub fn is_vertex(&self) -> bool {
        fn binary(t: &PlaneTree) -> bool {
            match t {
                PlaneTree::Block(b) => b.len() == 1,
                PlaneTree::Bracket(kids) => kids.len() == 2 && kids.iter().all(binary),
            }
        }
        self.children.len() == 2 && self.children.iter().all(binary)
    }

    /// Face dimension: `sum(|U| - 1)` over blocks plus `sum(k - 2)` over
    /// internal nodes with `k` children (the top face has dimension `m - 1`).
    pub fn dimension(&self) -> usize {
        if self.is_top() {
            return self.m() - 1;
        }
        fn dim(t: &PlaneTree) -> usize {
            match t {
                PlaneTree::Block(b) => b.len() - 1,
                PlaneTree::Bracket(kids) => kids.len() - 2 + kids.iter().map(dim).sum::<usize>(),
            }
        }
        self.children.len() - 2 + self.children.iter().map(dim).sum::<usize>()
    }

    /// `{"root", "tree", "blocks"}` with blocks numbered left to right.
    pub fn to_json(&self) -> Value {
        fn shape(t: &PlaneTree, next: &mut usize) -> Value {
            match t {
                PlaneTree::Block(_) => {
                    *next += 1;
                    json!(*next - 1)
                }
                PlaneTree::Bracket(kids) => Value::Array(kids.iter().map(|k| shape(k, next)).collect()),
            }
        }
        let mut next = 0;
        let tree: Vec<Value> = self.children.iter().map(|c| shape(c, &mut next)).collect();
        json!({"root": self.root, "tree": tree, "blocks": self.blocks()})
    }

    pub fn from_json(v: &Value) -> Result<KPFace> {
        let bad = |what: &str| BmeError::domain(format!("face JSON: {what}"));
        let root = v["root"].as_u64().ok_or_else(|| bad("missing root"))? as Leaf;
        let blocks: Vec<Vec<Leaf>> = serde_json::from_value(v["blocks"].clone())
            .map_err(|e| bad(&e.to_string()))?;
        let tree = v["tree"].as_array().ok_or_else(|| bad("tree must be an array"))?;
        let mut used = vec![false; blocks.len()];
        fn build(v: &Value, blocks: &[Vec<Leaf>], used: &mut [bool]) -> Result<PlaneTree> {
            if let Some(i) = v.as_u64() {
                let i = i as usize;
                if i >= blocks.len() || used[i] {
                    return Err(BmeError::domain(format!("face JSON: bad block index {i}")));
                }
                used[i] = true;
                let mut b = blocks[i].clone();
                b.sort_unstable();
                return Ok(PlaneTree::Block(b));
            }
            let kids = v
                .as_array()
                .ok_or_else(|| BmeError::domain("face JSON: tree entries are indices or arrays"))?;
            Ok(PlaneTree::Bracket(
                kids.iter().map(|k| build(k, blocks, used)).collect::<Result<_>>()?,
            ))
        }
        let children = tree.iter().map(|c| build(c, &blocks, &mut used)).collect::<Result<_>>()?;
        if used.iter().any(|u| !u) {
            return Err(bad("unused block"));
        }
        KPFace::new(root, children)
    }
}

impl fmt::Display for KPFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_children(&self.children, &mut out);
        f.write_str(&out)
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.text.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(BmeError::parse(self.pos, format!("expected {:?}", c as char)))
        }
    }

    fn number(&mut self) -> Result<Leaf> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .unwrap_or("")
            .parse()
            .map_err(|_| BmeError::parse(start, "expected an element label"))
    }

    fn item(&mut self) -> Result<PlaneTree> {
        self.skip_ws();
        let start = self.pos;
        match self.text.get(self.pos) {
            Some(b'{') => {
                self.pos += 1;
                let mut block = vec![self.number()?];
                loop {
                    self.skip_ws();
                    match self.text.get(self.pos) {
                        Some(b',') => {
                            self.pos += 1;
                            block.push(self.number()?);
                        }
                        Some(b'}') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(BmeError::parse(self.pos, "unterminated block")),
                    }
                }
                block.sort_unstable();
                if block.windows(2).any(|w| w[0] == w[1]) {
                    return Err(BmeError::parse(start, "repeated element in block"));
                }
                Ok(PlaneTree::Block(block))
            }
            Some(b'(') => {
                let kids = self.list()?;
                if kids.len() < 2 {
                    return Err(BmeError::parse(start, "unary bracket"));
                }
                Ok(PlaneTree::Bracket(kids))
            }
            _ => Err(BmeError::parse(self.pos, "expected '{' or '('")),
        }
    }

    fn list(&mut self) -> Result<Vec<PlaneTree>> {
        self.expect(b'(')?;
        let mut kids = vec![self.item()?];
        loop {
            self.skip_ws();
            match self.text.get(self.pos) {
                Some(b',') => {
                    self.pos += 1;
                    kids.push(self.item()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    return Ok(kids);
                }
                _ => return Err(BmeError::parse(self.pos, "unbalanced parentheses")),
            }
        }
    }
}

/// Parses bracketing text. `root` defaults to `m + 1` (the largest label).
pub fn parse_bracketing(text: &str, root: Option<Leaf>) -> Result<KPFace> {
    let mut p = Parser { text: text.as_bytes(), pos: 0 };
    let children = p.list()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(BmeError::parse(p.pos, "trailing text after bracketing"));
    }
    match children.as_slice() {
        [PlaneTree::Bracket(_)] => return Err(BmeError::parse(0, "unary bracket")),
        [PlaneTree::Block(b)] if b.len() < 2 => return Err(BmeError::parse(0, "unary bracket")),
        _ => {}
    }
    let m: usize = {
        let mut out = Vec::new();
        children.iter().for_each(|c| c.elements(&mut out));
        out.len()
    };
    let root = root.unwrap_or(m + 1);
    KPFace::new(root, children).map_err(|e| BmeError::parse(0, e.to_string()))
}

/// The phylogenetic tree of a face: blocks become corollas, the root label
/// hangs off the root node, plane order and rooting are forgotten.
pub fn phi(face: &KPFace) -> PhyloTree {
    let n = face.m() + 1;
    let mut edges = Vec::new();
    let mut next = n;
    fn attach(t: &PlaneTree, parent: usize, next: &mut usize, edges: &mut Vec<(usize, usize)>) {
        match t {
            PlaneTree::Block(b) if b.len() == 1 => edges.push((parent, b[0] - 1)),
            PlaneTree::Block(b) => {
                let w = *next;
                *next += 1;
                edges.push((parent, w));
                edges.extend(b.iter().map(|&l| (w, l - 1)));
            }
            PlaneTree::Bracket(kids) => {
                let w = *next;
                *next += 1;
                edges.push((parent, w));
                kids.iter().for_each(|k| attach(k, w, next, edges));
            }
        }
    }
    match face.children.as_slice() {
        // top face: the root node would have degree 2
        [PlaneTree::Block(b)] => {
            let w = next;
            edges.push((face.root - 1, w));
            edges.extend(b.iter().map(|&l| (w, l - 1)));
        }
        kids => {
            let root = next;
            next += 1;
            edges.push((face.root - 1, root));
            kids.iter().for_each(|k| attach(k, root, &mut next, &mut edges));
        }
    }
    PhyloTree::from_edges(n, &edges).expect("valid faces map to valid trees")
}

/// Ordered set partitions of `set` into at least two blocks.
fn ordered_partitions(set: &[Leaf]) -> Vec<Vec<Vec<Leaf>>> {
    let mut out = Vec::new();
    // restricted growth strings give unordered partitions
    let k = set.len();
    let mut rgs = vec![0usize; k];
    loop {
        let parts = rgs.iter().max().map_or(0, |m| m + 1);
        if parts >= 2 {
            let mut blocks = vec![Vec::new(); parts];
            for (i, &g) in rgs.iter().enumerate() {
                blocks[g].push(set[i]);
            }
            for perm in permutations(parts) {
                out.push(perm.iter().map(|&p| blocks[p].clone()).collect());
            }
        }
        // next restricted growth string
        let mut i = k;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let bound = rgs[..i].iter().max().copied().unwrap_or(0) + 1;
            if rgs[i] < bound {
                rgs[i] += 1;
                rgs[i + 1..].iter_mut().for_each(|g| *g = 0);
                break;
            }
        }
    }
}

/// All permutations of `0..k` in lexicographic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

fn child_covers(kids: &[PlaneTree], at_root: bool) -> Vec<Vec<PlaneTree>> {
    let mut out = Vec::new();
    let k = kids.len();
    for len in 2..k {
        for start in 0..=k - len {
            let mut v = kids[..start].to_vec();
            v.push(PlaneTree::Bracket(kids[start..start + len].to_vec()));
            v.extend_from_slice(&kids[start + len..]);
            out.push(v);
        }
    }
    for (i, kid) in kids.iter().enumerate() {
        let replacements: Vec<Vec<PlaneTree>> = match kid {
            PlaneTree::Block(b) if b.len() >= 2 => ordered_partitions(b)
                .into_iter()
                .map(|parts| {
                    let parts: Vec<PlaneTree> = parts.into_iter().map(PlaneTree::Block).collect();
                    if at_root && k == 1 {
                        parts
                    } else {
                        vec![PlaneTree::Bracket(parts)]
                    }
                })
                .collect(),
            PlaneTree::Block(_) => Vec::new(),
            PlaneTree::Bracket(inner) => child_covers(inner, false)
                .into_iter()
                .map(|v| vec![PlaneTree::Bracket(v)])
                .collect(),
        };
        for r in replacements {
            let mut v = kids[..i].to_vec();
            v.extend(r);
            v.extend_from_slice(&kids[i + 1..]);
            out.push(v);
        }
    }
    out
}

/// All faces covered by `face`: one bracket inserted around a contiguous run
/// of siblings, or one block subdivided into an ordered partition (hung under
/// a new node, or directly under the root for the top face).
pub fn covering_moves(face: &KPFace) -> Vec<KPFace> {
    child_covers(&face.children, true)
        .into_iter()
        .map(|children| KPFace { root: face.root, children })
        .collect()
}

/// Union of the elements below each node, keyed by set, and the node's
/// internal/leaf status.
fn node_sets(kids: &[PlaneTree], out: &mut Vec<(BTreeSet<Leaf>, bool)>) -> BTreeSet<Leaf> {
    let mut all = BTreeSet::new();
    for k in kids {
        let s = match k {
            PlaneTree::Block(b) => {
                let s: BTreeSet<Leaf> = b.iter().copied().collect();
                out.push((s.clone(), false));
                s
            }
            PlaneTree::Bracket(inner) => {
                let s = node_sets(inner, out);
                out.push((s.clone(), true));
                s
            }
        };
        all.extend(s);
    }
    all
}

/// `fine <= coarse` in the face order.
///
/// `fine` refines `coarse` iff every block of `coarse` is the element set of
/// a node of `fine`, these nodes appear in the same order, and after
/// collapsing them every internal cluster of `coarse` is a cluster of `fine`.
pub fn is_refinement(fine: &KPFace, coarse: &KPFace) -> Result<bool> {
    if fine.root != coarse.root || fine.m() != coarse.m() {
        return Err(BmeError::domain("faces over different label sets"));
    }
    if coarse.is_top() {
        return Ok(true);
    }
    if fine.is_top() {
        return Ok(false);
    }
    let mut fine_nodes = Vec::new();
    node_sets(&fine.children, &mut fine_nodes);
    let coarse_blocks: Vec<BTreeSet<Leaf>> =
        coarse.blocks().into_iter().map(|b| b.into_iter().collect()).collect();
    let fine_sets: BTreeSet<&BTreeSet<Leaf>> = fine_nodes.iter().map(|(s, _)| s).collect();
    if !coarse_blocks.iter().all(|b| fine_sets.contains(b)) {
        return Ok(false);
    }
    // collapsed leaf order must agree
    let order = fine.elements();
    let first_pos: HashMap<Leaf, usize> = order.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let starts: Vec<usize> = coarse_blocks
        .iter()
        .map(|b| *b.iter().map(|l| &first_pos[l]).min().expect("nonempty"))
        .collect();
    let sorted = {
        let mut s = starts.clone();
        s.sort_unstable();
        s
    };
    if starts != sorted {
        return Ok(false);
    }
    let fine_clusters: BTreeSet<BTreeSet<Leaf>> = fine_nodes
        .iter()
        .filter(|(s, internal)| *internal && !coarse_blocks.iter().any(|b| s.is_subset(b)))
        .map(|(s, _)| s.clone())
        .collect();
    let mut coarse_nodes = Vec::new();
    node_sets(&coarse.children, &mut coarse_nodes);
    Ok(coarse_nodes
        .iter()
        .filter(|(_, internal)| *internal)
        .all(|(s, _)| fine_clusters.contains(s)))
}

#[derive(Clone, Debug)]
enum Shape {
    Leaf,
    Node(Vec<Shape>),
}

fn binary_shapes(k: usize) -> Vec<Shape> {
    if k == 1 {
        return vec![Shape::Leaf];
    }
    let mut out = Vec::new();
    for left in 1..k {
        for l in binary_shapes(left) {
            for r in binary_shapes(k - left) {
                out.push(Shape::Node(vec![l.clone(), r]));
            }
        }
    }
    out
}

/// Plane trees with `k` leaves and every internal node of degree >= 2.
fn schroeder_shapes(k: usize) -> Vec<Shape> {
    if k == 1 {
        return vec![Shape::Leaf];
    }
    let mut out = Vec::new();
    for comp in compositions(k) {
        if comp.len() < 2 {
            continue;
        }
        let mut acc: Vec<Vec<Shape>> = vec![Vec::new()];
        for &c in &comp {
            let subs = schroeder_shapes(c);
            acc = acc
                .into_iter()
                .flat_map(|prefix| {
                    subs.iter().map(move |s| {
                        let mut p = prefix.clone();
                        p.push(s.clone());
                        p
                    })
                })
                .collect();
        }
        out.extend(acc.into_iter().map(Shape::Node));
    }
    out
}

fn compositions(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=k {
        for mut rest in compositions(k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn fill(shape: &Shape, blocks: &mut impl Iterator<Item = Vec<Leaf>>) -> PlaneTree {
    match shape {
        Shape::Leaf => PlaneTree::Block(blocks.next().expect("enough blocks")),
        Shape::Node(kids) => PlaneTree::Bracket(kids.iter().map(|k| fill(k, blocks)).collect()),
    }
}

fn face_from_shape(root: Leaf, shape: &Shape, blocks: Vec<Vec<Leaf>>) -> KPFace {
    let mut it = blocks.into_iter();
    let children = match fill(shape, &mut it) {
        PlaneTree::Bracket(kids) => kids,
        leaf => vec![leaf],
    };
    KPFace { root, children }
}

fn ground_set(m: usize, root: Leaf) -> Result<Vec<Leaf>> {
    if m < 2 {
        return Err(BmeError::domain(format!("faces need m >= 2, got {m}")));
    }
    if root == 0 || root > m + 1 {
        return Err(BmeError::domain(format!("root label {root} outside 1..={}", m + 1)));
    }
    Ok((1..=m + 1).filter(|&l| l != root).collect())
}

/// All `C_{m-1} * m!` vertices over `{1..m+1} \ {root}`, by leaf order and
/// then by tree shape.
pub fn enumerate_kp_vertices(m: usize, root: Leaf) -> Result<Vec<KPFace>> {
    let set = ground_set(m, root)?;
    let shapes = binary_shapes(m);
    let mut out = Vec::new();
    for perm in permutations(m) {
        for s in &shapes {
            let blocks = perm.iter().map(|&i| vec![set[i]]).collect();
            out.push(face_from_shape(root, s, blocks));
        }
    }
    Ok(out)
}

/// Every face over `{1..m+1} \ {root}`, for `m <= FACE_LIMIT`.
pub fn enumerate_kp_faces(m: usize, root: Leaf) -> Result<Vec<KPFace>> {
    let set = ground_set(m, root)?;
    if m > FACE_LIMIT {
        return Err(BmeError::Guard { operation: "enumerate_kp_faces", n: m, limit: FACE_LIMIT });
    }
    let mut out = vec![KPFace { root, children: vec![PlaneTree::Block(set.clone())] }];
    for parts in ordered_partitions(&set) {
        for s in schroeder_shapes(parts.len()) {
            out.push(face_from_shape(root, &s, parts.clone()));
        }
    }
    Ok(out)
}

/// Groups the vertices by their image under `phi`, for `m <= FIBER_LIMIT`.
pub fn phi_fibers(m: usize, root: Leaf) -> Result<BTreeMap<PhyloTree, Vec<KPFace>>> {
    if m > FIBER_LIMIT {
        return Err(BmeError::Guard { operation: "phi_fibers", n: m, limit: FIBER_LIMIT });
    }
    let verts = enumerate_kp_vertices(m, root)?;
    let images: Vec<PhyloTree> = verts.par_iter().map(phi).collect();
    let mut out: BTreeMap<PhyloTree, Vec<KPFace>> = BTreeMap::new();
    for (t, f) in images.into_iter().zip(verts) {
        out.entry(t).or_default().push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_newick;
    use std::collections::{HashSet, VecDeque};

    fn f(s: &str) -> KPFace {
        parse_bracketing(s, None).unwrap()
    }

    fn g(s: &str, r: Leaf) -> KPFace {
        parse_bracketing(s, Some(r)).unwrap()
    }

    /// Vertices below a face, from the plane-tree structure alone.
    fn vertices_below(face: &KPFace) -> HashSet<KPFace> {
        fn binary_over(items: Vec<Vec<PlaneTree>>) -> Vec<PlaneTree> {
            // items: alternatives for each child in order
            let k = items.len();
            let mut out = Vec::new();
            for s in binary_shapes(k) {
                let mut acc: Vec<Vec<PlaneTree>> = vec![Vec::new()];
                for alts in &items {
                    acc = acc
                        .into_iter()
                        .flat_map(|p| {
                            alts.iter().map(move |a| {
                                let mut p = p.clone();
                                p.push(a.clone());
                                p
                            })
                        })
                        .collect();
                }
                for choice in acc {
                    fn place(s: &Shape, it: &mut std::vec::IntoIter<PlaneTree>) -> PlaneTree {
                        match s {
                            Shape::Leaf => it.next().unwrap(),
                            Shape::Node(k) => PlaneTree::Bracket(k.iter().map(|c| place(c, it)).collect()),
                        }
                    }
                    out.push(place(&s, &mut choice.into_iter()));
                }
            }
            out
        }
        fn alts(t: &PlaneTree) -> Vec<PlaneTree> {
            match t {
                PlaneTree::Block(b) if b.len() == 1 => vec![t.clone()],
                PlaneTree::Block(b) => {
                    let mut out = Vec::new();
                    for p in permutations(b.len()) {
                        let items = p.iter().map(|&i| vec![PlaneTree::Block(vec![b[i]])]).collect();
                        out.extend(binary_over(items));
                    }
                    out
                }
                PlaneTree::Bracket(kids) => binary_over(kids.iter().map(alts).collect()),
            }
        }
        let top = PlaneTree::Bracket(face.children.clone());
        let all = if face.is_top() { alts(&face.children[0]) } else { alts(&top) };
        all.into_iter()
            .map(|t| match t {
                PlaneTree::Bracket(kids) => KPFace { root: face.root, children: kids },
                leaf => panic!("vertex must be a bracket, got {leaf:?}"),
            })
            .collect()
    }

    #[test]
    fn parses_examples() {
        let face = g("(({3},{4,5}),{2},{1,6,7})", 8);
        assert_eq!(face.children().len(), 3);
        assert_eq!(face.to_string(), "(({3},{4,5}),{2},{1,6,7})");
        let top = f("({1,2,3})");
        assert!(top.is_top());
        assert_eq!(top.root(), 4);
        assert!(parse_bracketing("(({1}))", None).is_err());
        assert!(parse_bracketing("(({1},{2}))", None).is_err());
        assert!(parse_bracketing("({1},{1,2})", None).is_err());
        assert!(parse_bracketing("({1},{3})", Some(4)).is_err());
        assert!(parse_bracketing("({1},{2}", None).is_err());
        assert!(parse_bracketing("({1},{2})", Some(2)).is_err());
        assert_eq!(g("({1},{3})", 2).root(), 2);
    }

    #[test]
    fn json_round_trip() {
        let face = g("(({3},{4,5}),{2},{1,6,7})", 8);
        let v = face.to_json();
        assert_eq!(v["root"], 8);
        assert_eq!(v["tree"], json!([[0, 1], 2, 3]));
        assert_eq!(v["blocks"], json!([[3], [4, 5], [2], [1, 6, 7]]));
        assert_eq!(KPFace::from_json(&v).unwrap(), face);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&f("(({1},{2}),{3})")), parse_newick("((1,2),3,4);").unwrap());
        assert_eq!(phi(&f("({1,2,3,4})")), PhyloTree::star(5).unwrap());
        assert_eq!(phi(&f("(({1},{2}),{3})")), phi(&f("({3},({2},{1}))")));
        let big = phi(&g("(({3},{4,5}),{2},{1,6,7})", 8));
        assert_eq!(big, parse_newick("(((3,(4,5)),2,8),(1,6,7));").unwrap());
    }

    #[test]
    fn known_covers_are_generated() {
        let face = g("(({3},{4,5}),{2},{1,6,7})", 8);
        let covers = covering_moves(&face);
        for want in [
            "((({3},{4,5}),{2}),{1,6,7})",
            "(({3},{4,5}),{2},({1},{6},{7}))",
            "(({3},{4,5}),{2},({1,7},{6}))",
        ] {
            assert!(covers.contains(&g(want, 8)), "{want}");
        }
        assert!(covers.iter().all(|c| c.dimension() + 1 == face.dimension()));
        let vertex = f("(({1},{2}),{3})");
        assert!(vertex.is_vertex());
        assert!(covering_moves(&vertex).is_empty());
    }

    #[test]
    fn refinement_examples() {
        let coarse = g("(({3},{4,5}),{2},{1,6,7})", 8);
        assert!(is_refinement(&g("((({3},{4,5}),{2}),{1,6,7})", 8), &coarse).unwrap());
        assert!(!is_refinement(&coarse, &g("((({3},{4,5}),{2}),{1,6,7})", 8)).unwrap());
        let top = f("({1,2,3})");
        let a = f("(({1},{2}),{3})");
        let b = f("({1},({2},{3}))");
        assert!(is_refinement(&a, &top).unwrap());
        assert!(!is_refinement(&a, &b).unwrap() && !is_refinement(&b, &a).unwrap());
        assert!(is_refinement(&g("({1},{3})", 2), &g("({1,3})", 2)).unwrap());
        assert!(is_refinement(&a, &g("({1},{2},{4})", 3)).is_err());
    }

    #[test]
    fn vertex_counts() {
        assert_eq!(enumerate_kp_vertices(2, 3).unwrap().len(), 2);
        assert_eq!(enumerate_kp_vertices(3, 4).unwrap().len(), 12);
        assert_eq!(enumerate_kp_vertices(4, 5).unwrap().len(), 120);
        let v = enumerate_kp_vertices(4, 2).unwrap();
        assert!(v.iter().all(|f| f.is_vertex() && f.root() == 2));
        assert_eq!(v.iter().collect::<HashSet<_>>().len(), 120);
    }

    #[test]
    fn fibers_are_uniform() {
        for (m, trees, size) in [(3, 3, 4), (4, 15, 8), (5, 105, 16)] {
            let fib = phi_fibers(m, m + 1).unwrap();
            assert_eq!(fib.len(), trees);
            assert!(fib.values().all(|v| v.len() == size));
        }
        let fib = phi_fibers(4, 1).unwrap();
        assert!(fib.values().all(|v| v.len() == 8));
        assert!(phi_fibers(8, 9).is_err());
    }

    #[test]
    fn face_counts_and_dimensions() {
        // 12-gon: 12 vertices, 12 edges, one 2-face
        let faces = enumerate_kp_faces(3, 4).unwrap();
        assert_eq!(faces.len(), 25);
        let by_dim = |d| faces.iter().filter(|f| f.dimension() == d).count();
        assert_eq!((by_dim(0), by_dim(1), by_dim(2)), (12, 12, 1));
        assert_eq!(enumerate_kp_faces(4, 5).unwrap().len(), 1 + 14 + 36 * 3 + 24 * 11);
    }

    #[test]
    fn covers_generate_the_order() {
        for m in 2..=4 {
            let root = m + 1;
            let faces = enumerate_kp_faces(m, root).unwrap();
            let index: HashMap<&KPFace, usize> = faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
            let covers: Vec<Vec<usize>> = faces
                .iter()
                .map(|f| covering_moves(f).iter().map(|c| index[c]).collect())
                .collect();
            let below: Vec<HashSet<KPFace>> = faces.iter().map(vertices_below).collect();
            // everything is reached from the top face
            let mut seen = vec![false; faces.len()];
            let mut queue = VecDeque::from([0]);
            seen[0] = true;
            while let Some(i) = queue.pop_front() {
                for &j in &covers[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            assert!(seen.iter().all(|&s| s), "m = {m}");
            for (i, coarse) in faces.iter().enumerate() {
                let mut reach = vec![false; faces.len()];
                let mut queue = VecDeque::from([i]);
                reach[i] = true;
                while let Some(a) = queue.pop_front() {
                    for &b in &covers[a] {
                        if !reach[b] {
                            reach[b] = true;
                            queue.push_back(b);
                        }
                    }
                }
                for (j, fine) in faces.iter().enumerate() {
                    let structural = is_refinement(fine, coarse).unwrap();
                    let by_vertices = below[j].is_subset(&below[i]);
                    assert_eq!(reach[j], structural, "{fine} vs {coarse}");
                    assert_eq!(structural, by_vertices, "{fine} vs {coarse}");
                }
            }
        }
    }

    #[test]
    fn phi_preserves_order_on_covers() {
        for m in 2..=5 {
            for face in enumerate_kp_faces(m, m + 1).unwrap() {
                let coarse = phi(&face).splits();
                for c in covering_moves(&face) {
                    assert!(coarse.is_subset(&phi(&c).splits()), "{c} < {face}");
                }
            }
        }
    }
}
