use log::warn;

use super::PhyloTree;
use crate::error::{BmeError, Result};

enum Node {
    Leaf(usize),
    Inner(Vec<Node>, usize),
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    saw_length: bool,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn node(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                let mut kids = vec![self.node()?];
                loop {
                    match self.peek() {
                        Some(b',') => {
                            self.pos += 1;
                            kids.push(self.node()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(c) => {
                            return Err(BmeError::parse(
                                self.pos,
                                format!("unexpected {:?} inside parentheses", c as char),
                            ))
                        }
                        None => {
                            return Err(BmeError::parse(
                                open,
                                "unbalanced parentheses: '(' is never closed",
                            ))
                        }
                    }
                }
                // internal node labels (support values) are ignored
                self.label();
                self.length()?;
                Ok(Node::Inner(kids, open))
            }
            Some(_) => {
                let start = self.pos;
                let label = self.label();
                if label.is_empty() {
                    return Err(BmeError::parse(start, "expected a leaf label"));
                }
                let leaf: usize = label.parse().map_err(|_| {
                    BmeError::parse(start, format!("leaf label {label:?} is not a positive integer"))
                })?;
                if leaf == 0 {
                    return Err(BmeError::parse(start, "leaf labels start at 1"));
                }
                self.length()?;
                Ok(Node::Leaf(leaf))
            }
            None => Err(BmeError::parse(self.pos, "unexpected end of input")),
        }
    }

    fn label(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && !matches!(self.text[self.pos], b'(' | b')' | b',' | b':' | b';')
            && !self.text[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.text[start..self.pos]).into_owned()
    }

    fn length(&mut self) -> Result<()> {
        if self.peek() == Some(b':') {
            self.pos += 1;
            let start = self.pos;
            let value = self.label();
            if value.parse::<f64>().is_err() {
                return Err(BmeError::parse(start, format!("bad branch length {value:?}")));
            }
            self.saw_length = true;
        }
        Ok(())
    }
}

/// Parses a topology-only Newick string over integer leaf labels `1..=n`.
///
/// Branch lengths are accepted and discarded. A degree-2 root is suppressed.
pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        saw_length: false,
    };
    let root = p.node()?;
    match p.peek() {
        Some(b';') => {
            p.pos += 1;
        }
        Some(b')') => return Err(BmeError::parse(p.pos, "unbalanced parentheses: extra ')'")),
        Some(c) => {
            return Err(BmeError::parse(
                p.pos,
                format!("unexpected {:?} after tree", c as char),
            ))
        }
        None => return Err(BmeError::parse(p.pos, "missing terminating ';'")),
    }
    if let Some(c) = p.peek() {
        return Err(BmeError::parse(p.pos, format!("trailing {:?} after ';'", c as char)));
    }
    if p.saw_length {
        warn!("branch lengths in Newick input are ignored");
    }

    let Node::Inner(kids, _) = root else {
        return Err(BmeError::parse(0, "a tree needs at least 3 leaves"));
    };

    let mut leaves = Vec::new();
    collect_leaves(&kids, &mut leaves);
    let n = leaves.len();
    let mut seen = vec![false; n + 1];
    for &l in &leaves {
        if l > n {
            return Err(BmeError::parse(0, format!("leaf {l} out of range 1..={n}")));
        }
        if seen[l] {
            return Err(BmeError::parse(0, format!("duplicate leaf label {l}")));
        }
        seen[l] = true;
    }
    if n < 3 {
        return Err(BmeError::parse(0, "a tree needs at least 3 leaves"));
    }

    let mut edges = Vec::new();
    let mut next = n;
    let root_id = next;
    next += 1;
    match kids.len() {
        1 => {
            return Err(BmeError::parse(0, "root has a single child (degree-2 node)"));
        }
        2 => {
            // suppress the degree-2 root by joining its two children
            let a = build(&kids[0], &mut next, &mut edges)?;
            let b = build(&kids[1], &mut next, &mut edges)?;
            edges.push((a, b));
        }
        _ => {
            for k in &kids {
                let c = build(k, &mut next, &mut edges)?;
                edges.push((root_id, c));
            }
        }
    }
    // compact internal ids when the root was suppressed
    if kids.len() == 2 {
        for e in edges.iter_mut() {
            for x in [&mut e.0, &mut e.1] {
                if *x > root_id {
                    *x -= 1;
                }
            }
        }
    }
    PhyloTree::from_edges(n, &edges).map_err(|e| BmeError::parse(0, e.to_string()))
}

fn collect_leaves(kids: &[Node], out: &mut Vec<usize>) {
    for k in kids {
        match k {
            Node::Leaf(l) => out.push(*l),
            Node::Inner(ks, _) => collect_leaves(ks, out),
        }
    }
}

fn build(node: &Node, next: &mut usize, edges: &mut Vec<(usize, usize)>) -> Result<usize> {
    match node {
        Node::Leaf(l) => Ok(l - 1),
        Node::Inner(kids, pos) => {
            if kids.len() < 2 {
                return Err(BmeError::parse(*pos, "internal node of degree 2"));
            }
            let id = *next;
            *next += 1;
            for k in kids {
                let c = build(k, next, edges)?;
                edges.push((id, c));
            }
            Ok(id)
        }
    }
}
