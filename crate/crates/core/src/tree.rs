//! Canonical unlabeled rooted marked trees, half-edge trees and labeled trees.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

/// Index into a finite mark alphabet.
pub type Mark = u32;

/// Isomorphism-class representative of a finite rooted tree with vertex marks
/// and per-direction edge marks.
///
/// Children are kept sorted by `(ym_child, ym_root, encoding)`, so two trees
/// are isomorphic iff their encodings coincide.
#[derive(Clone)]
pub struct CanonicalTree(Arc<Node>);

struct Node {
    mark: Mark,
    children: Vec<Child>,
    depth: u32,
    size: u32,
    hash: u64,
    code: Box<[u32]>,
    /// Truncations to depths `0..depth`, each built on first use.
    truncations: OnceLock<Box<[OnceLock<CanonicalTree>]>>,
}

/// One child of the root: the child-side mark `y_(v,o)`, the root-side mark
/// `y_(o,v)` and the subtree hanging from the child.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Child {
    pub ym_child: Mark,
    pub ym_root: Mark,
    pub tree: CanonicalTree,
}

impl Child {
    pub fn new(ym_child: Mark, ym_root: Mark, tree: CanonicalTree) -> Self {
        Child { ym_child, ym_root, tree }
    }
}

impl CanonicalTree {
    /// Isolated root.
    pub fn leaf(mark: Mark) -> Self {
        Self::new(mark, Vec::new())
    }

    /// Builds a tree from a root mark and children in any order.
    pub fn new(mark: Mark, mut children: Vec<Child>) -> Self {
        children.sort();
        Self::from_sorted(mark, children)
    }

    /// Builds a tree from children already in canonical order.
    pub(crate) fn from_sorted(mark: Mark, children: Vec<Child>) -> Self {
        let depth = children.iter().map(|c| c.tree.depth() + 1).max().unwrap_or(0);
        let size = 1 + children.iter().map(|c| c.tree.size()).sum::<u32>();
        let len = 2 + children.iter().map(|c| 2 + c.tree.0.code.len()).sum::<usize>();
        let mut code = Vec::with_capacity(len);
        code.push(mark);
        code.push(children.len() as u32);
        for c in &children {
            code.push(c.ym_child);
            code.push(c.ym_root);
            code.extend_from_slice(&c.tree.0.code);
        }
        let mut hasher = rustc_hash::FxHasher::default();
        code.hash(&mut hasher);
        CanonicalTree(Arc::new(Node {
            mark,
            children,
            depth,
            size,
            hash: hasher.finish(),
            code: code.into_boxed_slice(),
            truncations: OnceLock::new(),
        }))
    }

    pub fn mark(&self) -> Mark {
        self.0.mark
    }

    pub fn children(&self) -> &[Child] {
        &self.0.children
    }

    pub fn degree(&self) -> usize {
        self.0.children.len()
    }

    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    /// Number of vertices.
    pub fn size(&self) -> u32 {
        self.0.size
    }

    /// Memoized 64-bit hash of the encoding.
    pub fn hash64(&self) -> u64 {
        self.0.hash
    }

    /// Prefix-free token encoding: `mark, degree, (ym_child, ym_root, child)*`.
    pub fn encoding(&self) -> &[u32] {
        &self.0.code
    }

    /// Restriction to vertices within distance `h` of the root.
    pub fn truncate(&self, h: u32) -> CanonicalTree {
        if self.depth() <= h {
            return self.clone();
        }
        let slots = self.0.truncations.get_or_init(|| (0..self.depth()).map(|_| OnceLock::new()).collect());
        slots[h as usize].get_or_init(|| self.build_truncation(h)).clone()
    }

    fn build_truncation(&self, h: u32) -> CanonicalTree {
        if h == 0 {
            return Self::leaf(self.mark());
        }
        let children = self
            .children()
            .iter()
            .map(|c| Child::new(c.ym_child, c.ym_root, c.tree.truncate(h - 1)))
            .collect();
        Self::new(self.mark(), children)
    }

    /// The tree with the root's `i`-th child branch removed.
    pub fn remove_child(&self, i: usize) -> CanonicalTree {
        let mut children = self.children().to_vec();
        children.remove(i);
        Self::from_sorted(self.mark(), children)
    }

    /// Splits along the edge to child `i`, returning the branch `τ(v\o)` with
    /// pendant `y_(v,o)` and the remainder `τ(o\v)` with pendant `y_(o,v)`.
    pub fn split_at_child(&self, i: usize) -> Result<(HalfEdgeTree, HalfEdgeTree)> {
        let c = self.children().get(i).ok_or(Error::ChildIndex {
            index: i,
            degree: self.degree(),
        })?;
        Ok((
            HalfEdgeTree::new(c.tree.clone(), c.ym_child),
            HalfEdgeTree::new(self.remove_child(i), c.ym_root),
        ))
    }

    /// `remove_child(i).truncate(h)` without building the full remainder.
    pub fn remainder_truncated(&self, i: usize, h: u32) -> CanonicalTree {
        if h == 0 {
            return Self::leaf(self.mark());
        }
        let children = self
            .children()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, c)| Child::new(c.ym_child, c.ym_root, c.tree.truncate(h - 1)))
            .collect();
        Self::new(self.mark(), children)
    }

    /// Runs of identical root children as `(first index, multiplicity)`.
    pub fn child_runs(&self) -> Vec<(usize, usize)> {
        let ch = self.children();
        let mut out = Vec::new();
        let mut i = 0;
        while i < ch.len() {
            let mut j = i + 1;
            while j < ch.len() && ch[j] == ch[i] {
                j += 1;
            }
            out.push((i, j - i));
            i = j;
        }
        out
    }

    /// Branch and remainder across child `i`, both truncated to depth `h`.
    pub fn split_truncated(&self, i: usize, h: u32) -> (HalfEdgeTree, HalfEdgeTree) {
        let c = &self.children()[i];
        (
            HalfEdgeTree::new(c.tree.truncate(h), c.ym_child),
            HalfEdgeTree::new(self.remainder_truncated(i, h), c.ym_root),
        )
    }

    /// Groups identical root children; each class carries its split and multiplicity.
    pub fn edge_classes(&self) -> Vec<EdgeClass> {
        let ch = self.children();
        self.child_runs()
            .into_iter()
            .map(|(i, m)| EdgeClass {
                first: i,
                multiplicity: m,
                branch: HalfEdgeTree::new(ch[i].tree.clone(), ch[i].ym_child),
                remainder: HalfEdgeTree::new(self.remove_child(i), ch[i].ym_root),
            })
            .collect()
    }
}

/// A class of identical root children.
#[derive(Clone, Debug)]
pub struct EdgeClass {
    /// Index of the first child of the class.
    pub first: usize,
    pub multiplicity: usize,
    pub branch: HalfEdgeTree,
    pub remainder: HalfEdgeTree,
}

impl PartialEq for CanonicalTree {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.code == other.0.code)
    }
}

impl Eq for CanonicalTree {}

impl Hash for CanonicalTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for CanonicalTree {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.code.cmp(&other.0.code)
    }
}

impl PartialOrd for CanonicalTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Compact bracket notation: `mark[ym_child/ym_root:child, ...]`.
impl fmt::Display for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mark())?;
        if self.degree() > 0 {
            write!(f, "[")?;
            for (i, c) in self.children().iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}/{}:{}", c.ym_child, c.ym_root, c.tree)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// A tree rooted at `v` after removing the edge to a neighbor `u`, together
/// with the mark `y_(v,u)` carried toward `u`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HalfEdgeTree {
    pub tree: CanonicalTree,
    pub pendant: Mark,
}

impl HalfEdgeTree {
    pub fn new(tree: CanonicalTree, pendant: Mark) -> Self {
        HalfEdgeTree { tree, pendant }
    }

    pub fn truncate(&self, h: u32) -> HalfEdgeTree {
        HalfEdgeTree::new(self.tree.truncate(h), self.pendant)
    }

    pub fn depth(&self) -> u32 {
        self.tree.depth()
    }
}

impl fmt::Display for HalfEdgeTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}|{}>", self.tree, self.pendant)
    }
}

/// `a ⊕ b`: joins the root of `b` to the root of `a` by a new edge whose
/// child-side mark is `b.pendant` and root-side mark is `a.pendant`.
pub fn attach(a: &HalfEdgeTree, b: &HalfEdgeTree) -> CanonicalTree {
    let mut children = a.tree.children().to_vec();
    let new = Child::new(b.pendant, a.pendant, b.tree.clone());
    let pos = children.partition_point(|c| *c <= new);
    children.insert(pos, new);
    CanonicalTree::from_sorted(a.tree.mark(), children)
}

/// Number of root children `v` with `(t(v\o)_{h−1}, t(o\v)_{h−1}) = (tau, tau_prime)`.
pub fn count_eh(tau: &HalfEdgeTree, tau_prime: &HalfEdgeTree, t: &CanonicalTree, h: u32) -> usize {
    if h == 0 {
        return 0;
    }
    t.edge_classes()
        .into_iter()
        .filter(|c| c.branch.truncate(h - 1) == *tau && c.remainder.truncate(h - 1) == *tau_prime)
        .map(|c| c.multiplicity)
        .sum()
}

/// A vertex of a [`LabeledTree`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledVertex {
    /// Ulam-Harris-Neveu label; empty for the root.
    pub label: Vec<u32>,
    pub mark: Mark,
    pub parent: Option<usize>,
    /// Children in label order `1, 2, ...`.
    pub children: Vec<usize>,
    /// Mark `y_(v,parent)`; unused at the root.
    pub y_up: Mark,
    /// Mark `y_(parent,v)`; unused at the root.
    pub y_down: Mark,
}

/// A rooted marked tree whose vertices carry Ulam-Harris-Neveu labels.
/// Vertex 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTree {
    pub vertices: Vec<LabeledVertex>,
}

impl LabeledTree {
    pub fn new_root(mark: Mark) -> Self {
        LabeledTree {
            vertices: vec![LabeledVertex {
                label: Vec::new(),
                mark,
                parent: None,
                children: Vec::new(),
                y_up: 0,
                y_down: 0,
            }],
        }
    }

    /// Appends a child to `parent` with the next free label; returns its index.
    pub fn add_child(&mut self, parent: usize, mark: Mark, y_up: Mark, y_down: Mark) -> usize {
        let idx = self.vertices.len();
        let mut label = self.vertices[parent].label.clone();
        label.push(self.vertices[parent].children.len() as u32 + 1);
        self.vertices.push(LabeledVertex {
            label,
            mark,
            parent: Some(parent),
            children: Vec::new(),
            y_up,
            y_down,
        });
        self.vertices[parent].children.push(idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Distance of each vertex from the root.
    pub fn depths(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.len()];
        for v in self.bfs_order() {
            for &c in &self.vertices[v].children {
                d[c] = d[v] + 1;
            }
        }
        d
    }

    fn bfs_order(&self) -> Vec<usize> {
        let mut order = vec![0];
        let mut i = 0;
        while i < order.len() {
            order.extend_from_slice(&self.vertices[order[i]].children);
            i += 1;
        }
        order
    }

    /// Canonical form of the subtree below vertex `v`.
    pub fn subtree(&self, v: usize) -> CanonicalTree {
        let mut order = vec![v];
        let mut i = 0;
        while i < order.len() {
            order.extend_from_slice(&self.vertices[order[i]].children);
            i += 1;
        }
        let mut built: Vec<Option<CanonicalTree>> = vec![None; self.len()];
        for &u in order.iter().rev() {
            let vx = &self.vertices[u];
            let children = vx
                .children
                .iter()
                .map(|&c| {
                    let cv = &self.vertices[c];
                    Child::new(cv.y_up, cv.y_down, built[c].take().expect("child built"))
                })
                .collect();
            built[u] = Some(CanonicalTree::new(vx.mark, children));
        }
        built[v].take().expect("root built")
    }
}

/// Canonical representative of a labeled tree.
pub fn canonicalize(t: &LabeledTree) -> CanonicalTree {
    t.subtree(0)
}

/// Uniformly random Ulam-Harris-Neveu labeling of `t`: children of every
/// vertex are ordered by an independent uniform permutation.
pub fn random_labeling<R: Rng + ?Sized>(t: &CanonicalTree, rng: &mut R) -> LabeledTree {
    let mut out = LabeledTree::new_root(t.mark());
    let mut stack = vec![(t.clone(), 0usize)];
    while let Some((node, idx)) = stack.pop() {
        let mut order: Vec<usize> = (0..node.degree()).collect();
        order.shuffle(rng);
        for i in order {
            let c = &node.children()[i];
            let ci = out.add_child(idx, c.tree.mark(), c.ym_child, c.ym_root);
            stack.push((c.tree.clone(), ci));
        }
    }
    out
}

/// Deterministic labeling that follows the canonical child order.
pub fn canonical_labeling(t: &CanonicalTree) -> LabeledTree {
    let mut out = LabeledTree::new_root(t.mark());
    let mut stack = vec![(t.clone(), 0usize)];
    while let Some((node, idx)) = stack.pop() {
        for c in node.children() {
            let ci = out.add_child(idx, c.tree.mark(), c.ym_child, c.ym_root);
            stack.push((c.tree.clone(), ci));
        }
    }
    out
}
