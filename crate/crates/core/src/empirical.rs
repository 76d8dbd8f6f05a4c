//! Neighborhood and component empirical measures of finite marked graphs.

use crate::graph::MarkedGraph;
use crate::measure::TreeMeasure;
use crate::tree::{CanonicalTree, Child, HalfEdgeTree};

/// The depth-`h` ball around a root vertex, by BFS layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentView {
    pub root: usize,
    /// `layers[d]` holds the vertices at distance exactly `d`.
    pub layers: Vec<Vec<usize>>,
    /// True iff the subgraph induced on the ball is not a tree.
    pub cycle_detected: bool,
}

/// BFS view of the ball of radius `h` around `root`.
pub fn component_view(g: &MarkedGraph, root: usize, h: u32) -> ComponentView {
    let mut dist = vec![u32::MAX; g.n()];
    dist[root] = 0;
    let mut layers = vec![vec![root]];
    for d in 0..h {
        let mut next = Vec::new();
        for &v in &layers[d as usize] {
            for &(u, _, _) in g.neighbors(v) {
                if dist[u] == u32::MAX {
                    dist[u] = d + 1;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
    }
    let size: usize = layers.iter().map(Vec::len).sum();
    let twice_edges: usize = layers
        .iter()
        .flatten()
        .map(|&v| g.neighbors(v).iter().filter(|e| dist[e.0] != u32::MAX).count())
        .sum();
    ComponentView { root, layers, cycle_detected: twice_edges / 2 + 1 != size }
}

/// Non-backtracking unfolding of depth `depth` from `v`, never stepping back
/// to `skip` at the first step. On a tree ball this is the ball itself.
pub fn unfold(g: &MarkedGraph, v: usize, skip: Option<usize>, depth: u32) -> CanonicalTree {
    let mut children = Vec::new();
    if depth > 0 {
        for &(u, y_vu, y_uv) in g.neighbors(v) {
            if Some(u) != skip {
                children.push(Child::new(y_uv, y_vu, unfold(g, u, Some(v), depth - 1)));
            }
        }
    }
    CanonicalTree::new(g.vmark(v), children)
}

/// Half-edge view `(G(v\u)_depth, y_(v,u))` of the unfolding from `v` away from `u`.
pub fn half_edge_view(g: &MarkedGraph, v: usize, u: usize, depth: u32) -> HalfEdgeTree {
    let y = g.edge_mark(v, u).expect("adjacent vertices");
    HalfEdgeTree::new(unfold(g, v, Some(u), depth), y)
}

/// Marked depth-1 star at `v`.
pub fn star_at(g: &MarkedGraph, v: usize) -> CanonicalTree {
    unfold(g, v, None, 1)
}

/// Uniform average over vertices of the depth-1 stars.
pub fn neighborhood_measure(g: &MarkedGraph) -> TreeMeasure {
    let mut m = TreeMeasure::new(1);
    let w = 1.0 / g.n() as f64;
    for v in 0..g.n() {
        m.add(star_at(g, v), w);
    }
    m
}

/// Uniform average over vertices of the depth-`h` rooted balls; balls that
/// are not trees go to the non-tree mass.
pub fn component_measure(g: &MarkedGraph, h: u32) -> TreeMeasure {
    let mut m = TreeMeasure::new(h);
    let w = 1.0 / g.n() as f64;
    for v in 0..g.n() {
        if component_view(g, v, h).cycle_detected {
            m.add_non_tree(w);
        } else {
            m.add(unfold(g, v, None, h), w);
        }
    }
    m
}

/// `⟨L, f⟩` for `f(τ) = Σ_{v ∈ N_o} hfun(x_v)`; `hfun` is indexed by mark.
pub fn empirical_functional(l: &TreeMeasure, hfun: &[f64]) -> f64 {
    l.atoms()
        .iter()
        .map(|(t, w)| w * t.children().iter().map(|c| hfun[c.tree.mark() as usize]).sum::<f64>())
        .sum()
}
