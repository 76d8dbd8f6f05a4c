//! Numerical test of the mass-transport principle on measures over finite
//! rooted graphs.

use crate::empirical::{half_edge_view, unfold};
use crate::graph::MarkedGraph;
use crate::measure::TreeMeasure;
use crate::tree::canonical_labeling;
use rand::Rng;
use std::collections::VecDeque;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

/// A finitely supported measure on rooted finite graphs.
#[derive(Clone, Debug, Default)]
pub struct RootedGraphMeasure {
    pub atoms: Vec<(Arc<MarkedGraph>, usize, f64)>,
}

impl RootedGraphMeasure {
    /// Uniformly rooted finite graph.
    pub fn uniform(g: &MarkedGraph) -> Self {
        let g = Arc::new(g.clone());
        let w = 1.0 / g.n() as f64;
        RootedGraphMeasure { atoms: (0..g.n()).map(|v| (g.clone(), v, w)).collect() }
    }

    /// Each tree atom becomes its own graph rooted at the tree root.
    pub fn from_tree_measure(m: &TreeMeasure) -> Self {
        let atoms = m
            .atoms()
            .iter()
            .map(|(t, &w)| {
                let l = canonical_labeling(t);
                let edges = l
                    .vertices
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.parent.map(|p| (p, i, v.y_down, v.y_up)))
                    .collect();
                let marks = l.vertices.iter().map(|v| v.mark).collect();
                let g = MarkedGraph::from_marked_edges(l.len(), marks, edges).expect("tree is simple");
                (Arc::new(g), 0, w)
            })
            .collect();
        RootedGraphMeasure { atoms }
    }

    /// Multiplies the weight of the atom rooted at vertex `v` by `f(v)`.
    pub fn reweight<F: Fn(usize) -> f64>(&mut self, f: F) {
        for a in &mut self.atoms {
            a.2 *= f(a.1);
        }
    }
}

/// `|Σ w Σ_v f(G,o,v) − Σ w Σ_v f(G,v,o)|`, with `v` over the component of `o`.
///
/// Both sides are accumulated in the same order, so a symmetric `f` gives exactly 0.
pub fn mtp_violation<F: Fn(&MarkedGraph, usize, usize) -> f64>(u: &RootedGraphMeasure, f: &F) -> f64 {
    let (mut out, mut inn) = (0.0, 0.0);
    for (g, o, w) in &u.atoms {
        let comp = component_of(g, *o);
        let (mut so, mut si) = (0.0, 0.0);
        for v in comp {
            so += f(g, *o, v);
            si += f(g, v, *o);
        }
        out += w * so;
        inn += w * si;
    }
    (out - inn).abs()
}

fn component_of(g: &MarkedGraph, o: usize) -> Vec<usize> {
    let mut seen = vec![false; g.n()];
    seen[o] = true;
    let mut order = vec![o];
    let mut i = 0;
    while i < order.len() {
        for &(u, _, _) in g.neighbors(order[i]) {
            if !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
        i += 1;
    }
    order.sort_unstable();
    order
}

fn distances(g: &MarkedGraph, s: usize) -> Vec<u32> {
    let mut d = vec![u32::MAX; g.n()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &(u, _, _) in g.neighbors(v) {
            if d[u] == u32::MAX {
                d[u] = d[v] + 1;
                q.push_back(u);
            }
        }
    }
    d
}

fn seeded_bit<T: Hash>(seed: u64, x: T) -> f64 {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    x.hash(&mut h);
    (h.finish() & 1) as f64
}

/// Outcome of [`mtp_check`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MtpReport {
    pub max_violation: f64,
    pub trials: usize,
}

/// Evaluates the mass-transport identity for `trials` random bounded test
/// functions. Even trials use a seeded 0/1 hash of the two rooted views and
/// their capped distance; odd trials use `1{adjacent}·g(half-edge views)`
/// with a seeded 0/1 hash `g`.
pub fn mtp_check<R: Rng + ?Sized>(u: &RootedGraphMeasure, trials: usize, rng: &mut R) -> MtpReport {
    let mut max_violation: f64 = 0.0;
    for trial in 0..trials {
        let seed: u64 = rng.random();
        let radius: u32 = rng.random_range(0..=3);
        let v = if trial % 2 == 0 {
            let f = |g: &MarkedGraph, a: usize, b: usize| {
                let d = distances(g, a)[b].min(radius + 2);
                let va = unfold(g, a, None, radius).hash64();
                let vb = unfold(g, b, None, radius).hash64();
                seeded_bit(seed, (va, vb, d))
            };
            mtp_violation(u, &f)
        } else {
            let f = |g: &MarkedGraph, a: usize, b: usize| {
                if g.edge_mark(a, b).is_none() {
                    return 0.0;
                }
                let ba = half_edge_view(g, b, a, radius);
                let ab = half_edge_view(g, a, b, radius);
                seeded_bit(seed, (ba.tree.hash64(), ba.pendant, ab.tree.hash64(), ab.pendant))
            };
            mtp_violation(u, &f)
        };
        max_violation = max_violation.max(v);
    }
    MtpReport { max_violation, trials }
}
