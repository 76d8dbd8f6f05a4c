//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use sparse_ldp::graph::MarkedGraph;
use sparse_ldp::measure::TreeMeasure;
use sparse_ldp::tree::{canonical_labeling, HalfEdgeTree, LabeledTree};
use std::collections::HashMap;

/// Random labeled tree on `n` vertices: vertex `i` attaches to a uniform earlier vertex.
pub fn random_labeled_tree<R: Rng>(n: usize, nx: u32, ny: u32, rng: &mut R) -> LabeledTree {
    let mut t = LabeledTree::new_root(rng.random_range(0..nx));
    for i in 1..n {
        let p = rng.random_range(0..i);
        t.add_child(
            p,
            rng.random_range(0..nx),
            rng.random_range(0..ny),
            rng.random_range(0..ny),
        );
    }
    t
}

/// Random marked forest on `n` vertices with random edge marks.
pub fn random_forest<R: Rng>(n: usize, nx: u32, ny: u32, rng: &mut R) -> MarkedGraph {
    let vmarks = (0..n).map(|_| rng.random_range(0..nx)).collect();
    let mut edges = Vec::new();
    for v in 1..n {
        // Each vertex joins an earlier vertex with probability 0.7, else starts a new tree.
        if rng.random_bool(0.7) {
            let u = rng.random_range(0..v);
            edges.push((u, v, rng.random_range(0..ny), rng.random_range(0..ny)));
        }
    }
    MarkedGraph::from_marked_edges(n, vmarks, edges).unwrap()
}

/// Random marked graph (may contain cycles).
pub fn random_graph<R: Rng>(n: usize, p: f64, nx: u32, ny: u32, rng: &mut R) -> MarkedGraph {
    let vmarks = (0..n).map(|_| rng.random_range(0..nx)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p) {
                edges.push((u, v, rng.random_range(0..ny), rng.random_range(0..ny)));
            }
        }
    }
    MarkedGraph::from_marked_edges(n, vmarks, edges).unwrap()
}

/// Exhaustive isomorphism test of two labeled trees by backtracking child matching.
pub fn isomorphic(a: &LabeledTree, b: &LabeledTree) -> bool {
    iso_at(a, 0, b, 0)
}

fn iso_at(a: &LabeledTree, va: usize, b: &LabeledTree, vb: usize) -> bool {
    let (x, y) = (&a.vertices[va], &b.vertices[vb]);
    if x.mark != y.mark || x.children.len() != y.children.len() {
        return false;
    }
    let mut used = vec![false; y.children.len()];
    match_children(a, &x.children, 0, b, &y.children, &mut used)
}

fn match_children(
    a: &LabeledTree,
    ca: &[usize],
    i: usize,
    b: &LabeledTree,
    cb: &[usize],
    used: &mut Vec<bool>,
) -> bool {
    if i == ca.len() {
        return true;
    }
    let u = &a.vertices[ca[i]];
    for j in 0..cb.len() {
        if used[j] {
            continue;
        }
        let w = &b.vertices[cb[j]];
        if u.y_up == w.y_up && u.y_down == w.y_down && iso_at(a, ca[i], b, cb[j]) {
            used[j] = true;
            if match_children(a, ca, i + 1, b, cb, used) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

/// Keeps the vertices of a labeled tree within distance `h` of the root, by BFS.
pub fn bfs_truncate(t: &LabeledTree, h: usize) -> LabeledTree {
    let mut out = LabeledTree::new_root(t.vertices[0].mark);
    let mut queue = std::collections::VecDeque::from([(0usize, 0usize, 0usize)]);
    while let Some((v, image, d)) = queue.pop_front() {
        if d == h {
            continue;
        }
        for &c in &t.vertices[v].children {
            let cv = &t.vertices[c];
            let ci = out.add_child(image, cv.mark, cv.y_up, cv.y_down);
            queue.push_back((c, ci, d + 1));
        }
    }
    out
}

/// Independent string form of a labeled subtree: AHU with sorted child strings.
/// `skip` excludes one neighbor; `depth` bounds the view.
pub fn ahu_string(t: &LabeledTree, v: usize, skip: Option<usize>, depth: usize) -> String {
    let mut parts: Vec<String> = Vec::new();
    if depth > 0 {
        let vx = &t.vertices[v];
        let mut nbrs: Vec<(usize, u32, u32)> = vx
            .children
            .iter()
            .map(|&c| (c, t.vertices[c].y_up, t.vertices[c].y_down))
            .collect();
        if let Some(p) = vx.parent {
            nbrs.push((p, vx.y_down, vx.y_up));
        }
        for (w, y_w_side, y_v_side) in nbrs {
            if Some(w) == skip {
                continue;
            }
            parts.push(format!(
                "{}:{}:{}",
                y_w_side,
                y_v_side,
                ahu_string(t, w, Some(v), depth - 1)
            ));
        }
    }
    parts.sort();
    format!("({}[{}])", t.vertices[v].mark, parts.join(","))
}

/// Exact two-sided normal band check.
pub fn within_sigma(observed: f64, p: f64, n: f64, k: f64) -> bool {
    let sd = (p * (1.0 - p) / n).sqrt();
    (observed - p).abs() <= k * sd + 1e-12
}

use sparse_ldp::tree::{CanonicalTree, Child};

/// `ξ̄(y,y′) = ½[ξ(y,y′) + ξ(y′,y)]`.
pub fn symmetrize(xi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = xi.len();
    (0..k).map(|a| (0..k).map(|b| 0.5 * (xi[a][b] + xi[b][a])).collect()).collect()
}

/// Depth-1 law of i.i.d.-marked trees with root degree law `alpha`, summed
/// over ordered child sequences, so no multiplicity factors are involved.
pub fn eta1_by_sequences(alpha: &[f64], nu: &[f64], xibar: &[Vec<f64>]) -> TreeMeasure {
    let mut out = TreeMeasure::new(1);
    let mut types = Vec::new();
    for (x, &px) in nu.iter().enumerate() {
        for (yc, row) in xibar.iter().enumerate() {
            for (yr, &py) in row.iter().enumerate() {
                if px * py > 0.0 {
                    types.push((x as u32, yc as u32, yr as u32, px * py));
                }
            }
        }
    }
    for (d, &pd) in alpha.iter().enumerate() {
        if pd == 0.0 {
            continue;
        }
        for (xo, &po) in nu.iter().enumerate() {
            if po == 0.0 {
                continue;
            }
            let mut idx = vec![0usize; d];
            loop {
                let mut p = pd * po;
                let mut ch = Vec::new();
                for &i in &idx {
                    let (x, yc, yr, q) = types[i];
                    p *= q;
                    ch.push(Child::new(yc, yr, CanonicalTree::leaf(x)));
                }
                out.add(CanonicalTree::new(xo as u32, ch), p);
                let mut k = 0;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < types.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
    }
    out
}

/// Truncation chain `ρ_1, ..., ρ_H` of the component measure of `g`.
pub fn chain_of(g: &MarkedGraph, depth: u32) -> Vec<TreeMeasure> {
    (1..=depth).map(|h| sparse_ldp::empirical::component_measure(g, h)).collect()
}

/// Law of the split at child 1 under size-biasing and uniform labeling,
/// computed on labeled trees with string encodings.
pub fn labeling_law(rho: &TreeMeasure, h: u32) -> HashMap<(String, String), f64> {
    let beta = rho.mean_degree();
    let mut out = HashMap::new();
    for (t, w) in rho.atoms() {
        let l = canonical_labeling(t);
        let d = t.degree() as f64;
        for &c in &l.vertices[0].children {
            let cv = &l.vertices[c];
            let branch = format!("{}|{}", ahu_string(&l, c, Some(0), h as usize - 1), cv.y_up);
            let rest = format!("{}|{}", ahu_string(&l, 0, Some(c), h as usize - 1), cv.y_down);
            // Size-bias weight d·w/β, then child 1 is each child with probability 1/d.
            *out.entry((branch, rest)).or_insert(0.0) += d * w / beta / d;
        }
    }
    out
}

pub fn half_edge_string(t: &HalfEdgeTree) -> String {
    let l = canonical_labeling(&t.tree);
    format!("{}|{}", ahu_string(&l, 0, None, 64), t.pendant)
}
