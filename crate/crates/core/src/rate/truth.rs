use super::{for_each_multiset, multinomial};
use crate::error::Result;
use crate::measure::{DegreeLaw, TreeMeasure};
use crate::tree::{CanonicalTree, Child};

/// Exact depth-`h` marginal of the unimodular Galton-Watson tree with root
/// degree law `alpha`, vertex marks `ν` and edge mark pairs `ξ`.
pub fn eta_marginal(alpha: &DegreeLaw, nu: &[f64], xi: &[Vec<f64>], h: u32) -> Result<TreeMeasure> {
    let k = xi.len();
    let xibar: Vec<Vec<f64>> =
        (0..k).map(|a| (0..k).map(|b| 0.5 * (xi[a][b] + xi[b][a])).collect()).collect();
    let root: Vec<f64> = alpha.probs().to_vec();
    let mean = alpha.mean();
    let rest: Vec<f64> = if mean > 0.0 {
        (1..root.len()).map(|d| d as f64 * root[d] / mean).collect()
    } else {
        vec![1.0]
    };
    // Laws of non-root subtrees of depth 0, 1, ..., h−1.
    let mut sub: Vec<(CanonicalTree, f64)> = leaves(nu);
    for _ in 1..h {
        sub = grow(&rest, nu, &xibar, &sub);
    }
    let top = if h == 0 { leaves(nu) } else { grow(&root, nu, &xibar, &sub) };
    Ok(TreeMeasure::from_atoms(h, top))
}

fn leaves(nu: &[f64]) -> Vec<(CanonicalTree, f64)> {
    nu.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, &p)| (CanonicalTree::leaf(x as u32), p))
        .collect()
}

/// Trees with offspring law `offspring` at the root and i.i.d. child subtrees from `sub`.
fn grow(
    offspring: &[f64],
    nu: &[f64],
    xibar: &[Vec<f64>],
    sub: &[(CanonicalTree, f64)],
) -> Vec<(CanonicalTree, f64)> {
    let mut entries = Vec::new();
    for (yc, row) in xibar.iter().enumerate() {
        for (yr, &py) in row.iter().enumerate() {
            if py <= 0.0 {
                continue;
            }
            for (t, pt) in sub {
                entries.push((Child::new(yc as u32, yr as u32, t.clone()), py * pt));
            }
        }
    }
    // Multisets are enumerated in index order, so sorted entries give sorted children.
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let probs: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let mut out = Vec::new();
    for (d, &pd) in offspring.iter().enumerate() {
        if pd <= 0.0 {
            continue;
        }
        for_each_multiset(entries.len(), d, &mut |counts| {
            let p = pd * multinomial(counts, &probs);
            if p <= 0.0 {
                return;
            }
            let mut children = Vec::with_capacity(d);
            for (i, &c) in counts.iter().enumerate() {
                children.extend(std::iter::repeat_n(entries[i].0.clone(), c));
            }
            for (x, &px) in nu.iter().enumerate() {
                if px > 0.0 {
                    out.push((CanonicalTree::from_sorted(x as u32, children.clone()), p * px));
                }
            }
        });
    }
    out
}
