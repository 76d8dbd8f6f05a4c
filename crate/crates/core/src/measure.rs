//! Finitely supported measures on trees and on pairs of half-edge trees.

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::tree::{CanonicalTree, Child, HalfEdgeTree, Mark};
use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashMap};
use std::hash::{BuildHasher, Hash};

/// A finitely supported measure keyed by `K`, in deterministic insertion order.
pub type Discrete<K> = IndexMap<K, f64, FxBuildHasher>;

/// Shannon entropy `−Σ p log p` with `0 log 0 = 0`.
pub fn entropy<I: IntoIterator<Item = f64>>(weights: I) -> f64 {
    -weights
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// `Σ m log(m/base)` over the atoms of `m`, or `+∞` when `m` charges a point
/// where `base` vanishes.
pub fn relative_entropy<K: Hash + Eq, S: BuildHasher, T: BuildHasher>(
    m: &IndexMap<K, f64, S>,
    base: &IndexMap<K, f64, T>,
) -> ExtReal {
    relative_entropy_with(m.iter().map(|(k, &w)| (k, w)), |k| {
        base.get(k).copied().unwrap_or(0.0)
    })
}

/// [`relative_entropy`] against a base given pointwise.
pub fn relative_entropy_with<'a, K: 'a, I, F>(m: I, base: F) -> ExtReal
where
    I: IntoIterator<Item = (&'a K, f64)>,
    F: Fn(&K) -> f64,
{
    let mut sum = 0.0;
    for (k, w) in m {
        if w <= 0.0 {
            continue;
        }
        let b = base(k);
        if b <= 0.0 {
            return ExtReal::PosInf;
        }
        sum += w * (w / b).ln();
    }
    ExtReal::Finite(sum)
}

/// Law of a nonnegative integer bounded by `probs.len() − 1`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct DegreeLaw {
    probs: Vec<f64>,
}

impl DegreeLaw {
    /// Checks nonnegativity and normalization to 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Invalid("negative degree probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        let mut probs = probs;
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Ok(DegreeLaw { probs })
    }

    /// Point mass at `k`.
    pub fn point(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        DegreeLaw { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy(self.probs.iter().copied())
    }

    /// Largest pointwise difference to another law.
    pub fn max_abs_diff(&self, other: &DegreeLaw) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        (0..n).map(|k| (self.prob(k) - other.prob(k)).abs()).fold(0.0, f64::max)
    }
}

/// A finitely supported measure on canonical trees plus a mass for
/// neighborhoods that are not trees.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMeasure {
    atoms: Discrete<CanonicalTree>,
    non_tree_mass: f64,
    depth_bound: u32,
}

impl TreeMeasure {
    /// Empty builder for atoms of depth at most `depth_bound`.
    pub fn new(depth_bound: u32) -> Self {
        TreeMeasure { atoms: Discrete::default(), non_tree_mass: 0.0, depth_bound }
    }

    pub fn point_mass(t: CanonicalTree) -> Self {
        let mut m = Self::new(t.depth());
        m.add(t, 1.0);
        m
    }

    pub fn from_atoms<I: IntoIterator<Item = (CanonicalTree, f64)>>(depth_bound: u32, atoms: I) -> Self {
        let mut m = Self::new(depth_bound);
        for (t, w) in atoms {
            m.add(t, w);
        }
        m
    }

    /// Adds `w` to the atom at `t`, raising the depth bound if needed.
    pub fn add(&mut self, t: CanonicalTree, w: f64) {
        self.depth_bound = self.depth_bound.max(t.depth());
        *self.atoms.entry(t).or_insert(0.0) += w;
    }

    pub fn add_non_tree(&mut self, w: f64) {
        self.non_tree_mass += w;
    }

    pub fn atoms(&self) -> &Discrete<CanonicalTree> {
        &self.atoms
    }

    pub fn weight(&self, t: &CanonicalTree) -> f64 {
        self.atoms.get(t).copied().unwrap_or(0.0)
    }

    pub fn non_tree_mass(&self) -> f64 {
        self.non_tree_mass
    }

    pub fn depth_bound(&self) -> u32 {
        self.depth_bound
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Tree mass plus non-tree mass.
    pub fn total_mass(&self) -> f64 {
        self.atoms.values().sum::<f64>() + self.non_tree_mass
    }

    pub fn is_tree_supported(&self) -> bool {
        self.non_tree_mass == 0.0
    }

    /// Errors unless the total mass is 1 within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let t = self.total_mass();
        if (t - 1.0).abs() > tol {
            return Err(Error::NotNormalized(t));
        }
        Ok(())
    }

    /// Push-forward under depth-`h` truncation.
    pub fn truncate(&self, h: u32) -> TreeMeasure {
        let mut out = TreeMeasure::new(h.min(self.depth_bound));
        for (t, &w) in &self.atoms {
            out.add(t.truncate(h), w);
        }
        out.non_tree_mass = self.non_tree_mass;
        out
    }

    /// Atoms sorted by canonical encoding.
    pub fn sorted_atoms(&self) -> Vec<(&CanonicalTree, f64)> {
        let mut v: Vec<_> = self.atoms.iter().map(|(t, &w)| (t, w)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Law of the root degree over the tree atoms.
    pub fn degree_law(&self) -> DegreeLaw {
        let maxd = self.atoms.keys().map(|t| t.degree()).max().unwrap_or(0);
        let mut probs = vec![0.0; maxd + 1];
        for (t, &w) in &self.atoms {
            probs[t.degree()] += w;
        }
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        DegreeLaw { probs }
    }

    pub fn mean_degree(&self) -> f64 {
        self.atoms.iter().map(|(t, &w)| t.degree() as f64 * w).sum()
    }

    /// Law of the root mark.
    pub fn root_mark_law(&self) -> Discrete<Mark> {
        let mut out = Discrete::default();
        for (t, &w) in &self.atoms {
            *out.entry(t.mark()).or_insert(0.0) += w;
        }
        out
    }

    /// Entropy of the atom weights.
    pub fn entropy(&self) -> f64 {
        entropy(self.atoms.values().copied())
    }

    /// Largest difference of atom weights over the union of supports.
    pub fn max_abs_diff(&self, other: &TreeMeasure) -> f64 {
        let mut m = (self.non_tree_mass - other.non_tree_mass).abs();
        for (t, &w) in &self.atoms {
            m = m.max((w - other.weight(t)).abs());
        }
        for (t, &w) in &other.atoms {
            m = m.max((w - self.weight(t)).abs());
        }
        m
    }

    /// Total variation distance, counting non-tree mass as one extra atom.
    pub fn tv_distance(&self, other: &TreeMeasure) -> f64 {
        let mut s = (self.non_tree_mass - other.non_tree_mass).abs();
        for (t, &w) in &self.atoms {
            s += (w - other.weight(t)).abs();
        }
        for (t, &w) in &other.atoms {
            if !self.atoms.contains_key(t) {
                s += w;
            }
        }
        0.5 * s
    }
}

/// Size-biased law: weight proportional to root degree.
pub fn size_bias(rho: &TreeMeasure) -> Result<TreeMeasure> {
    let beta = rho.mean_degree();
    if beta <= 0.0 {
        return Err(Error::DegenerateSizeBias);
    }
    let mut out = TreeMeasure::new(rho.depth_bound());
    for (t, &w) in rho.atoms() {
        if t.degree() > 0 {
            out.add(t.clone(), t.degree() as f64 * w / beta);
        }
    }
    Ok(out)
}

/// Ordered pair of half-edge trees across a root edge.
pub type Pair = (HalfEdgeTree, HalfEdgeTree);

/// A finitely supported measure on ordered pairs of half-edge trees.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PairMeasure {
    atoms: Discrete<Pair>,
}

impl PairMeasure {
    pub fn from_atoms<I: IntoIterator<Item = (Pair, f64)>>(atoms: I) -> Self {
        let mut m = PairMeasure::default();
        for (k, w) in atoms {
            m.add(k, w);
        }
        m
    }

    pub fn add(&mut self, k: Pair, w: f64) {
        self.add_indexed(k, w);
    }

    /// Adds `w` at `k` and returns the index of `k` in [`PairMeasure::atoms`].
    fn add_indexed(&mut self, k: Pair, w: f64) -> usize {
        let e = self.atoms.entry(k);
        let i = e.index();
        *e.or_insert(0.0) += w;
        i
    }

    pub fn atoms(&self) -> &Discrete<Pair> {
        &self.atoms
    }

    pub fn weight(&self, a: &HalfEdgeTree, b: &HalfEdgeTree) -> f64 {
        // Lookups clone keys only because tuple keys cannot be borrowed piecewise.
        self.atoms.get(&(a.clone(), b.clone())).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn entropy(&self) -> f64 {
        entropy(self.atoms.values().copied())
    }

    /// `max |p(a,b) − p(b,a)|` over the support.
    pub fn asymmetry(&self) -> f64 {
        self.atoms
            .iter()
            .map(|((a, b), &w)| (w - self.weight(b, a)).abs())
            .fold(0.0, f64::max)
    }

    /// Symmetry within `tol`, together with the observed asymmetry.
    pub fn is_admissible(&self, tol: f64) -> (bool, f64) {
        let a = self.asymmetry();
        (a <= tol, a)
    }
}

/// Covariance measure at depth `h`: the law of
/// `(τ(v\o)_{h−1}, τ(o\v)_{h−1})` across a uniform root edge of the
/// size-biased measure.
pub fn pair_measure(rho: &TreeMeasure, h: u32) -> Result<PairMeasure> {
    pair_measure_with(rho, h, true)
}

/// Like [`pair_measure`], but when `truncate_remainder` is false the
/// remainder is kept at full depth.
pub fn pair_measure_with(rho: &TreeMeasure, h: u32, truncate_remainder: bool) -> Result<PairMeasure> {
    if truncate_remainder {
        return indexed_pair_measure(rho, h).map(|(pi, _)| pi);
    }
    let beta = rho.mean_degree();
    if beta <= 0.0 {
        return Err(Error::DegenerateSizeBias);
    }
    let hm = h.saturating_sub(1);
    let mut out = PairMeasure::default();
    for (t, &w) in rho.atoms() {
        for (i, m) in t.child_runs() {
            let (b, r) = t.split_at_child(i)?;
            out.add((b.truncate(hm), r), w * m as f64 / beta);
        }
    }
    Ok(out)
}

/// [`pair_measure`] together with, for each atom of `rho` in order, its runs
/// of identical root children as `(pair index, multiplicity)`.
pub(crate) fn indexed_pair_measure(rho: &TreeMeasure, h: u32) -> Result<(PairMeasure, Vec<Vec<(usize, usize)>>)> {
    let beta = rho.mean_degree();
    if beta <= 0.0 {
        return Err(Error::DegenerateSizeBias);
    }
    let hm = h.saturating_sub(1);
    let mut out = PairMeasure::default();
    let mut runs = Vec::with_capacity(rho.len());
    // The truncated remainder is the truncated tree minus one child; many
    // atoms share a truncation, so remainders are built once per (truncation, child).
    let mut remainders: FxHashMap<(CanonicalTree, usize), CanonicalTree> = FxHashMap::default();
    for (t, &w) in rho.atoms() {
        let tt = t.truncate(hm);
        let mut r = Vec::new();
        for (i, m) in t.child_runs() {
            let c = &t.children()[i];
            let key = if hm == 0 {
                t.split_truncated(i, 0)
            } else {
                let short = Child::new(c.ym_child, c.ym_root, c.tree.truncate(hm - 1));
                let j = tt.children().binary_search(&short).expect("truncated child present");
                let rest = remainders.entry((tt.clone(), j)).or_insert_with(|| tt.remove_child(j)).clone();
                (HalfEdgeTree::new(c.tree.truncate(hm), c.ym_child), HalfEdgeTree::new(rest, c.ym_root))
            };
            r.push((out.add_indexed(key, w * m as f64 / beta), m));
        }
        runs.push(r);
    }
    Ok((out, runs))
}

/// Marginals of a pair measure.
#[derive(Clone, Debug)]
pub struct PairMarginals {
    pub first: Discrete<HalfEdgeTree>,
    pub second: Discrete<HalfEdgeTree>,
}

impl PairMarginals {
    /// Conditional weight of `a` given second coordinate `b`; `None` off the
    /// support of the second marginal.
    pub fn conditional(&self, p: &PairMeasure, a: &HalfEdgeTree, b: &HalfEdgeTree) -> Option<f64> {
        let s = self.second.get(b).copied().unwrap_or(0.0);
        (s > 0.0).then(|| p.weight(a, b) / s)
    }
}

/// First and second marginals of `p`.
pub fn pair_marginals(p: &PairMeasure) -> PairMarginals {
    let mut first = Discrete::default();
    let mut second = Discrete::default();
    for ((a, b), &w) in p.atoms() {
        *first.entry(a.clone()).or_insert(0.0) += w;
        *second.entry(b.clone()).or_insert(0.0) += w;
    }
    PairMarginals { first, second }
}
