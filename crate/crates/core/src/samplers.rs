//! Random marked graphs from the three sparse ensembles and Galton-Watson trees.

use crate::error::{Error, Result};
use crate::graph::MarkedGraph;
use crate::measure::{DegreeLaw, TreeMeasure};
use crate::rate::extension::ExtensionKernel;
use crate::tree::{CanonicalTree, Child, HalfEdgeTree, LabeledTree, Mark};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Graph ensemble tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Uniform graph with a given degree distribution.
    Cm,
    /// Uniform graph with a given number of edges.
    Fe,
    /// Independent edges with probability `κ/n`.
    Er,
}

/// Parameters of a marked graph ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub ensemble: Ensemble,
    /// Mean degree.
    pub kappa: f64,
    /// Degree law (CM only).
    #[serde(default)]
    pub alpha: Option<DegreeLaw>,
    /// Edge count (FE only); defaults to `round(κn/2)`.
    #[serde(default)]
    pub m: Option<usize>,
    /// Vertex mark law.
    pub nu: Vec<f64>,
    /// Law of the edge mark pair, a `|Y|×|Y|` matrix.
    pub xi: Vec<Vec<f64>>,
    /// Pairing attempts before CM gives up.
    #[serde(default = "default_budget")]
    pub max_attempts: usize,
}

fn default_budget() -> usize {
    1_000_000
}

/// Samples a marked graph on `n` vertices from `cfg`.
pub fn sample_model<R: Rng + ?Sized>(n: usize, cfg: &ModelConfig, rng: &mut R) -> Result<MarkedGraph> {
    let g = match cfg.ensemble {
        Ensemble::Cm => {
            let alpha = cfg.alpha.as_ref().ok_or_else(|| Error::Invalid("CM needs alpha".into()))?;
            sample_cm(n, alpha, cfg.max_attempts, rng)?
        }
        Ensemble::Fe => {
            let m = cfg.m.unwrap_or_else(|| (cfg.kappa * n as f64 / 2.0).round() as usize);
            sample_fe(n, m, rng)?
        }
        Ensemble::Er => sample_er(n, cfg.kappa, rng)?,
    };
    assign_marks(&g, &cfg.nu, &cfg.xi, rng)
}

/// Integer degree counts `n·α_n(k)` close to `n·α(k)`: largest-remainder
/// rounding, then, if the degree sum is odd, one vertex of the most populous
/// class moves to a neighboring degree.
pub fn apportion(alpha: &DegreeLaw, n: usize) -> Result<Vec<usize>> {
    let p = alpha.probs();
    let mut counts: Vec<usize> = p.iter().map(|&q| (q * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = p[a] * n as f64 - counts[a] as f64;
        let rb = p[b] * n as f64 - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    let stubs: usize = counts.iter().enumerate().map(|(k, c)| k * c).sum();
    if stubs % 2 == 1 {
        let big = (0..counts.len()).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).expect("nonempty");
        counts[big] -= 1;
        if big > 0 {
            counts[big - 1] += 1;
        } else {
            if counts.len() < 2 {
                counts.push(0);
            }
            counts[1] += 1;
        }
    }
    Ok(counts)
}

/// Erdős–Gallai test for a graphical degree sequence.
pub fn erdos_gallai(degrees: &[usize]) -> bool {
    let mut d = degrees.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = d.iter().sum();
    if total % 2 == 1 {
        return false;
    }
    let n = d.len();
    let mut prefix = 0;
    for k in 1..=n {
        prefix += d[k - 1];
        let tail: usize = d[k..].iter().map(|&x| x.min(k)).sum();
        if prefix > k * (k - 1) + tail {
            return false;
        }
    }
    true
}

/// Uniform simple graph on `n` vertices with degree counts `n·α_n`.
///
/// Degrees are assigned to vertices by a uniform permutation; the graph is a
/// configuration-model pairing, redrawn whole until it is simple.
pub fn sample_cm<R: Rng + ?Sized>(
    n: usize,
    alpha: &DegreeLaw,
    max_attempts: usize,
    rng: &mut R,
) -> Result<MarkedGraph> {
    let counts = apportion(alpha, n)?;
    let mut degrees: Vec<usize> =
        counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    degrees.shuffle(rng);
    sample_cm_degrees(&degrees, max_attempts, rng)
}

/// Uniform simple graph with the given per-vertex degrees, by whole-pairing rejection.
pub fn sample_cm_degrees<R: Rng + ?Sized>(
    degrees: &[usize],
    max_attempts: usize,
    rng: &mut R,
) -> Result<MarkedGraph> {
    if !erdos_gallai(degrees) {
        return Err(Error::InfeasibleDegrees(format!("{degrees:?}")));
    }
    let n = degrees.len();
    let mut stubs: Vec<usize> =
        degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v, d)).collect();
    let mut seen = HashSet::with_capacity(stubs.len() / 2);
    'attempt: for _ in 0..max_attempts {
        stubs.shuffle(rng);
        seen.clear();
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return MarkedGraph::from_edges(n, &edges);
    }
    Err(Error::RejectionBudget(max_attempts))
}

/// Pair `(u, v)`, `u < v`, at position `k` of the order `(0,1), (0,2), (1,2), (0,3), ...`.
fn pair_from_index(k: u64) -> (usize, usize) {
    let mut v = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as u64;
    while v * (v - 1) / 2 > k {
        v -= 1;
    }
    while (v + 1) * v / 2 <= k {
        v += 1;
    }
    ((k - v * (v - 1) / 2) as usize, v as usize)
}

/// Uniform simple graph with exactly `m` edges, by a partial Fisher–Yates
/// shuffle of the pair index space.
pub fn sample_fe<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<MarkedGraph> {
    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    if m as u64 > total {
        return Err(Error::TooManyEdges { m, max: total as usize });
    }
    let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(2 * m);
    let mut edges = Vec::with_capacity(m);
    for i in 0..m as u64 {
        let j = rng.random_range(i..total);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, vi);
        edges.push(pair_from_index(vj));
    }
    MarkedGraph::from_edges(n, &edges)
}

/// Each pair present independently with probability `κ/n`, skipping absent
/// pairs with geometric jumps.
pub fn sample_er<R: Rng + ?Sized>(n: usize, kappa: f64, rng: &mut R) -> Result<MarkedGraph> {
    let p = if n == 0 { 0.0 } else { kappa / n as f64 };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::EdgeProbability(p));
    }
    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let mut edges = Vec::new();
    if p == 1.0 {
        edges.extend((0..total).map(pair_from_index));
    } else if p > 0.0 {
        let log_q = (1.0 - p).ln();
        let mut k: u64 = 0;
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let skip = (u.ln() / log_q).floor();
            if skip >= (total - k) as f64 {
                break;
            }
            k += skip as u64;
            edges.push(pair_from_index(k));
            k += 1;
            if k >= total {
                break;
            }
        }
    }
    MarkedGraph::from_edges(n, &edges)
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs).map_err(|e| Error::Invalid(format!("bad weights: {e}")))
}

/// Draws an oriented edge mark pair: `(Y, Y′) ~ ξ`, swapped by a fair coin.
struct EdgeMarkSampler {
    pairs: Vec<(Mark, Mark)>,
    index: WeightedIndex<f64>,
}

impl EdgeMarkSampler {
    fn new(xi: &[Vec<f64>]) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut w = Vec::new();
        for (a, row) in xi.iter().enumerate() {
            for (b, &p) in row.iter().enumerate() {
                pairs.push((a as Mark, b as Mark));
                w.push(p);
            }
        }
        Ok(EdgeMarkSampler { pairs, index: weighted(&w)? })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Mark, Mark) {
        let (a, b) = self.pairs[self.index.sample(rng)];
        if rng.random_bool(0.5) {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Vertex marks i.i.d. `ν`; per edge a pair from `ξ` with a uniformly random orientation.
pub fn assign_marks<R: Rng + ?Sized>(
    g: &MarkedGraph,
    nu: &[f64],
    xi: &[Vec<f64>],
    rng: &mut R,
) -> Result<MarkedGraph> {
    let vx = weighted(nu)?;
    let ey = EdgeMarkSampler::new(xi)?;
    let vmarks = (0..g.n()).map(|_| vx.sample(rng) as Mark).collect();
    let emarks: Vec<_> = g.edges().iter().map(|_| ey.sample(rng)).collect();
    g.with_marks(vmarks, &emarks)
}

/// Offspring law of a Galton-Watson tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffspringLaw {
    Fixed(DegreeLaw),
    Poisson(f64),
}

impl OffspringLaw {
    pub fn mean(&self) -> f64 {
        match self {
            OffspringLaw::Fixed(q) => q.mean(),
            OffspringLaw::Poisson(b) => *b,
        }
    }

    /// `Q̄(k) = (k+1)Q(k+1)/mean`; Poisson laws are fixed points.
    pub fn size_biased(&self) -> Result<OffspringLaw> {
        let mean = self.mean();
        if mean <= 0.0 {
            return Err(Error::ZeroMeanOffspring);
        }
        Ok(match self {
            OffspringLaw::Fixed(q) => {
                let probs: Vec<f64> = (1..q.probs().len())
                    .map(|k| k as f64 * q.prob(k) / mean)
                    .collect();
                OffspringLaw::Fixed(DegreeLaw::new(probs)?)
            }
            OffspringLaw::Poisson(b) => OffspringLaw::Poisson(*b),
        })
    }

    fn sampler(&self) -> Result<OffspringSampler> {
        Ok(match self {
            OffspringLaw::Fixed(q) => OffspringSampler::Fixed(weighted(q.probs())?),
            OffspringLaw::Poisson(b) if *b == 0.0 => OffspringSampler::Zero,
            OffspringLaw::Poisson(b) => OffspringSampler::Poisson(
                Poisson::new(*b).map_err(|e| Error::Invalid(format!("{e}")))?,
            ),
        })
    }
}

enum OffspringSampler {
    Fixed(WeightedIndex<f64>),
    Poisson(Poisson<f64>),
    Zero,
}

impl OffspringSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            OffspringSampler::Fixed(w) => w.sample(rng),
            OffspringSampler::Poisson(p) => p.sample(rng) as usize,
            OffspringSampler::Zero => 0,
        }
    }
}

/// Galton-Watson tree truncated at depth `depth`: the root has offspring law
/// `Q`, every other vertex `Q̄`; marks as in [`assign_marks`].
pub fn sample_size_biased_gw<R: Rng + ?Sized>(
    law: &OffspringLaw,
    nu: &[f64],
    xi: &[Vec<f64>],
    depth: u32,
    rng: &mut R,
) -> Result<LabeledTree> {
    let root = law.sampler()?;
    let rest = law.size_biased()?.sampler()?;
    grow(&root, &rest, nu, xi, depth, rng)
}

/// Plain Galton-Watson tree: every vertex, the root included, has offspring law `Q`.
pub fn sample_gw<R: Rng + ?Sized>(
    law: &OffspringLaw,
    nu: &[f64],
    xi: &[Vec<f64>],
    depth: u32,
    rng: &mut R,
) -> Result<LabeledTree> {
    let s = law.sampler()?;
    grow(&s, &s, nu, xi, depth, rng)
}

fn grow<R: Rng + ?Sized>(
    root: &OffspringSampler,
    rest: &OffspringSampler,
    nu: &[f64],
    xi: &[Vec<f64>],
    depth: u32,
    rng: &mut R,
) -> Result<LabeledTree> {
    let vx = weighted(nu)?;
    let ey = EdgeMarkSampler::new(xi)?;
    let mut t = LabeledTree::new_root(vx.sample(rng) as Mark);
    let mut frontier = vec![0usize];
    for d in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let k = if d == 0 { root.sample(rng) } else { rest.sample(rng) };
            for _ in 0..k {
                let (y_up, y_down) = ey.sample(rng);
                next.push(t.add_child(v, vx.sample(rng) as Mark, y_up, y_down));
            }
        }
        frontier = next;
    }
    Ok(t)
}

/// Depth-`depth` truncation of the unimodular extension of `rho_h`: draw a
/// depth-`h` tree, then regrow every vertex at depth `1..=depth−h`, in BFS
/// order, from the extension kernel conditioned on its current two-sided view.
pub fn sample_ugwt<R: Rng + ?Sized>(
    rho_h: &TreeMeasure,
    h: u32,
    depth: u32,
    rng: &mut R,
) -> Result<LabeledTree> {
    if h == 0 {
        return Err(Error::Invalid("extension needs h >= 1".into()));
    }
    let kernel = ExtensionKernel::new(rho_h, h)?;
    let atoms: Vec<(&CanonicalTree, f64)> = rho_h.atoms().iter().map(|(t, &w)| (t, w)).collect();
    let pick = weighted(&atoms.iter().map(|a| a.1).collect::<Vec<_>>())?;
    let start = atoms[pick.sample(rng)].0.truncate(depth);
    let mut tree = MutTree::from_canonical(&start);
    let mut level = tree.children(0);
    for _ in 1..=depth.saturating_sub(h) {
        let mut next = Vec::new();
        for v in level {
            let p = tree.parent[v].expect("non-root");
            let own = tree.view(v, Some(p), h - 1);
            let other = tree.view(p, Some(v), h - 1);
            let own = HalfEdgeTree::new(own, tree.y_up[v]);
            let other = HalfEdgeTree::new(other, tree.y_down[v]);
            let ext = kernel.sample(&own, &other, rng)?;
            tree.replace_subtree(v, &ext.tree);
            next.extend(tree.children(v));
        }
        level = next;
    }
    Ok(tree.to_labeled())
}

/// Mutable arena tree used while growing an extension.
struct MutTree {
    mark: Vec<Mark>,
    parent: Vec<Option<usize>>,
    kids: Vec<Vec<usize>>,
    y_up: Vec<Mark>,
    y_down: Vec<Mark>,
    alive: Vec<bool>,
}

impl MutTree {
    fn from_canonical(t: &CanonicalTree) -> Self {
        let mut m = MutTree {
            mark: vec![t.mark()],
            parent: vec![None],
            kids: vec![Vec::new()],
            y_up: vec![0],
            y_down: vec![0],
            alive: vec![true],
        };
        m.graft(0, t);
        m
    }

    fn graft(&mut self, v: usize, t: &CanonicalTree) {
        for c in t.children() {
            let id = self.mark.len();
            self.mark.push(c.tree.mark());
            self.parent.push(Some(v));
            self.kids.push(Vec::new());
            self.y_up.push(c.ym_child);
            self.y_down.push(c.ym_root);
            self.alive.push(true);
            self.kids[v].push(id);
            self.graft(id, &c.tree);
        }
    }

    fn children(&self, v: usize) -> Vec<usize> {
        self.kids[v].clone()
    }

    /// Unfolding from `v` of depth `depth`, not crossing to `skip`.
    fn view(&self, v: usize, skip: Option<usize>, depth: u32) -> CanonicalTree {
        let mut children = Vec::new();
        if depth > 0 {
            for &c in &self.kids[v] {
                if Some(c) != skip {
                    children.push(Child::new(self.y_up[c], self.y_down[c], self.view(c, Some(v), depth - 1)));
                }
            }
            if let Some(p) = self.parent[v] {
                if Some(p) != skip {
                    children.push(Child::new(self.y_down[v], self.y_up[v], self.view(p, Some(v), depth - 1)));
                }
            }
        }
        CanonicalTree::new(self.mark[v], children)
    }

    fn replace_subtree(&mut self, v: usize, t: &CanonicalTree) {
        let mut stack = std::mem::take(&mut self.kids[v]);
        while let Some(u) = stack.pop() {
            self.alive[u] = false;
            stack.append(&mut self.kids[u]);
        }
        self.graft(v, t);
    }

    fn to_labeled(&self) -> LabeledTree {
        let mut out = LabeledTree::new_root(self.mark[0]);
        let mut stack = vec![(0usize, 0usize)];
        while let Some((v, img)) = stack.pop() {
            for &c in &self.kids[v] {
                debug_assert!(self.alive[c]);
                let ci = out.add_child(img, self.mark[c], self.y_up[c], self.y_down[c]);
                stack.push((c, ci));
            }
        }
        out
    }
}
