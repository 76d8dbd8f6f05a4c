//! Extension kernel and the one-step unimodular extension of a depth-`h` law.

use super::{depth1::mu_hat, for_each_multiset, multinomial, ReferenceLaw, ADMISSIBILITY_TOL};
use crate::error::{Error, Result};
use crate::measure::{pair_measure, pair_measure_with, Pair, PairMeasure, TreeMeasure};
use crate::tree::{CanonicalTree, Child, HalfEdgeTree};
use indexmap::{IndexMap, IndexSet};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rustc_hash::{FxBuildHasher, FxHashMap};

type FxIndexMap<K, V> = IndexMap<K, V, FxBuildHasher>;

struct KernelRow {
    entries: Vec<(HalfEdgeTree, f64)>,
    index: FxHashMap<HalfEdgeTree, usize>,
    sampler: WeightedIndex<f64>,
}

/// Conditional law of the depth-`h` view of a half-edge tree given its own
/// depth-`(h−1)` view and that of the tree across the edge.
pub struct ExtensionKernel {
    h: u32,
    rows: FxIndexMap<Pair, KernelRow>,
}

impl ExtensionKernel {
    /// Kernel of an admissible `rho_h` with positive mean degree.
    pub fn new(rho_h: &TreeMeasure, h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::Invalid("extension kernel needs h >= 1".into()));
        }
        let beta = rho_h.mean_degree();
        if beta <= 0.0 {
            return Err(Error::DegenerateSizeBias);
        }
        let pi = pair_measure(rho_h, h)?;
        let asym = pi.asymmetry();
        if asym > ADMISSIBILITY_TOL {
            return Err(Error::NotAdmissible(asym));
        }
        let mut raw: FxIndexMap<Pair, FxIndexMap<HalfEdgeTree, f64>> = FxIndexMap::default();
        for (t, &w) in rho_h.atoms() {
            if t.depth() > h {
                return Err(Error::Invalid(format!("atom deeper than {h}")));
            }
            for c in t.edge_classes() {
                let key = (c.remainder.truncate(h - 1), c.branch);
                *raw.entry(key).or_default().entry(c.remainder).or_insert(0.0) +=
                    w * c.multiplicity as f64 / beta;
            }
        }
        let mut rows = FxIndexMap::with_capacity_and_hasher(raw.len(), Default::default());
        for ((tau, taup), outs) in raw {
            let z = pi.weight(&tau, &taup);
            if z <= 0.0 {
                return Err(Error::KernelUndefined);
            }
            let entries: Vec<(HalfEdgeTree, f64)> = outs.into_iter().map(|(t, w)| (t, w / z)).collect();
            let index = entries.iter().enumerate().map(|(i, e)| (e.0.clone(), i)).collect();
            let sampler = WeightedIndex::new(entries.iter().map(|e| e.1))
                .map_err(|e| Error::Invalid(format!("kernel row: {e}")))?;
            rows.insert((tau, taup), KernelRow { entries, index, sampler });
        }
        Ok(ExtensionKernel { h, rows })
    }

    pub fn depth(&self) -> u32 {
        self.h
    }

    /// Outcomes and probabilities at `(tau, tau_prime)`, if that pair has positive mass.
    pub fn row(&self, tau: &HalfEdgeTree, tau_prime: &HalfEdgeTree) -> Option<&[(HalfEdgeTree, f64)]> {
        self.rows.get(&(tau.clone(), tau_prime.clone())).map(|r| r.entries.as_slice())
    }

    /// All rows in deterministic order.
    pub fn rows(&self) -> impl Iterator<Item = (&Pair, &[(HalfEdgeTree, f64)])> {
        self.rows.iter().map(|(k, r)| (k, r.entries.as_slice()))
    }

    /// Probability of the extension `t` at `(tau, tau_prime)`.
    pub fn prob(&self, tau: &HalfEdgeTree, tau_prime: &HalfEdgeTree, t: &HalfEdgeTree) -> Result<f64> {
        let r = self.rows.get(&(tau.clone(), tau_prime.clone())).ok_or(Error::KernelUndefined)?;
        Ok(r.index.get(t).map_or(0.0, |&i| r.entries[i].1))
    }

    /// Largest deviation of a row total from 1.
    pub fn max_normalization_error(&self) -> f64 {
        self.rows
            .values()
            .map(|r| (r.entries.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        tau: &HalfEdgeTree,
        tau_prime: &HalfEdgeTree,
        rng: &mut R,
    ) -> Result<HalfEdgeTree> {
        let r = self.rows.get(&(tau.clone(), tau_prime.clone())).ok_or(Error::KernelUndefined)?;
        Ok(r.entries[r.sampler.sample(rng)].0.clone())
    }
}

/// Pointwise access to the one-step extension of a depth-`h_prev` law and to
/// its pair measure at depth `h_prev + 1`.
pub struct OneStep {
    prev: TreeMeasure,
    h_prev: u32,
    kernel: ExtensionKernel,
    /// Pair measure of `prev` with the remainder kept at full depth.
    q: PairMeasure,
}

impl OneStep {
    pub fn new(prev: &TreeMeasure, h_prev: u32) -> Result<Self> {
        let kernel = ExtensionKernel::new(prev, h_prev)?;
        let q = pair_measure_with(prev, h_prev, false)?;
        Ok(OneStep { prev: prev.clone(), h_prev, kernel, q })
    }

    pub fn kernel(&self) -> &ExtensionKernel {
        &self.kernel
    }

    fn kernel_prob(&self, tau: &HalfEdgeTree, tau_prime: &HalfEdgeTree, t: &HalfEdgeTree) -> f64 {
        self.kernel.prob(tau, tau_prime, t).unwrap_or(0.0)
    }

    /// Weight of the extension at `t`.
    pub fn rho_star_at(&self, t: &CanonicalTree) -> f64 {
        let hp = self.h_prev;
        if t.depth() > hp + 1 {
            return 0.0;
        }
        let mut p = self.prev.weight(&t.truncate(hp));
        if p == 0.0 {
            return 0.0;
        }
        // Children sharing a conditioning pair are exchangeable draws from one row.
        let mut groups: FxIndexMap<Pair, Vec<(HalfEdgeTree, usize)>> = FxIndexMap::default();
        for (i, m) in t.child_runs() {
            let c = &t.children()[i];
            let key = t.split_truncated(i, hp - 1);
            groups.entry(key).or_default().push((HalfEdgeTree::new(c.tree.clone(), c.ym_child), m));
        }
        for ((tau, taup), outs) in groups {
            let counts: Vec<usize> = outs.iter().map(|o| o.1).collect();
            let probs: Vec<f64> = outs.iter().map(|o| self.kernel_prob(&tau, &taup, &o.0)).collect();
            p *= multinomial(&counts, &probs);
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }

    /// Pair-measure weight of the extension at `(tau, tau_prime)`.
    pub fn pi_star_at(&self, tau: &HalfEdgeTree, tau_prime: &HalfEdgeTree) -> f64 {
        let hp = self.h_prev;
        let a = tau.truncate(hp - 1);
        let q = self.q.weight(&a, tau_prime);
        if q == 0.0 {
            return 0.0;
        }
        q * self.kernel_prob(&a, &tau_prime.truncate(hp - 1), tau)
    }

    /// Materializes the extension.
    pub fn materialize(&self) -> TreeMeasure {
        let hp = self.h_prev;
        let mut out = TreeMeasure::new(hp + 1);
        for (s, &w) in self.prev.atoms() {
            // Per class: every multiset of extensions with its probability.
            let mut options: Vec<Vec<(Vec<Child>, f64)>> = Vec::new();
            for c in s.edge_classes() {
                let key = (c.branch.clone(), HalfEdgeTree::new(s.remainder_truncated(c.first, hp - 1), c.remainder.pendant));
                let row = self.kernel.row(&key.0, &key.1).unwrap_or(&[]);
                let probs: Vec<f64> = row.iter().map(|e| e.1).collect();
                let mut opts = Vec::new();
                for_each_multiset(row.len(), c.multiplicity, &mut |counts| {
                    let p = multinomial(counts, &probs);
                    let mut ch = Vec::with_capacity(c.multiplicity);
                    for (i, &k) in counts.iter().enumerate() {
                        let e = &row[i].0;
                        ch.extend(std::iter::repeat_n(Child::new(e.pendant, c.remainder.pendant, e.tree.clone()), k));
                    }
                    opts.push((ch, p));
                });
                options.push(opts);
            }
            let mut acc: Vec<(Vec<Child>, f64)> = vec![(Vec::new(), w)];
            for opts in &options {
                let mut next = Vec::with_capacity(acc.len() * opts.len());
                for (ch, p) in &acc {
                    for (more, q) in opts {
                        let mut c = ch.clone();
                        c.extend(more.iter().cloned());
                        next.push((c, p * q));
                    }
                }
                acc = next;
            }
            for (ch, p) in acc {
                out.add(CanonicalTree::new(s.mark(), ch), p);
            }
        }
        out
    }
}

/// One-step extension of `rho_prev` from depth `h_prev` to depth `h_prev + 1`.
pub fn one_step_extension(rho_prev: &TreeMeasure, h_prev: u32) -> Result<TreeMeasure> {
    Ok(OneStep::new(rho_prev, h_prev)?.materialize())
}

/// `ρ̌_h`, the extension of `(ρ_h)_{h−1}`, for `h ≥ 2`.
pub fn rho_check(rho_h: &TreeMeasure, h: u32) -> Result<TreeMeasure> {
    if h < 2 {
        return Err(Error::Invalid("depth-1 auxiliary measures need a reference law".into()));
    }
    one_step_extension(&rho_h.truncate(h - 1), h - 1)
}

/// `ρ*_h` at each atom of `rho_h` and `π*_h` at each pair index, computed
/// once per distinct pair rather than once per edge.
pub(crate) struct IndexedExtension {
    pub star: Vec<f64>,
    pub pi_star: Vec<f64>,
}

/// Evaluates `step` (built from `ρ_{h−1}`) over the atoms of `rho_h`, using
/// the runs returned with its pair measure `pi_h`.
pub(crate) fn indexed_extension(
    step: &OneStep,
    rho_h: &TreeMeasure,
    pi_h: &PairMeasure,
    runs: &[Vec<(usize, usize)>],
) -> IndexedExtension {
    let hp = step.h_prev;
    let mut groups: IndexSet<Pair, FxBuildHasher> = IndexSet::default();
    let mut group = Vec::with_capacity(pi_h.atoms().len());
    let mut prob = Vec::with_capacity(pi_h.atoms().len());
    let mut pi_star = Vec::with_capacity(pi_h.atoms().len());
    for (a, b) in pi_h.atoms().keys() {
        let key = (a.truncate(hp - 1), b.truncate(hp - 1));
        prob.push(step.kernel_prob(&key.0, &key.1, a));
        pi_star.push(step.pi_star_at(a, b));
        group.push(groups.insert_full(key).0);
    }
    let mut star = Vec::with_capacity(rho_h.len());
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (t, r) in rho_h.atoms().keys().zip(runs) {
        let mut p = step.prev.weight(&t.truncate(hp));
        if p > 0.0 {
            cells.clear();
            cells.extend(r.iter().map(|&(j, m)| (group[j], m, prob[j])));
            cells.sort_by_key(|c| c.0);
            for g in cells.chunk_by(|x, y| x.0 == y.0) {
                let counts: Vec<usize> = g.iter().map(|c| c.1).collect();
                let probs: Vec<f64> = g.iter().map(|c| c.2).collect();
                p *= multinomial(&counts, &probs);
            }
        }
        star.push(p);
    }
    IndexedExtension { star, pi_star }
}

/// `dρ̂_h/dρ*_h` at an atom given its runs.
pub(crate) fn indexed_hat_density(pi_h: &PairMeasure, pi_star: &[f64], runs: &[(usize, usize)]) -> f64 {
    let mut d = 1.0;
    for &(j, m) in runs {
        let num = pi_h.atoms()[j];
        let den = pi_star[j];
        if den <= 0.0 {
            return if num > 0.0 { f64::INFINITY } else { 0.0 };
        }
        d *= (num / den).powi(m as i32);
    }
    d
}

/// Density of `ρ̂_h` against the extension, evaluated at `t`.
pub(crate) fn hat_density(step: &OneStep, pi_h: &PairMeasure, t: &CanonicalTree, h: u32) -> f64 {
    let mut d = 1.0;
    for (i, m) in t.child_runs() {
        let (branch, r) = t.split_truncated(i, h - 1);
        let num = pi_h.weight(&branch, &r);
        let den = step.pi_star_at(&branch, &r);
        if den <= 0.0 {
            return if num > 0.0 { f64::INFINITY } else { 0.0 };
        }
        d *= (num / den).powi(m as i32);
    }
    d
}

/// `ρ̂_h` for `h ≥ 2`, materialized over the support of the extension.
pub fn rho_hat(rho_h: &TreeMeasure, h: u32) -> Result<TreeMeasure> {
    if h < 2 {
        return Err(Error::Invalid("depth-1 auxiliary measures need a reference law".into()));
    }
    let step = OneStep::new(&rho_h.truncate(h - 1), h - 1)?;
    let pi_h = pair_measure(rho_h, h)?;
    for ((a, b), &w) in pi_h.atoms() {
        if w > 0.0 && step.pi_star_at(a, b) <= 0.0 {
            return Err(Error::Invalid("pair measure not absolutely continuous".into()));
        }
    }
    let star = step.materialize();
    let mut out = TreeMeasure::new(h);
    for (t, &w) in star.atoms() {
        let d = hat_density(&step, &pi_h, t, h);
        if d > 0.0 {
            out.add(t.clone(), w * d);
        }
    }
    Ok(out)
}

/// [`rho_hat`], falling back to `μ̂` against `law` at depth 1.
pub fn rho_hat_with_reference(rho_h: &TreeMeasure, h: u32, law: &ReferenceLaw) -> Result<TreeMeasure> {
    if h == 1 {
        Ok(mu_hat(rho_h, law)?.measure)
    } else {
        rho_hat(rho_h, h)
    }
}
