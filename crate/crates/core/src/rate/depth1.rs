use super::{for_each_multiset, multinomial, DegreeRef, ReferenceLaw, ADMISSIBILITY_TOL, GATE_TOL};
use super::reference::{ell, eta1_density};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::measure::{pair_marginals, pair_measure, relative_entropy, relative_entropy_with, Discrete, PairMeasure, TreeMeasure};
use crate::samplers::{Ensemble, ModelConfig};
use crate::tree::{CanonicalTree, Child, HalfEdgeTree, Mark};

/// Densities of the two depth-1 auxiliary measures of `μ` against a reference law.
pub struct Depth1Aux {
    law: ReferenceLaw,
    pi: PairMeasure,
    first: Discrete<HalfEdgeTree>,
    second: Discrete<HalfEdgeTree>,
}

/// A materialized auxiliary measure and the reference mass left out by the degree cap.
#[derive(Clone, Debug)]
pub struct AuxMeasure {
    pub measure: TreeMeasure,
    pub neglected_tail: f64,
}

fn half(x: Mark, y: Mark) -> HalfEdgeTree {
    HalfEdgeTree::new(CanonicalTree::leaf(x), y)
}

impl Depth1Aux {
    pub fn new(mu: &TreeMeasure, law: &ReferenceLaw) -> Result<Self> {
        if mu.atoms().keys().any(|t| t.depth() > 1) {
            return Err(Error::Invalid("depth-1 measure expected".into()));
        }
        let pi = pair_measure(mu, 1)?;
        let m = pair_marginals(&pi);
        Ok(Depth1Aux { law: law.clone(), pi, first: m.first, second: m.second })
    }

    /// Ratio of the first marginal of the pair measure to that of the reference.
    fn first_ratio(&self, a: &HalfEdgeTree) -> f64 {
        let r = self.law.half_density(a);
        if r > 0.0 {
            self.first.get(a).copied().unwrap_or(0.0) / r
        } else {
            0.0
        }
    }

    /// Ratio of the conditional law of `a` given `b` to that of the reference.
    fn cond_ratio(&self, a: &HalfEdgeTree, b: &HalfEdgeTree) -> f64 {
        let s = self.second.get(b).copied().unwrap_or(0.0);
        if s <= 0.0 {
            return 1.0;
        }
        let r = self.law.pair_density(a, b) / self.law.half_density(b);
        if r > 0.0 {
            self.pi.weight(a, b) / s / r
        } else {
            0.0
        }
    }

    /// Density of `μ̌` at `t`.
    pub fn check_at(&self, t: &CanonicalTree) -> f64 {
        let mut p = eta1_density(&self.law, t);
        for c in t.children() {
            if p == 0.0 {
                break;
            }
            p *= self.first_ratio(&half(c.tree.mark(), c.ym_child));
        }
        p
    }

    /// Density of `μ̂` at `t`.
    pub fn hat_at(&self, t: &CanonicalTree) -> f64 {
        let mut p = eta1_density(&self.law, t);
        for c in t.children() {
            if p == 0.0 {
                break;
            }
            p *= self.cond_ratio(&half(c.tree.mark(), c.ym_child), &half(t.mark(), c.ym_root));
        }
        p
    }

    /// Degrees to enumerate and the reference mass beyond them.
    fn degrees(&self) -> (Vec<usize>, f64) {
        match self.law.degree() {
            DegreeRef::FixedAlpha(a) => ((0..a.probs().len()).filter(|&d| a.prob(d) > 0.0).collect(), 0.0),
            DegreeRef::Poisson(_) => {
                let mut cum = 0.0;
                let mut d = 0;
                loop {
                    cum += self.law.degree_prob(d);
                    if 1.0 - cum < 1e-12 || d > 10_000 {
                        break;
                    }
                    d += 1;
                }
                ((0..=d).collect(), (1.0 - cum).max(0.0))
            }
        }
    }

    /// Child types `(x, y_child, y_root)` with positive reference weight.
    fn child_types(&self) -> Vec<(Mark, Mark, Mark, f64)> {
        let mut out = Vec::new();
        let ny = self.law.num_y() as Mark;
        for (x, &px) in self.law.nu().iter().enumerate() {
            for yc in 0..ny {
                for yr in 0..ny {
                    let p = px * self.law.xibar(yc, yr);
                    if p > 0.0 {
                        out.push((x as Mark, yc, yr, p));
                    }
                }
            }
        }
        out
    }

    /// Enumerates the support of `μ̌` (`hat = false`) or `μ̂` (`hat = true`).
    fn materialize(&self, hat: bool) -> AuxMeasure {
        let (degrees, tail) = self.degrees();
        let mut out = TreeMeasure::new(1);
        for (xo, &po) in self.law.nu().iter().enumerate() {
            if po <= 0.0 {
                continue;
            }
            let xo = xo as Mark;
            // Child types with their reference weight times the density ratio.
            let types: Vec<(Child, f64)> = self
                .child_types()
                .into_iter()
                .filter_map(|(x, yc, yr, p)| {
                    let a = half(x, yc);
                    let r = if hat { self.cond_ratio(&a, &half(xo, yr)) } else { self.first_ratio(&a) };
                    (p * r > 0.0).then(|| (Child::new(yc, yr, CanonicalTree::leaf(x)), p * r))
                })
                .collect();
            let probs: Vec<f64> = types.iter().map(|t| t.1).collect();
            for &d in &degrees {
                let pd = self.law.degree_prob(d) * po;
                for_each_multiset(types.len(), d, &mut |counts| {
                    let p = pd * multinomial(counts, &probs);
                    let mut children = Vec::with_capacity(d);
                    for (i, &c) in counts.iter().enumerate() {
                        children.extend(std::iter::repeat_n(types[i].0.clone(), c));
                    }
                    out.add(CanonicalTree::new(xo, children), p);
                });
            }
        }
        AuxMeasure { measure: out, neglected_tail: tail }
    }
}

/// `μ̌`, materialized over the degrees of the reference law.
pub fn mu_check(mu: &TreeMeasure, law: &ReferenceLaw) -> Result<AuxMeasure> {
    Ok(Depth1Aux::new(mu, law)?.materialize(false))
}

/// `μ̂`, materialized over the degrees of the reference law.
pub fn mu_hat(mu: &TreeMeasure, law: &ReferenceLaw) -> Result<AuxMeasure> {
    Ok(Depth1Aux::new(mu, law)?.materialize(true))
}

/// Shared gates of the depth-1 rates; `Some` carries the early value.
fn depth1_gates(beta: f64, law: &ReferenceLaw, mu: &TreeMeasure) -> Option<ExtReal> {
    if !mu.is_tree_supported() || mu.atoms().keys().any(|t| t.depth() > 1) {
        return Some(ExtReal::PosInf);
    }
    let mean = mu.mean_degree();
    if beta == 0.0 {
        if mean > 0.0 {
            return Some(ExtReal::PosInf);
        }
        return Some(root_mark_divergence(mu, law));
    }
    if (mean - beta).abs() > GATE_TOL {
        return Some(ExtReal::PosInf);
    }
    match pair_measure(mu, 1) {
        Ok(p) if p.asymmetry() <= ADMISSIBILITY_TOL => None,
        _ => Some(ExtReal::PosInf),
    }
}

/// `H(μ_o‖ν)`.
pub(crate) fn root_mark_divergence(mu: &TreeMeasure, law: &ReferenceLaw) -> ExtReal {
    let nu: Discrete<Mark> = law.nu().iter().enumerate().map(|(x, &p)| (x as Mark, p)).collect();
    relative_entropy(&mu.root_mark_law(), &nu)
}

/// Depth-1 rate `½[H(μ‖μ̌) + H(μ‖μ̂)]` with its gates; `+∞` encodes every failure.
pub fn frak_i(beta: f64, law: &ReferenceLaw, mu: &TreeMeasure) -> ExtReal {
    if let Some(v) = depth1_gates(beta, law, mu) {
        return v;
    }
    let Ok(aux) = Depth1Aux::new(mu, law) else {
        return ExtReal::PosInf;
    };
    let atoms = || mu.atoms().iter().map(|(t, &w)| (t, w));
    let a = relative_entropy_with(atoms(), |t| aux.check_at(t));
    let b = relative_entropy_with(atoms(), |t| aux.hat_at(t));
    (a + b).scale(0.5)
}

/// Rate of the neighborhood empirical measure of the ensemble in `cfg`.
pub fn rate_nbd(cfg: &ModelConfig, mu: &TreeMeasure) -> Result<ExtReal> {
    let base = |degree| ReferenceLaw::new(degree, cfg.nu.clone(), cfg.xi.clone());
    Ok(match cfg.ensemble {
        Ensemble::Cm => {
            let alpha = cfg.alpha.as_ref().ok_or_else(|| Error::Invalid("CM needs alpha".into()))?;
            if mu.degree_law().max_abs_diff(alpha) > GATE_TOL {
                return Ok(ExtReal::PosInf);
            }
            frak_i(alpha.mean(), &base(DegreeRef::FixedAlpha(alpha.clone()))?, mu)
        }
        Ensemble::Fe => frak_i(cfg.kappa, &base(DegreeRef::Poisson(cfg.kappa))?, mu),
        Ensemble::Er => {
            let b = mu.mean_degree();
            frak_i(b, &base(DegreeRef::Poisson(b))?, mu) + ell(cfg.kappa, b)
        }
    })
}

/// Depth-1 rate without edge marks: `H(μ‖μ̂) + (β/2)H(μ̄^{1,o}‖μ̄^1⊗μ̄^o)`.
pub fn vertex_only_rate(beta: f64, law: &ReferenceLaw, mu: &TreeMeasure) -> Result<ExtReal> {
    if law.num_y() != 1 {
        return Err(Error::Invalid("vertex-only rate needs a single edge mark".into()));
    }
    if let Some(v) = depth1_gates(beta, law, mu) {
        return Ok(v);
    }
    let aux = Depth1Aux::new(mu, law)?;
    let hat = relative_entropy_with(mu.atoms().iter().map(|(t, &w)| (t, w)), |t| aux.hat_at(t));
    let mutual = relative_entropy_with(aux.pi.atoms().iter().map(|(k, &w)| (k, w)), |(a, b)| {
        aux.first[a] * aux.second[b]
    });
    Ok(hat + mutual.scale(beta / 2.0))
}
