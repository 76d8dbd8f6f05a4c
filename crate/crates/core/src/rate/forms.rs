use super::depth1::{root_mark_divergence, Depth1Aux};
use super::extension::{indexed_extension, indexed_hat_density, IndexedExtension, OneStep};
use super::reference::{ell, eta1_density};
use super::{log_factorial, DegreeRef, ReferenceLaw, ADMISSIBILITY_TOL, CHAIN_TOL, GATE_TOL};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::measure::{entropy, indexed_pair_measure, pair_measure, relative_entropy_with, Discrete, PairMeasure, TreeMeasure};
use crate::samplers::{Ensemble, ModelConfig};
use crate::tree::Mark;
use serde::{Deserialize, Serialize};

/// Representation a report was computed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Component,
    Intermediate,
    Combinatorial,
}

/// The two entropy terms at depth `h` and the summand they form.
///
/// Component form: `first = H(ρ_h‖ρ̌_h)`, `second = H(ρ_h‖ρ̂_h)`, `value` their mean.
/// Intermediate form: `first = H(ρ_h‖ρ*_h)`, `second = (β/2)H(π_h‖π*_h)`,
/// `value = first − second`; at `h = 1` the bases are the reference law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthTerm {
    pub h: u32,
    pub first: ExtReal,
    pub second: ExtReal,
    pub value: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinatorialTerms {
    /// `J_1, ..., J_H`.
    pub j: Vec<f64>,
    /// `E_{ρ_h}[Σ log E_h!]` per depth.
    pub e_log_factorial: Vec<f64>,
    /// Everything in the assembled rate except `−J_H`.
    pub constant: ExtReal,
    /// Observed monotonicity of `h ↦ J_h`.
    pub j_direction: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFlags {
    pub tree_supported: bool,
    pub admissible: bool,
    pub max_asymmetry: f64,
    pub mean_degree: f64,
    /// CM only: whether the root degree law equals `α`.
    pub degree_law_match: Option<bool>,
    /// FE only: whether the mean degree equals `κ`.
    pub mean_degree_match: Option<bool>,
}

/// A rate evaluated on a truncation chain `ρ_1, ..., ρ_H`. The total is the
/// `H`-truncated sum, a lower bound on the full rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub form: Form,
    pub ensemble: Ensemble,
    pub depth: u32,
    pub beta: f64,
    /// `ℓ_κ(β)` for ER, zero otherwise.
    pub offset: f64,
    pub terms: Vec<DepthTerm>,
    /// `offset` plus the first `h` summands, for `h = 1..=H`.
    pub partial_totals: Vec<ExtReal>,
    pub total: ExtReal,
    pub combinatorial: Option<CombinatorialTerms>,
    pub flags: RateFlags,
}

/// Chain after validation, with the ensemble's reference law.
struct Prepared<'a> {
    chain: &'a [TreeMeasure],
    law: ReferenceLaw,
    beta: f64,
    offset: f64,
    flags: RateFlags,
    /// Pair measures `π_1, ..., π_H` with each atom's runs of identical
    /// children, when the chain is tree-supported with positive mean degree.
    pairs: Vec<(PairMeasure, Vec<Vec<(usize, usize)>>)>,
    /// Gates passed.
    finite: bool,
}

fn prepare<'a>(chain: &'a [TreeMeasure], cfg: &ModelConfig) -> Result<Prepared<'a>> {
    if chain.is_empty() {
        return Err(Error::Invalid("empty truncation chain".into()));
    }
    for (i, rho) in chain.iter().enumerate() {
        let h = i as u32 + 1;
        if rho.atoms().keys().any(|t| t.depth() > h) {
            return Err(Error::Invalid(format!("atom deeper than {h} at chain position {h}")));
        }
        if i > 0 {
            let dev = rho.truncate(h - 1).max_abs_diff(&chain[i - 1]);
            if dev > CHAIN_TOL {
                return Err(Error::InconsistentChain { depth: h, deviation: dev });
            }
        }
    }
    let rho1 = &chain[0];
    let mean = rho1.mean_degree();
    let tree_supported = chain.iter().all(|r| r.non_tree_mass() <= 0.0);
    let (degree, beta, offset, degree_law_match, mean_degree_match) = match cfg.ensemble {
        Ensemble::Cm => {
            let alpha = cfg.alpha.clone().ok_or_else(|| Error::Invalid("CM needs alpha".into()))?;
            let ok = rho1.degree_law().max_abs_diff(&alpha) <= GATE_TOL;
            let b = alpha.mean();
            (DegreeRef::FixedAlpha(alpha), b, 0.0, Some(ok), None)
        }
        Ensemble::Fe => {
            let ok = (mean - cfg.kappa).abs() <= GATE_TOL;
            (DegreeRef::Poisson(cfg.kappa), cfg.kappa, 0.0, None, Some(ok))
        }
        Ensemble::Er => (DegreeRef::Poisson(mean), mean, ell(cfg.kappa, mean), None, None),
    };
    let law = ReferenceLaw::new(degree, cfg.nu.clone(), cfg.xi.clone())?;
    let mut max_asymmetry: f64 = 0.0;
    let mut pairs = Vec::new();
    if tree_supported && mean > 0.0 {
        for (i, rho) in chain.iter().enumerate() {
            let level = indexed_pair_measure(rho, i as u32 + 1)?;
            max_asymmetry = max_asymmetry.max(level.0.asymmetry());
            pairs.push(level);
        }
    }
    let admissible = max_asymmetry <= ADMISSIBILITY_TOL;
    let finite = tree_supported
        && admissible
        && degree_law_match != Some(false)
        && mean_degree_match != Some(false)
        && (mean - beta).abs() <= GATE_TOL;
    Ok(Prepared {
        chain,
        law,
        beta,
        offset,
        pairs,
        flags: RateFlags {
            tree_supported,
            admissible,
            max_asymmetry,
            mean_degree: mean,
            degree_law_match,
            mean_degree_match,
        },
        finite,
    })
}

fn report(p: &Prepared, cfg: &ModelConfig, form: Form, terms: Vec<DepthTerm>) -> RateReport {
    let mut acc = ExtReal::Finite(p.offset);
    let mut partial_totals = Vec::with_capacity(terms.len());
    for t in &terms {
        acc = acc + t.value;
        partial_totals.push(acc);
    }
    let total = if p.finite { acc } else { ExtReal::PosInf };
    RateReport {
        form,
        ensemble: cfg.ensemble,
        depth: p.chain.len() as u32,
        beta: p.beta,
        offset: p.offset,
        terms,
        partial_totals,
        total,
        combinatorial: None,
        flags: p.flags.clone(),
    }
}

/// Terms of a chain of isolated roots: only the root mark law is charged.
fn isolated_terms(p: &Prepared) -> Vec<DepthTerm> {
    (1..=p.chain.len() as u32)
        .map(|h| {
            let v = if h == 1 { root_mark_divergence(&p.chain[0], &p.law) } else { ExtReal::ZERO };
            DepthTerm { h, first: v, second: v, value: v }
        })
        .collect()
}

fn atoms(rho: &TreeMeasure) -> impl Iterator<Item = (&crate::tree::CanonicalTree, f64)> {
    rho.atoms().iter().map(|(t, &w)| (t, w))
}

/// Extension weights for depths `2..=H`, shared by the component and intermediate forms.
fn extensions(p: &Prepared) -> Result<Vec<IndexedExtension>> {
    (2..=p.chain.len())
        .map(|h| {
            let step = OneStep::new(&p.chain[h - 2], h as u32 - 1)?;
            let (pi_h, runs) = &p.pairs[h - 1];
            Ok(indexed_extension(&step, &p.chain[h - 1], pi_h, runs))
        })
        .collect()
}

/// Whether the forms have per-depth terms beyond the gates and the isolated-root case.
fn has_terms(p: &Prepared) -> bool {
    p.finite && p.beta > 0.0
}

/// `Σ w log(w/b_i)` over the atoms of `rho` against per-atom base weights.
fn indexed_entropy(rho: &TreeMeasure, base: &[f64]) -> ExtReal {
    relative_entropy_with(rho.atoms().values().enumerate().map(|(i, &w)| (&base[i], w)), |&b| b)
}

fn component_with(p: &Prepared, cfg: &ModelConfig, exts: &[IndexedExtension]) -> Result<RateReport> {
    if !p.finite {
        return Ok(report(p, cfg, Form::Component, Vec::new()));
    }
    if p.beta == 0.0 {
        return Ok(report(p, cfg, Form::Component, isolated_terms(p)));
    }
    let chain = p.chain;
    let mut terms = Vec::new();
    let aux = Depth1Aux::new(&chain[0], &p.law)?;
    let a = relative_entropy_with(atoms(&chain[0]), |t| aux.check_at(t));
    let b = relative_entropy_with(atoms(&chain[0]), |t| aux.hat_at(t));
    terms.push(DepthTerm { h: 1, first: a, second: b, value: (a + b).scale(0.5) });
    for (ext, h) in exts.iter().zip(2u32..) {
        let rho = &chain[h as usize - 1];
        let (pi_h, runs) = &p.pairs[h as usize - 1];
        let a = indexed_entropy(rho, &ext.star);
        let hat: Vec<f64> = runs
            .iter()
            .zip(&ext.star)
            .map(|(r, &s)| if s > 0.0 { s * indexed_hat_density(pi_h, &ext.pi_star, r) } else { 0.0 })
            .collect();
        let b = indexed_entropy(rho, &hat);
        terms.push(DepthTerm { h, first: a, second: b, value: (a + b).scale(0.5) });
    }
    Ok(report(p, cfg, Form::Component, terms))
}

fn intermediate_with(p: &Prepared, cfg: &ModelConfig, exts: &[IndexedExtension]) -> RateReport {
    if !p.finite {
        return report(p, cfg, Form::Intermediate, Vec::new());
    }
    if p.beta == 0.0 {
        return report(p, cfg, Form::Intermediate, isolated_terms(p));
    }
    let chain = p.chain;
    let half = p.beta / 2.0;
    let mut terms = Vec::new();
    let law = &p.law;
    let a = relative_entropy_with(atoms(&chain[0]), |t| eta1_density(law, t));
    let pi1 = &p.pairs[0].0;
    let b = relative_entropy_with(pi1.atoms().iter().map(|(k, &w)| (k, w)), |(x, y)| law.pair_density(x, y))
        .scale(half);
    terms.push(DepthTerm { h: 1, first: a, second: b, value: a.minus(b) });
    for (ext, h) in exts.iter().zip(2u32..) {
        let rho = &chain[h as usize - 1];
        let pi_h = &p.pairs[h as usize - 1].0;
        let a = indexed_entropy(rho, &ext.star);
        let b = relative_entropy_with(pi_h.atoms().values().enumerate().map(|(i, &w)| (&ext.pi_star[i], w)), |&s| s)
            .scale(half);
        terms.push(DepthTerm { h, first: a, second: b, value: a.minus(b) });
    }
    report(p, cfg, Form::Intermediate, terms)
}

/// Component form: `Σ_h ½[H(ρ_h‖ρ̌_h) + H(ρ_h‖ρ̂_h)]`.
pub fn component_rate(chain: &[TreeMeasure], cfg: &ModelConfig) -> Result<RateReport> {
    let p = prepare(chain, cfg)?;
    let exts = if has_terms(&p) { extensions(&p)? } else { Vec::new() };
    component_with(&p, cfg, &exts)
}

/// Intermediate form: `H(ρ_1‖η_1) − (β/2)H(π_1‖η̄) + Σ_{h≥2}[H(ρ_h‖ρ*_h) − (β/2)H(π_h‖π*_h)]`.
pub fn intermediate_rate(chain: &[TreeMeasure], cfg: &ModelConfig) -> Result<RateReport> {
    let p = prepare(chain, cfg)?;
    let exts = if has_terms(&p) { extensions(&p)? } else { Vec::new() };
    Ok(intermediate_with(&p, cfg, &exts))
}

/// Component, intermediate and combinatorial reports, sharing validation and extensions.
pub fn rate_forms(chain: &[TreeMeasure], cfg: &ModelConfig) -> Result<[RateReport; 3]> {
    let p = prepare(chain, cfg)?;
    let exts = if has_terms(&p) { extensions(&p)? } else { Vec::new() };
    Ok([component_with(&p, cfg, &exts)?, intermediate_with(&p, cfg, &exts), combinatorial_with(&p, cfg)?])
}

/// `s(β) = β/2 − (β/2) log β`, with `s(0) = 0`.
pub fn s_scalar(beta: f64) -> f64 {
    if beta > 0.0 {
        0.5 * beta - 0.5 * beta * beta.ln()
    } else {
        0.0
    }
}

/// `Σ_{y,y′} s(β⃗(y,y′))`, summing the scalar form entrywise.
pub fn s_vec(v: &Discrete<(Mark, Mark)>) -> f64 {
    v.values().map(|&b| s_scalar(b)).sum()
}

/// Edge mark profile `β⃗(y, y′) = β·π_1(pendants = (y, y′))`.
pub fn kappa_vec(rho1: &TreeMeasure) -> Result<Discrete<(Mark, Mark)>> {
    let beta = rho1.mean_degree();
    let pi = pair_measure(rho1, 1)?;
    let mut out = Discrete::default();
    for ((a, b), &w) in pi.atoms() {
        *out.entry((a.pendant, b.pendant)).or_insert(0.0) += beta * w;
    }
    Ok(out)
}

/// `J_h = −s(β) + H(ρ_h) − (β/2)H(π_h) − E[Σ log E_h!]`, with the last expectation.
fn j_value(rho: &TreeMeasure, pi: &PairMeasure, beta: f64) -> (f64, f64) {
    let elf: f64 = rho
        .atoms()
        .iter()
        .map(|(t, &w)| w * t.child_runs().iter().map(|&(_, m)| log_factorial(m)).sum::<f64>())
        .sum();
    (-s_scalar(beta) + rho.entropy() - 0.5 * beta * pi.entropy() - elf, elf)
}

/// `H(β⃗/β‖ξ̄)` and `s⃗(β⃗)` at the depth-1 law.
fn edge_mark_terms(rho1: &TreeMeasure, law: &ReferenceLaw) -> Result<(ExtReal, f64)> {
    let beta = rho1.mean_degree();
    let kv = kappa_vec(rho1)?;
    let h = relative_entropy_with(kv.iter().map(|(k, &w)| (k, w / beta)), |&(y, yp)| law.xibar(y, yp));
    Ok((h, s_vec(&kv)))
}

fn direction(j: &[f64]) -> String {
    let d: Vec<f64> = j.windows(2).map(|w| w[1] - w[0]).collect();
    let tol = 1e-12;
    if d.iter().all(|x| x.abs() <= tol) {
        "constant"
    } else if d.iter().all(|&x| x <= tol) {
        "non-increasing"
    } else if d.iter().all(|&x| x >= -tol) {
        "non-decreasing"
    } else {
        "mixed"
    }
    .to_string()
}

/// Combinatorial form: the entropy-form rate with the microstate entropy
/// replaced by `J_h`; partial totals use `J_1, ..., J_H`.
pub fn combinatorial_rate(chain: &[TreeMeasure], cfg: &ModelConfig) -> Result<RateReport> {
    combinatorial_with(&prepare(chain, cfg)?, cfg)
}

fn combinatorial_with(p: &Prepared, cfg: &ModelConfig) -> Result<RateReport> {
    let chain = p.chain;
    let mut j = Vec::new();
    let mut elf = Vec::new();
    if p.flags.tree_supported {
        for (i, rho) in chain.iter().enumerate() {
            let (jh, e) = if p.beta > 0.0 && p.flags.mean_degree > 0.0 {
                j_value(rho, &p.pairs[i].0, p.beta)
            } else {
                (rho.entropy(), 0.0)
            };
            j.push(jh);
            elf.push(e);
        }
    }
    let rho1 = &chain[0];
    let ro = rho1.root_mark_law();
    let h_ro = entropy(ro.values().copied());
    let div = root_mark_divergence(rho1, &p.law);
    let constant = if !p.finite {
        ExtReal::PosInf
    } else if p.beta == 0.0 {
        div + h_ro + p.offset
    } else {
        let (hx, sv) = edge_mark_terms(rho1, &p.law)?;
        let base = div + hx.scale(p.beta / 2.0) + h_ro + sv + p.offset;
        match cfg.ensemble {
            Ensemble::Cm => {
                let alpha = p.law.alpha().expect("CM reference");
                let elog: f64 = alpha.probs().iter().enumerate().map(|(d, &a)| a * log_factorial(d)).sum();
                base + (alpha.entropy() - elog - 2.0 * s_scalar(p.beta))
            }
            Ensemble::Fe | Ensemble::Er => base,
        }
    };
    let partial_totals: Vec<ExtReal> = j.iter().map(|&x| constant.minus(ExtReal::Finite(x))).collect();
    let total = match (p.finite, partial_totals.last()) {
        (true, Some(&t)) => t,
        _ => ExtReal::PosInf,
    };
    let j_direction = direction(&j);
    Ok(RateReport {
        form: Form::Combinatorial,
        ensemble: cfg.ensemble,
        depth: chain.len() as u32,
        beta: p.beta,
        offset: p.offset,
        terms: Vec::new(),
        partial_totals,
        total,
        combinatorial: Some(CombinatorialTerms { j, e_log_factorial: elf, constant, j_direction }),
        flags: p.flags.clone(),
    })
}

/// Both sides of the microstate entropy identity at a matched truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicrostateCheck {
    /// `J_H`.
    pub sigma_estimate: f64,
    /// `H(ρ_o) + H(ρ_o‖ν) + (β/2)H(β⃗/β‖ξ̄) + s⃗(β⃗) − 𝕾_H`, with `𝕾_H` from the component form.
    pub rhs: f64,
    pub residual: f64,
}

/// Checks the microstate entropy identity on a chain with Poisson reference at its own mean degree.
pub fn microstate_check(chain: &[TreeMeasure], nu: &[f64], xi: &[Vec<f64>]) -> Result<MicrostateCheck> {
    let beta = chain.first().map_or(0.0, |r| r.mean_degree());
    let cfg = ModelConfig {
        ensemble: Ensemble::Fe,
        kappa: beta,
        alpha: None,
        m: None,
        nu: nu.to_vec(),
        xi: xi.to_vec(),
        max_attempts: 0,
    };
    let comp = component_rate(chain, &cfg)?;
    let h = chain.len() as u32;
    let top = &chain[h as usize - 1];
    let (sigma, _) = j_value(top, &pair_measure(top, h)?, beta);
    let law = ReferenceLaw::new(DegreeRef::Poisson(beta), nu.to_vec(), xi.to_vec())?;
    let (hx, sv) = edge_mark_terms(&chain[0], &law)?;
    let h_ro = entropy(chain[0].root_mark_law().values().copied());
    let rhs = (root_mark_divergence(&chain[0], &law) + hx.scale(beta / 2.0) + h_ro + sv).minus(comp.total);
    let rhs = rhs.to_f64();
    Ok(MicrostateCheck { sigma_estimate: sigma, rhs, residual: sigma - rhs })
}
