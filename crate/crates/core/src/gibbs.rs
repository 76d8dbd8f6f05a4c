//! Conditioning the neighborhood empirical measure of the configuration
//! model on a large value of a local sum functional.

use crate::error::{Error, Result};
use crate::measure::{DegreeLaw, TreeMeasure};
use crate::rng::{default_threads, stream};
use crate::samplers::apportion;
use crate::tree::{CanonicalTree, Child};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

/// Condition `⟨L_n, f⟩ ≥ c` for `f(τ) = Σ_{v∼o} h(x_v)` under the configuration model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsProblem {
    pub alpha: DegreeLaw,
    pub nu: Vec<f64>,
    pub hfun: Vec<f64>,
    pub c: f64,
    /// Slack of the Monte Carlo event `⟨L_n, f⟩ ≥ c − δ`.
    pub delta: f64,
}

impl GibbsProblem {
    /// Open interval `(E[f], κ·max h)` that `c` must lie in.
    pub fn bounds(&self) -> (f64, f64) {
        let kappa = self.alpha.mean();
        let hmax = self
            .nu
            .iter()
            .zip(&self.hfun)
            .filter(|(p, _)| **p > 0.0)
            .map(|(_, &h)| h)
            .fold(f64::NEG_INFINITY, f64::max);
        (g_of_lambda(self, 0.0), kappa * hmax)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu.len() != self.hfun.len() {
            return Err(Error::Invalid("nu and hfun differ in length".into()));
        }
        let (lower, upper) = self.bounds();
        if !(self.c > lower && self.c < upper) {
            return Err(Error::GibbsHypothesis { c: self.c, lower, upper });
        }
        Ok(())
    }

    fn max_degree(&self) -> usize {
        self.alpha.probs().len() - 1
    }
}

/// Tilted mark law at degree `n`: `ν(x)e^{λnh(x)}/Z_n`, with `log Z_n`.
fn tilt(p: &GibbsProblem, lambda: f64, n: usize) -> (Vec<f64>, f64) {
    let e: Vec<f64> = p.hfun.iter().map(|&h| lambda * n as f64 * h).collect();
    let m = p
        .nu
        .iter()
        .zip(&e)
        .filter(|(q, _)| **q > 0.0)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = p.nu.iter().zip(&e).map(|(&q, &v)| if q > 0.0 { q * (v - m).exp() } else { 0.0 }).collect();
    let z: f64 = w.iter().sum();
    (w.iter().map(|x| x / z).collect(), m + z.ln())
}

/// `g(λ) = Σ_n n α(n) Σ_x h(x) ν(x)e^{λnh(x)}/Z_n`.
pub fn g_of_lambda(p: &GibbsProblem, lambda: f64) -> f64 {
    (1..=p.max_degree())
        .map(|n| {
            let (q, _) = tilt(p, lambda, n);
            n as f64 * p.alpha.prob(n) * q.iter().zip(&p.hfun).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum()
}

/// Optimizer of the conditioned problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GibbsSolution {
    pub lambda: f64,
    /// `γ[n][x]`.
    pub gamma: Vec<Vec<f64>>,
    /// Mark law across a uniform edge: `ψ(x) = Σ_n nγ(n,x)/κ`.
    pub psi: Vec<f64>,
    /// Depth-1 law with root `(n, x) ~ γ` and i.i.d. `ψ` leaf marks.
    pub mu_star: TreeMeasure,
    /// `H(γ‖α⊗ν)`.
    pub value: f64,
}

fn gamma_at(p: &GibbsProblem, lambda: f64) -> Vec<Vec<f64>> {
    (0..=p.max_degree())
        .map(|n| tilt(p, lambda, n).0.into_iter().map(|q| p.alpha.prob(n) * q).collect())
        .collect()
}

fn divergence(p: &GibbsProblem, gamma: &[Vec<f64>]) -> f64 {
    let mut v = 0.0;
    for (n, row) in gamma.iter().enumerate() {
        for (x, &g) in row.iter().enumerate() {
            if g > 0.0 {
                v += g * (g / (p.alpha.prob(n) * p.nu[x])).ln();
            }
        }
    }
    v
}

/// Solves `g(λ) = c` by bracketed bisection and assembles the optimizer.
pub fn solve(p: &GibbsProblem) -> Result<GibbsSolution> {
    p.validate()?;
    let lambda = solve_lambda(p)?;
    Ok(assemble(p, lambda))
}

/// Like [`solve`], but a threshold at or below `E[f]` yields the
/// unconstrained optimum `α⊗ν` with `λ = 0`.
pub fn optimum(p: &GibbsProblem) -> Result<GibbsSolution> {
    let (lower, upper) = p.bounds();
    if p.c <= lower && p.nu.len() == p.hfun.len() {
        return Ok(assemble(p, 0.0));
    }
    if p.c >= upper {
        return Err(Error::GibbsHypothesis { c: p.c, lower, upper });
    }
    solve(p)
}

fn solve_lambda(p: &GibbsProblem) -> Result<f64> {
    let mut hi = 1.0;
    while g_of_lambda(p, hi) <= p.c {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracket(p.c));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_of_lambda(p, mid) < p.c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn assemble(p: &GibbsProblem, lambda: f64) -> GibbsSolution {
    let gamma = gamma_at(p, lambda);
    let kappa = p.alpha.mean();
    let psi: Vec<f64> = (0..p.nu.len())
        .map(|x| gamma.iter().enumerate().map(|(n, row)| n as f64 * row[x]).sum::<f64>() / kappa)
        .collect();
    let mu_star = star_measure(&gamma, &psi);
    let value = divergence(p, &gamma);
    GibbsSolution { lambda, gamma, psi, mu_star, value }
}

fn star_measure(gamma: &[Vec<f64>], psi: &[f64]) -> TreeMeasure {
    let mut out = TreeMeasure::new(1);
    let marks: Vec<usize> = (0..psi.len()).filter(|&x| psi[x] > 0.0).collect();
    for (n, row) in gamma.iter().enumerate() {
        for (x, &g) in row.iter().enumerate() {
            if g <= 0.0 {
                continue;
            }
            let probs: Vec<f64> = marks.iter().map(|&m| psi[m]).collect();
            crate::rate::for_each_multiset(marks.len(), n, &mut |counts| {
                let q = crate::rate::multinomial(counts, &probs);
                let mut ch = Vec::with_capacity(n);
                for (i, &c) in counts.iter().enumerate() {
                    ch.extend(std::iter::repeat_n(Child::new(0, 0, CanonicalTree::leaf(marks[i] as u32)), c));
                }
                out.add(CanonicalTree::new(x as u32, ch), g * q);
            });
        }
    }
    out
}

/// Optimality residuals of a solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `max |1 + log(γ/(αν)) − λ′_n − λnh(x)|`, with `λ′_n` fitted per degree.
    pub stationarity: f64,
    /// `|Σ nhγ − c|`.
    pub active_constraint: f64,
    /// `max_n |Σ_x γ(n,x) − α(n)|`.
    pub marginal: f64,
    /// `λ·|Σ nhγ − c|`.
    pub complementary_slackness: f64,
}

pub fn kkt_residuals(p: &GibbsProblem, s: &GibbsSolution) -> KktResiduals {
    let mut stationarity: f64 = 0.0;
    let mut marginal: f64 = 0.0;
    let mut total = 0.0;
    for (n, row) in s.gamma.iter().enumerate() {
        let a = p.alpha.prob(n);
        marginal = marginal.max((row.iter().sum::<f64>() - a).abs());
        let r: Vec<f64> = (0..row.len())
            .filter(|&x| a * p.nu[x] > 0.0)
            .map(|x| 1.0 + (row[x] / (a * p.nu[x])).ln() - s.lambda * n as f64 * p.hfun[x])
            .collect();
        if !r.is_empty() {
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            stationarity = r.iter().fold(stationarity, |m, v| m.max((v - mean).abs()));
        }
        total += row.iter().zip(&p.hfun).map(|(g, h)| n as f64 * h * g).sum::<f64>();
    }
    let active = (total - p.c).abs();
    KktResiduals { stationarity, active_constraint: active, marginal, complementary_slackness: s.lambda * active }
}

/// Smallest `t` in a bracket with `f(t) ≥ target`, for nondecreasing `f`.
fn bisect_up(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while f(hi) < target && hi < 1e300 {
        let w = hi - lo;
        lo = hi;
        hi += 2.0 * w.max(1.0);
    }
    while f(lo) > target && lo > -1e300 {
        let w = hi - lo;
        hi = lo;
        lo -= 2.0 * w.max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Minimizes `H(γ‖α⊗ν)` over `{row sums α, Σ nhγ ≥ c}` by projected Newton
/// steps in the metric of the diagonal Hessian, independently of the closed
/// form. Cells with `α(n)ν(x) = 0` stay at zero.
pub fn brute_force_opt(p: &GibbsProblem, cap: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    let rows = p.max_degree() + 1;
    let nx = p.nu.len();
    let dim = rows * nx;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let idx: Vec<(usize, usize)> = (0..rows)
        .flat_map(|n| (0..nx).map(move |x| (n, x)))
        .filter(|&(n, x)| p.alpha.prob(n) * p.nu[x] > 0.0)
        .collect();
    let base: Vec<f64> = idx.iter().map(|&(n, x)| p.alpha.prob(n) * p.nu[x]).collect();
    let a: Vec<f64> = idx.iter().map(|&(n, x)| n as f64 * p.hfun[x]).collect();
    let row_of: Vec<usize> = idx.iter().map(|&(n, _)| n).collect();
    let lhs = |y: &[f64]| y.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>();
    let objective = |y: &[f64]| -> f64 {
        y.iter().zip(&base).filter(|(u, _)| **u > 0.0).map(|(u, b)| u * (u / b).ln()).sum()
    };
    // argmin Σ d_i (y_i − z_i)^2 over the feasible set.
    let project = |z: &[f64], d: &[f64]| -> Vec<f64> {
        let at = |mu: f64| -> Vec<f64> {
            let mut y = vec![0.0; z.len()];
            for n in 0..rows {
                let cells: Vec<usize> = (0..z.len()).filter(|&i| row_of[i] == n).collect();
                if cells.is_empty() {
                    continue;
                }
                let fill = |nu: f64| cells.iter().map(|&i| (z[i] + (nu + mu * a[i]) / d[i]).max(0.0)).sum::<f64>();
                let nu = bisect_up(fill, p.alpha.prob(n), -1.0, 1.0);
                for &i in &cells {
                    y[i] = (z[i] + (nu + mu * a[i]) / d[i]).max(0.0);
                }
            }
            y
        };
        let y0 = at(0.0);
        if lhs(&y0) >= p.c {
            return y0;
        }
        at(bisect_up(|mu| lhs(&at(mu)), p.c, 0.0, 1.0))
    };
    // Strictly feasible interior start: mix α⊗ν with all row mass on the largest h.
    let mut top = vec![0.0; idx.len()];
    for n in 0..rows {
        let cells: Vec<usize> = (0..idx.len()).filter(|&i| row_of[i] == n).collect();
        if let Some(&best) = cells.iter().max_by(|&&i, &&j| a[i].total_cmp(&a[j])) {
            top[best] = p.alpha.prob(n);
        }
    }
    let (lb, lt) = (lhs(&base), lhs(&top));
    let t = if lb >= p.c { 0.0 } else { ((p.c - lb) / (lt - lb) + 1.0) / 2.0 };
    let mut g: Vec<f64> = base.iter().zip(&top).map(|(b, u)| (1.0 - t) * b + t * u).collect();
    let mut f = objective(&g);
    for _ in 0..10_000 {
        let grad: Vec<f64> = g.iter().zip(&base).map(|(u, b)| 1.0 + (u.max(1e-300) / b).ln()).collect();
        let d: Vec<f64> = g.iter().map(|u| 1.0 / u.max(1e-300)).collect();
        let z: Vec<f64> = g.iter().zip(&grad).zip(&d).map(|((u, gr), di)| u - gr / di).collect();
        let y = project(&z, &d);
        let dir: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if slope > -1e-18 {
            break;
        }
        let mut step = 1.0;
        let mut next = g.clone();
        let mut fn_ = f;
        while step > 1e-20 {
            next = g.iter().zip(&dir).map(|(u, v)| (u + step * v).max(0.0)).collect();
            fn_ = objective(&next);
            if fn_ <= f + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
        }
        let change = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if fn_ > f {
            break;
        }
        g = next;
        f = fn_;
        if change < 1e-15 {
            break;
        }
    }
    let mut out = vec![vec![0.0; nx]; rows];
    for (&(n, x), &v) in idx.iter().zip(&g) {
        out[n][x] = v;
    }
    Ok((out, f))
}

/// Proposal for the Monte Carlo marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethod {
    /// Marks i.i.d. `ν`, keep draws in the event.
    Rejection,
    /// Marks from the optimal tilt at each degree, importance weighted back to `ν`.
    Tilted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub n: usize,
    /// Maximum number of draws.
    pub draws: usize,
    /// Stop after the first batch at which this many draws were accepted.
    pub min_accepted: Option<usize>,
    pub seed: u64,
    pub method: McMethod,
    pub threads: Option<usize>,
    /// Draws per seed stream.
    pub batch: usize,
}

/// Conditional laws estimated by Monte Carlo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n: usize,
    pub delta: f64,
    pub method: McMethod,
    pub draws: usize,
    pub accepted: usize,
    /// Estimated probability of the event.
    pub acceptance_rate: f64,
    pub acceptance_rate_se: f64,
    /// Kish effective sample size of the accepted draws.
    pub effective_samples: f64,
    /// Conditional law of `(deg_o, X_o)`, indexed `[n][x]`.
    pub joint: Vec<Vec<f64>>,
    /// Conditional mark law across a uniform edge.
    pub leaf: Vec<f64>,
    pub tv_joint: f64,
    /// Half the sum of per-cell standard errors.
    pub tv_joint_se: f64,
    pub tv_leaf: f64,
    pub tv_leaf_se: f64,
    /// Largest deviation of the degree marginal from `α_n`; zero by construction.
    pub degree_marginal_error: f64,
    /// `max_k |α_n(k) − α(k)|`.
    pub alpha_n_error: f64,
}

/// One accepted draw: log weight and normalized statistics.
struct Record {
    log_w: f64,
    joint: Vec<f64>,
    leaf: Vec<f64>,
}

struct BatchOut {
    draws: usize,
    records: Vec<Record>,
    /// Sum and sum of squares of the (unnormalized) event weights over all draws.
    w_sum: f64,
    w_sq: f64,
}

/// Estimates the conditional law of the root statistics given `⟨L_n, f⟩ ≥ c − δ`.
///
/// The statistics depend on the graph only through its degree sequence,
/// which the configuration model fixes at `α_n`, so draws resample vertex
/// marks over that sequence.
pub fn conditional_mc(p: &GibbsProblem, opts: &McOptions) -> Result<McReport> {
    let sol = optimum(p)?;
    let counts = apportion(&p.alpha, opts.n)?;
    let degrees: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    let nx = p.nu.len();
    let rows = counts.len().max(p.max_degree() + 1);
    let lambda = match opts.method {
        McMethod::Rejection => 0.0,
        McMethod::Tilted => sol.lambda,
    };
    let proposals: Vec<(WeightedIndex<f64>, f64)> = (0..rows)
        .map(|k| {
            let (q, log_z) = tilt(p, lambda, k);
            WeightedIndex::new(&q).map(|w| (w, log_z)).map_err(|e| Error::Invalid(format!("{e}")))
        })
        .collect::<Result<_>>()?;
    let threshold = (p.c - p.delta) * opts.n as f64;
    let batch = opts.batch.max(1);
    let n_batches = opts.draws.div_ceil(batch);
    let run_batch = |b: usize| -> BatchOut {
        let mut rng = stream(opts.seed, b as u64);
        let size = batch.min(opts.draws - b * batch);
        let mut records = Vec::new();
        let (mut w_sum, mut w_sq) = (0.0, 0.0);
        let mut joint = vec![0usize; rows * nx];
        let mut leaf = vec![0usize; nx];
        for _ in 0..size {
            joint.iter_mut().for_each(|v| *v = 0);
            leaf.iter_mut().for_each(|v| *v = 0);
            let mut s = 0.0;
            let mut log_w = 0.0;
            for &d in &degrees {
                let x = proposals[d].0.sample(&mut rng);
                joint[d * nx + x] += 1;
                leaf[x] += d;
                s += d as f64 * p.hfun[x];
                log_w += proposals[d].1;
            }
            log_w -= lambda * s;
            if s >= threshold - 1e-9 {
                let w = log_w.exp();
                w_sum += w;
                w_sq += w * w;
                let stubs: usize = leaf.iter().sum();
                records.push(Record {
                    log_w,
                    joint: joint.iter().map(|&c| c as f64 / opts.n as f64).collect(),
                    leaf: leaf.iter().map(|&c| if stubs > 0 { c as f64 / stubs as f64 } else { 0.0 }).collect(),
                });
            }
        }
        BatchOut { draws: size, records, w_sum, w_sq }
    };
    let threads = opts.threads.unwrap_or_else(default_threads).max(1);
    let mut outs: Vec<BatchOut> = Vec::new();
    let mut accepted = 0usize;
    let mut next = 0usize;
    'waves: while next < n_batches {
        let wave: Vec<usize> = (next..(next + threads).min(n_batches)).collect();
        next += wave.len();
        let results: Vec<BatchOut> = std::thread::scope(|sc| {
            let handles: Vec<_> = wave.iter().map(|&b| sc.spawn(move || run_batch(b))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            accepted += r.records.len();
            outs.push(r);
            if opts.min_accepted.is_some_and(|m| accepted >= m) {
                break 'waves;
            }
        }
    }
    let draws: usize = outs.iter().map(|o| o.draws).sum();
    let records: Vec<&Record> = outs.iter().flat_map(|o| o.records.iter()).collect();
    if records.is_empty() {
        return Err(Error::NoAcceptedSamples(draws));
    }
    let w_sum: f64 = outs.iter().map(|o| o.w_sum).sum();
    let w_sq: f64 = outs.iter().map(|o| o.w_sq).sum();
    let acceptance_rate = w_sum / draws as f64;
    let acceptance_rate_se = ((w_sq / draws as f64 - acceptance_rate * acceptance_rate).max(0.0) / draws as f64).sqrt();
    let max_lw = records.iter().map(|r| r.log_w).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = records.iter().map(|r| (r.log_w - max_lw).exp()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let effective_samples = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let estimate = |get: &dyn Fn(&Record) -> &[f64], len: usize| -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0; len];
        for (r, &wi) in records.iter().zip(&w) {
            for (m, v) in mean.iter_mut().zip(get(r)) {
                *m += wi * v;
            }
        }
        let mut var = vec![0.0; len];
        for (r, &wi) in records.iter().zip(&w) {
            for ((s, v), m) in var.iter_mut().zip(get(r)).zip(&mean) {
                *s += wi * wi * (v - m) * (v - m);
            }
        }
        (mean, var.into_iter().map(f64::sqrt).collect())
    };
    let (jm, jse) = estimate(&|r: &Record| r.joint.as_slice(), rows * nx);
    let (lm, lse) = estimate(&|r: &Record| r.leaf.as_slice(), nx);
    let gamma_flat: Vec<f64> = (0..rows)
        .flat_map(|k| (0..nx).map(move |x| (k, x)))
        .map(|(k, x)| sol.gamma.get(k).map_or(0.0, |r| r[x]))
        .collect();
    let tv = |a: &[f64], b: &[f64]| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let joint: Vec<Vec<f64>> = jm.chunks(nx).map(<[f64]>::to_vec).collect();
    let alpha_n: Vec<f64> = counts.iter().map(|&c| c as f64 / opts.n as f64).collect();
    let degree_marginal_error = joint
        .iter()
        .enumerate()
        .map(|(k, r)| (r.iter().sum::<f64>() - alpha_n.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    let alpha_n_error = (0..rows)
        .map(|k| (alpha_n.get(k).copied().unwrap_or(0.0) - p.alpha.prob(k)).abs())
        .fold(0.0, f64::max);
    Ok(McReport {
        n: opts.n,
        delta: p.delta,
        method: opts.method,
        draws,
        accepted: records.len(),
        acceptance_rate,
        acceptance_rate_se,
        effective_samples,
        tv_joint: tv(&jm, &gamma_flat),
        tv_joint_se: 0.5 * jse.iter().sum::<f64>(),
        tv_leaf: tv(&lm, &sol.psi),
        tv_leaf_se: 0.5 * lse.iter().sum::<f64>(),
        joint,
        leaf: lm,
        degree_marginal_error,
        alpha_n_error,
    })
}
