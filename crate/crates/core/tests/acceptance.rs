//! Acceptance runner: one PASS/FAIL line per criterion.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ldp::empirical::{component_measure, neighborhood_measure};
use sparse_ldp::gibbs::*;
use sparse_ldp::graph::MarkedGraph;
use sparse_ldp::measure::*;
use sparse_ldp::mtp::{mtp_check, RootedGraphMeasure};
use sparse_ldp::rate::*;
use sparse_ldp::samplers::{sample_model, Ensemble, ModelConfig};
use sparse_ldp::tree::{canonicalize, LabeledTree};
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let pass = o.pass && took <= budget;
    println!(
        "{} [{id}] {name}: {} ({:.2}s, budget {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn cfg(ensemble: Ensemble, kappa: f64, alpha: Option<DegreeLaw>, nu: &[f64], xi: &[Vec<f64>]) -> ModelConfig {
    ModelConfig { ensemble, kappa, alpha, m: None, nu: nu.to_vec(), xi: xi.to_vec(), max_attempts: 100_000 }
}

fn alpha_13() -> DegreeLaw {
    DegreeLaw::new(vec![0.0, 0.5, 0.0, 0.5]).unwrap()
}

const NU: [f64; 2] = [0.4, 0.6];

fn full_xi() -> Vec<Vec<f64>> {
    vec![vec![0.2, 0.3], vec![0.1, 0.4]]
}

/// Forest corpus shared by criteria 2 and 3.
fn forest_corpus() -> Vec<MarkedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut out = Vec::new();
    while out.len() < 20 {
        let n = rng.random_range(4..=12);
        let g = random_forest(n, 2, 2, &mut rng);
        if component_measure(&g, 1).mean_degree() > 0.0 {
            out.push(g);
        }
    }
    out
}

fn rate_vanishes_at_truth() -> Outcome {
    // Depth-H chains; the edge-mark law is narrowed at depths 2 and 3 to keep the support enumerable.
    let cases = [
        (1, full_xi()),
        (2, vec![vec![0.0, 1.0], vec![0.0, 0.0]]),
        (3, vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
    ];
    let alpha = alpha_13();
    let mut worst: f64 = 0.0;
    for (depth, xi) in cases {
        let chain: Vec<_> = (1..=depth).map(|h| eta_marginal(&alpha, &NU, &xi, h).unwrap()).collect();
        let c = cfg(Ensemble::Cm, 2.0, Some(alpha.clone()), &NU, &xi);
        for rep in rate_forms(&chain, &c).unwrap() {
            worst = worst.max(rep.total.to_f64().abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |rate| = {worst:.2e}"))
}

fn three_forms_agree(corpus: &[MarkedGraph]) -> Outcome {
    let xi = full_xi();
    let (mut term_gap, mut total_gap): (f64, f64) = (0.0, 0.0);
    for g in corpus {
        let chain = chain_of(g, 3);
        let beta = chain[0].mean_degree();
        for c in [
            cfg(Ensemble::Cm, beta, Some(chain[0].degree_law()), &NU, &xi),
            cfg(Ensemble::Fe, beta, None, &NU, &xi),
            cfg(Ensemble::Er, 1.7, None, &NU, &xi),
        ] {
            let a = component_rate(&chain, &c).unwrap();
            let b = intermediate_rate(&chain, &c).unwrap();
            let j = combinatorial_rate(&chain, &c).unwrap();
            for (x, y) in a.terms.iter().zip(&b.terms) {
                term_gap = term_gap.max((x.value.to_f64() - y.value.to_f64()).abs());
            }
            for (x, y) in a.partial_totals.iter().zip(&j.partial_totals) {
                total_gap = total_gap.max((x.to_f64() - y.to_f64()).abs());
            }
        }
    }
    outcome(
        term_gap <= 1e-9 && total_gap <= 1e-9,
        format!("{} forests x 3 ensembles, max term gap {term_gap:.2e}, max total gap {total_gap:.2e}", corpus.len()),
    )
}

fn normalization(corpus: &[MarkedGraph]) -> Outcome {
    let (mut mass, mut marginal): (f64, f64) = (0.0, 0.0);
    for g in corpus {
        let chain = chain_of(g, 3);
        let l = ReferenceLaw::new(DegreeRef::FixedAlpha(chain[0].degree_law()), NU.to_vec(), full_xi()).unwrap();
        for m in [mu_check(&chain[0], &l).unwrap().measure, mu_hat(&chain[0], &l).unwrap().measure] {
            mass = mass.max((m.total_mass() - 1.0).abs());
        }
        for h in 2..=3u32 {
            let rho = &chain[h as usize - 1];
            let prev = &chain[h as usize - 2];
            mass = mass.max((rho_hat(rho, h).unwrap().total_mass() - 1.0).abs());
            let star = one_step_extension(prev, h - 1).unwrap();
            mass = mass.max((star.total_mass() - 1.0).abs());
            marginal = marginal.max(star.truncate(h - 1).max_abs_diff(prev));
            let p = pair_marginals(&pair_measure(rho, h).unwrap());
            let ps = pair_marginals(&pair_measure(&rho_check(rho, h).unwrap(), h).unwrap());
            for (a, w) in &p.first {
                marginal = marginal.max((ps.first.get(a).copied().unwrap_or(0.0) - w).abs());
            }
        }
    }
    outcome(
        mass <= 1e-12 && marginal <= 1e-12,
        format!("max mass error {mass:.2e}, max marginal error {marginal:.2e}"),
    )
}

fn pair_measure_is_labeling_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut count, mut worst, mut support_ok) = (0, 0.0f64, true);
    while count < 50 {
        let n = rng.random_range(3..=10);
        let rho = component_measure(&random_forest(n, 2, 2, &mut rng), 2);
        if rho.mean_degree() == 0.0 {
            continue;
        }
        let pi = pair_measure(&rho, 2).unwrap();
        let oracle = labeling_law(&rho, 2);
        support_ok &= pi.atoms().len() == oracle.len();
        for ((a, b), w) in pi.atoms() {
            let key = (half_edge_string(a), half_edge_string(b));
            worst = worst.max(oracle.get(&key).map_or(f64::INFINITY, |o| (w - o).abs()));
        }
        count += 1;
    }
    outcome(support_ok && worst <= 1e-12, format!("{count} measures, max gap {worst:.2e}"))
}

fn unimodularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut cyclic = 0;
    for i in 0..30 {
        let n = rng.random_range(5..=9);
        let g = if i % 3 == 0 { random_forest(n, 2, 2, &mut rng) } else { random_graph(n, 0.35, 2, 2, &mut rng) };
        cyclic += !g.is_forest() as usize;
        worst = worst.max(mtp_check(&RootedGraphMeasure::uniform(&g), 40, &mut rng).max_violation);
    }
    // Binary tree of depth 3 rooted at its top vertex: the root is not size-biased.
    let mut t = LabeledTree::new_root(0);
    let mut frontier = vec![0];
    for _ in 0..3 {
        frontier = frontier.iter().flat_map(|&v| [t.add_child(v, 0, 0, 0), t.add_child(v, 0, 0, 0)]).collect();
    }
    let gw = RootedGraphMeasure::from_tree_measure(&TreeMeasure::point_mass(canonicalize(&t)));
    let gw_violation = mtp_check(&gw, 40, &mut rng).max_violation;
    outcome(
        worst <= 1e-9 && gw_violation >= 0.01,
        format!("30 graphs ({cyclic} cyclic) max violation {worst:.2e}; tree counterexample {gw_violation:.3}"),
    )
}

fn worked_problem() -> GibbsProblem {
    GibbsProblem { alpha: DegreeLaw::point(2), nu: vec![0.5, 0.5], hfun: vec![0.0, 1.0], c: 1.5, delta: 0.05 }
}

fn gibbs_closed_form() -> Outcome {
    let p = worked_problem();
    let s = solve(&p).unwrap();
    let v_closed = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    let closed = (s.lambda - 3f64.ln() / 2.0).abs().max((s.gamma[2][1] - 0.75).abs()).max((s.value - v_closed).abs());
    let (g_bf, v_bf) = brute_force_opt(&p, 12).unwrap();
    let mut bf = (v_bf - s.value).abs();
    for (row, srow) in g_bf.iter().zip(&s.gamma) {
        for (a, b) in row.iter().zip(srow) {
            bf = bf.max((a - b).abs());
        }
    }
    let k = kkt_residuals(&p, &s);
    let kkt = k.stationarity.max(k.active_constraint).max(k.marginal).max(k.complementary_slackness);
    let cm = ModelConfig {
        ensemble: Ensemble::Cm,
        kappa: 2.0,
        alpha: Some(p.alpha.clone()),
        m: None,
        nu: p.nu.clone(),
        xi: vec![vec![1.0]],
        max_attempts: 1,
    };
    let rate_gap = (rate_nbd(&cm, &s.mu_star).unwrap().to_f64() - s.value).abs();
    outcome(
        closed <= 1e-12 && bf <= 1e-6 && kkt <= 1e-9 && rate_gap <= 1e-8,
        format!(
            "lambda {:.5}, v* {:.5}; closed-form gap {closed:.1e}, brute-force gap {bf:.1e}, KKT {kkt:.1e}, rate gap {rate_gap:.1e}",
            s.lambda, s.value
        ),
    )
}

/// Exact `TV(law of (deg, X_o) | event, γ)` for the worked instance, where
/// the event is `#{v : X_v = 1} ≥ (c − δ)n/2`.
fn exact_conditional_tv(n: usize, p: &GibbsProblem, gamma21: f64) -> f64 {
    let k = ((p.c - p.delta) * n as f64 / 2.0 - 1e-9).ceil() as usize;
    let mut log_binom = vec![0.0; n + 1];
    for j in 1..=n {
        log_binom[j] = log_binom[j - 1] + ((n - j + 1) as f64).ln() - (j as f64).ln();
    }
    let (mut mass, mut mean) = (0.0, 0.0);
    for (j, lb) in log_binom.iter().enumerate().skip(k) {
        let w = lb.exp();
        mass += w;
        mean += w * j as f64;
    }
    (mean / mass / n as f64 - gamma21).abs()
}

fn gibbs_mc_trend() -> Outcome {
    let p = worked_problem();
    let gamma21 = solve(&p).unwrap().gamma[2][1];
    let mut tvs = Vec::new();
    let mut parts = Vec::new();
    let mut enough = true;
    for n in [20usize, 40, 80] {
        let method = if n >= 80 { McMethod::Tilted } else { McMethod::Rejection };
        let opts = McOptions {
            n,
            draws: 2_000_000_000,
            min_accepted: Some(100_000),
            seed: 7,
            method,
            threads: None,
            batch: 20_000,
        };
        let r = conditional_mc(&p, &opts).unwrap();
        enough &= r.accepted >= 100_000;
        parts.push(format!(
            "n={n} {:?} TV {:.4}±{:.4} (exact {:.4}, accepted {})",
            r.method,
            r.tv_joint,
            r.tv_joint_se,
            exact_conditional_tv(n, &p, gamma21),
            r.accepted
        ));
        tvs.push(r.tv_joint);
    }
    let decreasing = tvs.windows(2).all(|w| w[1] < w[0]);
    outcome(enough && decreasing && tvs[2] < 0.1, parts.join("; "))
}

fn local_weak_convergence() -> Outcome {
    let alpha = alpha_13();
    let xi = full_xi();
    let c = cfg(Ensemble::Cm, 2.0, Some(alpha.clone()), &NU, &xi);
    let eta = eta_marginal(&alpha, &NU, &xi, 1).unwrap();
    let mut means = Vec::new();
    for n in [100usize, 1_000, 10_000] {
        let total: f64 = (0..20u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                neighborhood_measure(&sample_model(n, &c, &mut rng).unwrap()).tv_distance(&eta)
            })
            .sum();
        means.push(total / 20.0);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && means[2] < 0.05,
        format!("mean TV over 20 seeds: {:.4}, {:.4}, {:.4}", means[0], means[1], means[2]),
    )
}

fn vertex_only() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nu = vec![0.2, 0.3, 0.5];
    let (mut count, mut worst) = (0, 0.0f64);
    while count < 50 {
        let n = rng.random_range(6..14);
        let mu = neighborhood_measure(&random_graph(n, 0.3, 3, 1, &mut rng));
        if mu.mean_degree() == 0.0 || !pair_measure(&mu, 1).unwrap().is_admissible(1e-12).0 {
            continue;
        }
        let l = ReferenceLaw::new(DegreeRef::FixedAlpha(mu.degree_law()), nu.clone(), vec![vec![1.0]]).unwrap();
        let beta = mu.mean_degree();
        let a = frak_i(beta, &l, &mu).to_f64();
        let b = vertex_only_rate(beta, &l, &mu).unwrap().to_f64();
        worst = worst.max((a - b).abs());
        count += 1;
    }
    outcome(worst <= 1e-10, format!("{count} measures, max gap {worst:.2e}"))
}

fn ell_properties() -> Outcome {
    let zero = [0.5, 1.0, 2.0, 3.7].iter().map(|&k| ell(k, k).abs()).fold(0.0, f64::max);
    let at_zero = (ell(2.0, 0.0) - 1.0).abs();
    let mut min_second: f64 = f64::INFINITY;
    for &k in &[0.5, 1.0, 2.0, 3.7] {
        let step = 0.01;
        for i in 1..1000 {
            let b = i as f64 * step;
            min_second = min_second.min(ell(k, b - step) - 2.0 * ell(k, b) + ell(k, b + step));
        }
    }
    outcome(
        zero <= 1e-15 && at_zero <= 1e-15 && min_second >= -1e-12,
        format!("|l(k,k)| {zero:.1e}, |l_2(0) - 1| {at_zero:.1e}, min second difference {min_second:.2e}"),
    )
}

fn main() {
    let corpus = forest_corpus();
    let secs = Duration::from_secs;
    let results = [
        run(1, "rate vanishes at truth", secs(1), rate_vanishes_at_truth),
        run(2, "three-form agreement", secs(30), || three_forms_agree(&corpus)),
        run(3, "normalization", secs(10), || normalization(&corpus)),
        run(4, "pair measure is the size-biased labeling law", secs(10), pair_measure_is_labeling_law),
        run(5, "unimodularity", secs(30), unimodularity),
        run(6, "Gibbs closed form vs brute force", secs(5), gibbs_closed_form),
        run(7, "Gibbs conditional MC trend", secs(300), gibbs_mc_trend),
        run(8, "local weak convergence smoke", secs(120), local_weak_convergence),
        run(9, "vertex-only rate", secs(5), vertex_only),
        run(10, "ell properties", secs(1), ell_properties),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
}
