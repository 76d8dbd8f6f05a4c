use super::rate::gap;
use super::{load_chain, EnsembleArg, LawSpec};
use crate::output::{json_arg, Run};
use anyhow::Result;
use clap::Args;
use serde::Serialize;
use sparse_ldp::measure::{pair_measure, PairMeasure, TreeMeasure};
use sparse_ldp::mtp::{mtp_check, RootedGraphMeasure};
use sparse_ldp::rate::{mu_check, mu_hat, one_step_extension, rate_forms, rho_hat, DegreeRef, ReferenceLaw};
use sparse_ldp::rng::stream;
use sparse_ldp::samplers::{Ensemble, ModelConfig};
use std::path::PathBuf;

/// Tolerance for masses, marginals and the pair-measure identity.
const EXACT_TOL: f64 = 1e-10;
/// Tolerance for symmetry, form agreement and mass transport.
const IDENTITY_TOL: f64 = 1e-9;

/// Exact identity checks on a truncation chain.
#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    ensemble: EnsembleArg,
    /// Truncation depth; defaults to min(3, depth of the input).
    #[arg(long)]
    depth: Option<u32>,
    /// Tree measure or graph JSON. A graph also enables the mass-transport check.
    #[arg(long)]
    input: PathBuf,
    /// Reference law, inline JSON or a file.
    #[arg(long)]
    law: String,
    /// Random test functions for the mass-transport check.
    #[arg(long, default_value_t = 20)]
    mtp_trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct Config<'a> {
    depth: u32,
    input_sha256: &'a str,
    model: &'a ModelConfig,
    mtp_trials: usize,
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Serialize)]
struct Row {
    check: &'static str,
    depth: u32,
    status: Status,
    residual: f64,
    tolerance: f64,
    note: String,
}

#[derive(Default)]
struct Rows(Vec<Row>);

impl Rows {
    fn push(&mut self, check: &'static str, depth: u32, residual: f64, tolerance: f64) {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        self.0.push(Row { check, depth, status, residual, tolerance, note: String::new() });
    }

    /// Records `r`, or a failure carrying the error when the check could not run.
    fn push_result(&mut self, check: &'static str, depth: u32, r: sparse_ldp::Result<f64>, tolerance: f64) {
        match r {
            Ok(v) => self.push(check, depth, v, tolerance),
            Err(e) => self.0.push(Row {
                check,
                depth,
                status: Status::Fail,
                residual: f64::INFINITY,
                tolerance,
                note: e.to_string(),
            }),
        }
    }

    fn skip(&mut self, check: &'static str, depth: u32, note: &str) {
        self.0.push(Row { check, depth, status: Status::Skip, residual: 0.0, tolerance: 0.0, note: note.into() });
    }
}

/// Pair measure rebuilt child by child from the size-biased law.
fn labeling_pair_measure(rho: &TreeMeasure, h: u32) -> sparse_ldp::Result<PairMeasure> {
    let beta = rho.mean_degree();
    let mut out = PairMeasure::default();
    for (t, &w) in rho.atoms() {
        for i in 0..t.degree() {
            let (a, b) = t.split_at_child(i)?;
            out.add((a.truncate(h - 1), b.truncate(h - 1)), w / beta);
        }
    }
    Ok(out)
}

fn pair_gap(p: &PairMeasure, q: &PairMeasure) -> f64 {
    let one_way = |x: &PairMeasure, y: &PairMeasure| {
        x.atoms().iter().map(|((a, b), w)| (w - y.weight(a, b)).abs()).fold(0.0, f64::max)
    };
    one_way(p, q).max(one_way(q, p))
}

fn run_checks(chain: &[TreeMeasure], model: &ModelConfig, rows: &mut Rows) -> Result<()> {
    let top = chain.len() as u32;
    for (i, rho) in chain.iter().enumerate() {
        let h = i as u32 + 1;
        rows.push("normalization", h, (rho.total_mass() - 1.0).abs(), EXACT_TOL);
    }
    rows.push("tree_supported", top, chain[top as usize - 1].non_tree_mass(), 0.0);
    let has_edges = chain[0].mean_degree() > 0.0;
    for (i, rho) in chain.iter().enumerate() {
        let h = i as u32 + 1;
        if !has_edges {
            rows.skip("admissibility", h, "no edges");
            rows.skip("pair_measure_labeling", h, "no edges");
            continue;
        }
        rows.push_result("admissibility", h, pair_measure(rho, h).map(|p| p.asymmetry()), IDENTITY_TOL);
        let labeling = pair_measure(rho, h).and_then(|p| Ok(pair_gap(&p, &labeling_pair_measure(rho, h)?)));
        rows.push_result("pair_measure_labeling", h, labeling, EXACT_TOL);
    }
    let rho1 = &chain[0];
    let degree = match model.ensemble {
        Ensemble::Cm => DegreeRef::FixedAlpha(rho1.degree_law()),
        _ => DegreeRef::Poisson(rho1.mean_degree()),
    };
    let law = ReferenceLaw::new(degree, model.nu.clone(), model.xi.clone())?;
    for (check, aux) in [("mu_check_mass", mu_check(rho1, &law)), ("mu_hat_mass", mu_hat(rho1, &law))] {
        match aux {
            Ok(m) => rows.push(check, 1, (m.measure.total_mass() - 1.0).abs(), EXACT_TOL + m.neglected_tail),
            Err(e) => rows.push_result(check, 1, Err(e), EXACT_TOL),
        }
    }
    for h in 2..=top {
        let (rho, prev) = (&chain[h as usize - 1], &chain[h as usize - 2]);
        rows.push_result("rho_hat_mass", h, rho_hat(rho, h).map(|m| (m.total_mass() - 1.0).abs()), EXACT_TOL);
        match one_step_extension(prev, h - 1) {
            Ok(star) => {
                rows.push("one_step_mass", h, (star.total_mass() - 1.0).abs(), EXACT_TOL);
                rows.push("one_step_marginal", h, star.truncate(h - 1).max_abs_diff(prev), EXACT_TOL);
            }
            Err(e) => {
                rows.push_result("one_step_mass", h, Err(e.clone()), EXACT_TOL);
                rows.push_result("one_step_marginal", h, Err(e), EXACT_TOL);
            }
        }
    }
    match rate_forms(chain, model) {
        Ok([comp, inter, comb]) => {
            for (x, y) in comp.terms.iter().zip(&inter.terms) {
                rows.push("three_form_terms", x.h, gap(x.value, y.value), IDENTITY_TOL);
            }
            let totals = comp.partial_totals.iter().zip(&inter.partial_totals).zip(&comb.partial_totals);
            for (h, ((x, y), z)) in totals.enumerate() {
                rows.push("three_form_totals", h as u32 + 1, gap(*x, *y).max(gap(*x, *z)), IDENTITY_TOL);
            }
            if comp.partial_totals.is_empty() {
                let g = gap(comp.total, inter.total).max(gap(comp.total, comb.total));
                rows.push("three_form_totals", top, g, IDENTITY_TOL);
            }
        }
        Err(e) => {
            rows.push_result("three_form_terms", top, Err(e.clone()), IDENTITY_TOL);
            rows.push_result("three_form_totals", top, Err(e), IDENTITY_TOL);
        }
    }
    Ok(())
}

pub fn run(a: &VerifyArgs) -> Result<bool> {
    let law: LawSpec = json_arg(&a.law, "law")?;
    let model = law.model(Ensemble::from(a.ensemble))?;
    let c = load_chain(&a.input, a.depth)?;
    let top = c.chain.len() as u32;
    let run = Run::new(
        "verify",
        &Config { depth: top, input_sha256: &c.input.sha256, model: &model, mtp_trials: a.mtp_trials, seed: a.seed },
    )?;
    let mut rows = Rows::default();
    run_checks(&c.chain, &model, &mut rows)?;
    match &c.graph {
        Some(g) => {
            let r = mtp_check(&RootedGraphMeasure::uniform(g), a.mtp_trials, &mut stream(a.seed, 0));
            rows.push("mass_transport", top, r.max_violation, IDENTITY_TOL);
        }
        None => rows.skip("mass_transport", top, "needs a graph input"),
    }
    for r in &rows.0 {
        let note = if r.note.is_empty() { String::new() } else { format!(" ({})", r.note) };
        println!("{} {} h={} residual {:.3e} tol {:.0e}{note}", r.status.label(), r.check, r.depth, r.residual, r.tolerance);
    }
    let pass = rows.0.iter().all(|r| r.status != Status::Fail);
    if let Some(p) = &a.report {
        run.write_json(Some(p), &rows.0)?;
    }
    if let Some(p) = &a.csv {
        run.write_csv(p, &rows.0)?;
    }
    println!("{}", if pass { "all checks passed" } else { "some checks failed" });
    Ok(pass)
}
