use super::empirical::atom_rows;
use crate::output::{parse, read_input, Run};
use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use sparse_ldp::measure::TreeMeasure;
use sparse_ldp::rate::one_step_extension;
use sparse_ldp::rng::stream;
use sparse_ldp::samplers::sample_ugwt;
use sparse_ldp::tree::{canonicalize, CanonicalTree};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Sample the unimodular Galton-Watson extension of a measure.
#[derive(Args, Debug)]
pub struct ExtendArgs {
    /// Tree measure JSON.
    #[arg(long)]
    input: PathBuf,
    /// Depth of the input law to extend; defaults to its depth bound.
    #[arg(long)]
    h: Option<u32>,
    /// Depth of the sampled trees.
    #[arg(long)]
    depth: u32,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Empirical law JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Atom table CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct Config<'a> {
    h: u32,
    depth: u32,
    samples: usize,
    seed: u64,
    input_sha256: &'a str,
}

#[derive(Serialize)]
struct Output {
    empirical: TreeMeasure,
    /// Total variation to the exact one-step extension, when `depth = h + 1`.
    tv_to_one_step: Option<f64>,
}

pub fn run(a: &ExtendArgs) -> Result<bool> {
    let input = read_input(&a.input)?;
    let m: TreeMeasure = parse(&input, "tree measure")?;
    let h = a.h.unwrap_or(m.depth_bound());
    if h == 0 || h > m.depth_bound() {
        bail!("h {h} is outside 1..={}", m.depth_bound());
    }
    if a.samples == 0 {
        bail!("samples must be positive");
    }
    let rho = m.truncate(h);
    let run = Run::new(
        "extend",
        &Config { h, depth: a.depth, samples: a.samples, seed: a.seed, input_sha256: &input.sha256 },
    )?;
    let mut rng = stream(a.seed, 0);
    let mut counts: BTreeMap<CanonicalTree, usize> = BTreeMap::new();
    for _ in 0..a.samples {
        *counts.entry(canonicalize(&sample_ugwt(&rho, h, a.depth, &mut rng)?)).or_default() += 1;
    }
    let empirical =
        TreeMeasure::from_atoms(a.depth, counts.into_iter().map(|(t, k)| (t, k as f64 / a.samples as f64)));
    let tv_to_one_step = if a.depth == h + 1 {
        Some(one_step_extension(&rho, h)?.tv_distance(&empirical))
    } else {
        None
    };
    if let Some(p) = &a.csv {
        run.write_csv(p, &atom_rows(&empirical))?;
    }
    let out = Output { empirical, tv_to_one_step };
    run.write_json(a.out.as_deref(), &out)?;
    if a.out.is_some() {
        println!("{} atoms from {} samples", out.empirical.len(), a.samples);
        if let Some(tv) = out.tv_to_one_step {
            println!("tv to one-step extension {tv:.4}");
        }
    }
    Ok(true)
}
