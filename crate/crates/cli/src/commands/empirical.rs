use crate::output::{parse, read_input, Run};
use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use sparse_ldp::empirical::{component_measure, neighborhood_measure};
use sparse_ldp::graph::MarkedGraph;
use sparse_ldp::measure::TreeMeasure;
use std::path::PathBuf;

/// Neighborhood and component empirical measures of a graph.
#[derive(Args, Debug)]
pub struct EmpiricalArgs {
    /// Graph JSON.
    #[arg(long)]
    input: PathBuf,
    /// Largest component truncation depth.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct Config<'a> {
    depth: u32,
    input_sha256: &'a str,
}

#[derive(Serialize)]
pub struct AtomRow {
    pub encoding: String,
    pub weight: f64,
}

pub fn atom_rows(m: &TreeMeasure) -> Vec<AtomRow> {
    m.sorted_atoms()
        .into_iter()
        .map(|(t, w)| AtomRow {
            encoding: t.encoding().iter().map(u32::to_string).collect::<Vec<_>>().join("."),
            weight: w,
        })
        .collect()
}

pub fn run(a: &EmpiricalArgs) -> Result<bool> {
    if a.depth == 0 {
        bail!("depth must be at least 1");
    }
    let input = read_input(&a.input)?;
    let g: MarkedGraph = parse(&input, "graph")?;
    let run = Run::new("empirical", &Config { depth: a.depth, input_sha256: &input.sha256 })?;
    let mut outputs = vec![("neighborhood".to_string(), neighborhood_measure(&g))];
    outputs.extend((1..=a.depth).map(|h| (format!("component_h{h}"), component_measure(&g, h))));
    for (name, m) in &outputs {
        run.write_json(Some(&a.out_dir.join(format!("{name}.json"))), m)?;
        run.write_csv(&a.out_dir.join(format!("{name}.csv")), &atom_rows(m))?;
        println!("{name}: {} atoms, non_tree_mass {}", m.len(), m.non_tree_mass());
    }
    Ok(true)
}
