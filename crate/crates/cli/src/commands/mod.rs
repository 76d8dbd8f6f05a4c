pub mod empirical;
pub mod extend;
pub mod gibbs;
pub mod rate;
pub mod sample;
pub mod verify;

use crate::output::{parse, read_input, Input};
use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sparse_ldp::empirical::component_measure;
use sparse_ldp::graph::MarkedGraph;
use sparse_ldp::measure::{DegreeLaw, TreeMeasure};
use sparse_ldp::samplers::{Ensemble, ModelConfig};
use std::path::Path;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EnsembleArg {
    Cm,
    Fe,
    Er,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Cm => Ensemble::Cm,
            EnsembleArg::Fe => Ensemble::Fe,
            EnsembleArg::Er => Ensemble::Er,
        }
    }
}

/// Reference law file: `{"alpha": [...], "kappa": k, "nu": [...], "xi": [[...]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    #[serde(default)]
    pub alpha: Option<DegreeLaw>,
    #[serde(default)]
    pub kappa: Option<f64>,
    pub nu: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
}

impl LawSpec {
    pub fn model(&self, ensemble: Ensemble) -> Result<ModelConfig> {
        let kappa = match ensemble {
            Ensemble::Cm => {
                let a = self.alpha.as_ref().context("law for cm needs alpha")?;
                self.kappa.unwrap_or_else(|| a.mean())
            }
            _ => self.kappa.context("law for fe/er needs kappa")?,
        };
        Ok(ModelConfig {
            ensemble,
            kappa,
            alpha: self.alpha.clone(),
            m: None,
            nu: self.nu.clone(),
            xi: self.xi.clone(),
            max_attempts: 1_000_000,
        })
    }
}

/// Truncation chain `ρ_1, ..., ρ_H` read from a measure or a graph file.
pub struct Chain {
    pub chain: Vec<TreeMeasure>,
    pub graph: Option<MarkedGraph>,
    pub input: Input,
}

/// Default chain depth when none is given.
pub const DEFAULT_DEPTH: u32 = 3;

pub fn load_chain(path: &Path, depth: Option<u32>) -> Result<Chain> {
    let input = read_input(path)?;
    if input.value.get("edges").is_some() {
        let g: MarkedGraph = parse(&input, "graph")?;
        let h = depth.unwrap_or(DEFAULT_DEPTH);
        if h == 0 {
            bail!("depth must be at least 1");
        }
        let chain = (1..=h).map(|k| component_measure(&g, k)).collect();
        return Ok(Chain { chain, graph: Some(g), input });
    }
    let m: TreeMeasure = parse(&input, "tree measure")?;
    let bound = m.depth_bound();
    let h = depth.unwrap_or(bound.min(DEFAULT_DEPTH));
    if h == 0 || h > bound {
        bail!("depth {h} is outside 1..={bound} for this measure");
    }
    let chain = (1..=h).map(|k| m.truncate(k)).collect();
    Ok(Chain { chain, graph: None, input })
}
