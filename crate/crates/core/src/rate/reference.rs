use super::factorial;
use crate::error::{Error, Result};
use crate::measure::DegreeLaw;
use crate::tree::{CanonicalTree, HalfEdgeTree, Mark};
use serde::{Deserialize, Serialize};

/// Root degree law of a reference tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeRef {
    FixedAlpha(DegreeLaw),
    Poisson(f64),
}

/// Reference law: a degree law with i.i.d. vertex marks `ν` and i.i.d. edge
/// mark pairs `ξ`, independent of the tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawJson", into = "LawJson")]
pub struct ReferenceLaw {
    degree: DegreeRef,
    nu: Vec<f64>,
    xi: Vec<Vec<f64>>,
    xibar: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct LawJson {
    degree: DegreeRef,
    nu: Vec<f64>,
    xi: Vec<Vec<f64>>,
}

impl TryFrom<LawJson> for ReferenceLaw {
    type Error = Error;
    fn try_from(j: LawJson) -> Result<Self> {
        ReferenceLaw::new(j.degree, j.nu, j.xi)
    }
}

impl From<ReferenceLaw> for LawJson {
    fn from(l: ReferenceLaw) -> Self {
        LawJson { degree: l.degree, nu: l.nu, xi: l.xi }
    }
}

fn check_prob(v: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut s = 0.0;
    for p in v {
        if !(p >= 0.0) {
            return Err(Error::Invalid(format!("{what} has a negative entry")));
        }
        s += p;
    }
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl ReferenceLaw {
    pub fn new(degree: DegreeRef, nu: Vec<f64>, xi: Vec<Vec<f64>>) -> Result<Self> {
        check_prob(nu.iter().copied(), "nu")?;
        let k = xi.len();
        if k == 0 || xi.iter().any(|r| r.len() != k) {
            return Err(Error::Invalid("xi must be a nonempty square matrix".into()));
        }
        check_prob(xi.iter().flatten().copied(), "xi")?;
        if let DegreeRef::Poisson(b) = degree {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Invalid(format!("Poisson mean {b}")));
            }
        }
        let xibar = (0..k).map(|a| (0..k).map(|b| 0.5 * (xi[a][b] + xi[b][a])).collect()).collect();
        Ok(ReferenceLaw { degree, nu, xi, xibar })
    }

    /// Same marks with another degree law.
    pub fn with_degree(&self, degree: DegreeRef) -> Self {
        ReferenceLaw { degree, ..self.clone() }
    }

    pub fn degree(&self) -> &DegreeRef {
        &self.degree
    }

    pub fn alpha(&self) -> Option<&DegreeLaw> {
        match &self.degree {
            DegreeRef::FixedAlpha(a) => Some(a),
            DegreeRef::Poisson(_) => None,
        }
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn xi(&self) -> &[Vec<f64>] {
        &self.xi
    }

    pub fn num_y(&self) -> usize {
        self.xi.len()
    }

    pub fn mean_degree(&self) -> f64 {
        match &self.degree {
            DegreeRef::FixedAlpha(a) => a.mean(),
            DegreeRef::Poisson(b) => *b,
        }
    }

    /// `ν(x)`, zero off the alphabet.
    pub fn nu_at(&self, x: Mark) -> f64 {
        self.nu.get(x as usize).copied().unwrap_or(0.0)
    }

    /// Symmetrized edge mark law `ξ̄(y, y′)`.
    pub fn xibar(&self, y: Mark, yp: Mark) -> f64 {
        self.xibar.get(y as usize).and_then(|r| r.get(yp as usize)).copied().unwrap_or(0.0)
    }

    /// Marginal `Σ_{y′} ξ̄(y, y′)`.
    pub fn xibar_row(&self, y: Mark) -> f64 {
        self.xibar.get(y as usize).map_or(0.0, |r| r.iter().sum())
    }

    /// Probability of root degree `d`.
    pub fn degree_prob(&self, d: usize) -> f64 {
        match &self.degree {
            DegreeRef::FixedAlpha(a) => a.prob(d),
            DegreeRef::Poisson(b) => {
                let mut p = (-b).exp();
                for k in 1..=d {
                    p *= b / k as f64;
                }
                p
            }
        }
    }

    /// Pair density `ν(x)ν(x′)ξ̄(y,y′)` at depth-0 half-edge trees.
    pub fn pair_density(&self, a: &HalfEdgeTree, b: &HalfEdgeTree) -> f64 {
        self.nu_at(a.tree.mark()) * self.nu_at(b.tree.mark()) * self.xibar(a.pendant, b.pendant)
    }

    /// Marginal `ν(x)Σ_{y′}ξ̄(y,y′)` of [`pair_density`](Self::pair_density).
    pub fn half_density(&self, a: &HalfEdgeTree) -> f64 {
        self.nu_at(a.tree.mark()) * self.xibar_row(a.pendant)
    }
}

/// Probability of a depth-≤1 tree under the depth-1 reference law; zero for deeper trees.
pub fn eta1_density(law: &ReferenceLaw, t: &CanonicalTree) -> f64 {
    if t.depth() > 1 {
        return 0.0;
    }
    let d = t.degree();
    let mut p = law.degree_prob(d) * factorial(d) * law.nu_at(t.mark());
    for (i, m) in t.child_runs() {
        let c = &t.children()[i];
        let q = law.nu_at(c.tree.mark()) * law.xibar(c.ym_child, c.ym_root);
        p *= q.powi(m as i32) / factorial(m);
    }
    p
}

/// `ℓ_κ(β) = (κ/2)((β/κ)log(β/κ) − β/κ + 1)` with `0 log 0 = 0`.
pub fn ell(kappa: f64, beta: f64) -> f64 {
    let r = beta / kappa;
    let rlogr = if r > 0.0 { r * r.ln() } else { 0.0 };
    0.5 * kappa * (rlogr - r + 1.0)
}
