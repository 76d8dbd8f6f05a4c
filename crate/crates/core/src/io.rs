//! JSON forms of trees and tree measures. Atoms are written in canonical
//! encoding order so that equal measures serialize identically.

use crate::error::Error;
use crate::measure::TreeMeasure;
use crate::tree::{CanonicalTree, Child, Mark};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct TreeJson {
    x: Mark,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<ChildJson>,
}

#[derive(Serialize, Deserialize)]
struct ChildJson {
    /// Mark on the child side of the edge.
    y_child: Mark,
    /// Mark on the parent side of the edge.
    y_root: Mark,
    tree: TreeJson,
}

fn to_json(t: &CanonicalTree) -> TreeJson {
    TreeJson {
        x: t.mark(),
        children: t
            .children()
            .iter()
            .map(|c| ChildJson { y_child: c.ym_child, y_root: c.ym_root, tree: to_json(&c.tree) })
            .collect(),
    }
}

fn from_json(j: TreeJson) -> CanonicalTree {
    let children = j
        .children
        .into_iter()
        .map(|c| Child::new(c.y_child, c.y_root, from_json(c.tree)))
        .collect();
    CanonicalTree::new(j.x, children)
}

impl Serialize for CanonicalTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        to_json(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CanonicalTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        TreeJson::deserialize(d).map(from_json)
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    tree: CanonicalTree,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    depth_bound: u32,
    #[serde(default)]
    non_tree_mass: f64,
    atoms: Vec<AtomJson>,
}

impl Serialize for TreeMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeasureJson {
            depth_bound: self.depth_bound(),
            non_tree_mass: self.non_tree_mass(),
            atoms: self.sorted_atoms().into_iter().map(|(t, w)| AtomJson { tree: t.clone(), weight: w }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TreeMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = MeasureJson::deserialize(d)?;
        if j.atoms.iter().any(|a| !(a.weight >= 0.0)) || !(j.non_tree_mass >= 0.0) {
            return Err(serde::de::Error::custom(Error::Invalid("negative weight".into())));
        }
        let mut m = TreeMeasure::new(j.depth_bound);
        for a in j.atoms {
            m.add(a.tree, a.weight);
        }
        m.add_non_tree(j.non_tree_mass);
        Ok(m)
    }
}
