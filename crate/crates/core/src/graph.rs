//! Finite simple graphs with vertex marks and per-direction edge marks.

use crate::error::{Error, Result};
use crate::tree::Mark;
use serde::{Deserialize, Serialize};

/// Neighbor entry of vertex `v`: `(u, y_(v,u), y_(u,v))`.
pub type Neighbor = (usize, Mark, Mark);

/// A finite labeled simple graph with marks `X` on vertices and `Y` on each
/// side of every edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct MarkedGraph {
    n: usize,
    /// Undirected edges `(u, v)` with `u < v`, in insertion order.
    edges: Vec<(usize, usize)>,
    vmarks: Vec<Mark>,
    adj: Vec<Vec<Neighbor>>,
}

impl MarkedGraph {
    /// Unmarked graph: every mark is 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let marked = edges.iter().map(|&(u, v)| (u, v, 0, 0)).collect();
        Self::from_marked_edges(n, vec![0; n], marked)
    }

    /// Builds a graph from `(u, v, y_(u,v), y_(v,u))` tuples.
    pub fn from_marked_edges(
        n: usize,
        vmarks: Vec<Mark>,
        edges: Vec<(usize, usize, Mark, Mark)>,
    ) -> Result<Self> {
        if vmarks.len() != n {
            return Err(Error::Invalid(format!("{} vertex marks for {n} vertices", vmarks.len())));
        }
        let mut adj: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        let mut list = Vec::with_capacity(edges.len());
        for (u, v, yu, yv) in edges {
            if u >= n || v >= n {
                return Err(Error::Invalid(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::Invalid(format!("self-loop at {u}")));
            }
            adj[u].push((v, yu, yv));
            adj[v].push((u, yv, yu));
            list.push((u.min(v), u.max(v)));
        }
        for (v, a) in adj.iter_mut().enumerate() {
            a.sort_unstable();
            if a.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Invalid(format!("multi-edge at vertex {v}")));
            }
        }
        Ok(MarkedGraph { n, edges: list, vmarks, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vmarks(&self) -> &[Mark] {
        &self.vmarks
    }

    pub fn vmark(&self, v: usize) -> Mark {
        self.vmarks[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Neighbors of `v` sorted by vertex id.
    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adj[v]
    }

    /// Mark `y_(u,v)` on the `u` side of edge `uv`, if present.
    pub fn edge_mark(&self, u: usize, v: usize) -> Option<Mark> {
        let a = &self.adj[u];
        a.binary_search_by_key(&v, |e| e.0).ok().map(|i| a[i].1)
    }

    /// Same graph with the given vertex marks and edge marks, the latter
    /// indexed like [`edges`](Self::edges) as `(y_(u,v), y_(v,u))` with `u < v`.
    pub fn with_marks(&self, vmarks: Vec<Mark>, emarks: &[(Mark, Mark)]) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .zip(emarks)
            .map(|(&(u, v), &(yu, yv))| (u, v, yu, yv))
            .collect();
        Self::from_marked_edges(self.n, vmarks, edges)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// True if the graph has no cycle.
    pub fn is_forest(&self) -> bool {
        let components = self.components().into_iter().max().map_or(0, |m| m + 1);
        self.edges.len() + components == self.n
    }

    /// Component index of every vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &(u, _, _) in &self.adj[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
    vmarks: Vec<Mark>,
    emarks: Vec<EdgeMarkJson>,
}

#[derive(Serialize, Deserialize)]
struct EdgeMarkJson {
    u: usize,
    v: usize,
    yu: Mark,
    yv: Mark,
}

impl From<MarkedGraph> for GraphJson {
    fn from(g: MarkedGraph) -> Self {
        let emarks = g
            .edges
            .iter()
            .map(|&(u, v)| EdgeMarkJson {
                u,
                v,
                yu: g.edge_mark(u, v).expect("edge present"),
                yv: g.edge_mark(v, u).expect("edge present"),
            })
            .collect();
        GraphJson {
            n: g.n,
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            vmarks: g.vmarks.clone(),
            emarks,
        }
    }
}

impl TryFrom<GraphJson> for MarkedGraph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        let mut marks = std::collections::HashMap::new();
        for e in &j.emarks {
            marks.insert((e.u, e.v), (e.yu, e.yv));
            marks.insert((e.v, e.u), (e.yv, e.yu));
        }
        let edges = j
            .edges
            .iter()
            .map(|&[u, v]| {
                let (yu, yv) = marks.get(&(u, v)).copied().unwrap_or((0, 0));
                (u, v, yu, yv)
            })
            .collect();
        MarkedGraph::from_marked_edges(j.n, j.vmarks, edges)
    }
}
