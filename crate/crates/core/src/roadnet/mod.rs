//! Road networks and instance generation.
//!
//! A [`RoadGraph`] is a directed graph with positive per-edge travel times and
//! per-node coordinates and sampling frequencies. Instances are drawn by
//! picking a depot and `n` evacuation points with probability proportional to
//! frequency and restricting shortest travel times to them.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::instance::Millis;

mod hazard;
mod sampling;
mod stochastic;
mod synth;

pub use hazard::{apply_hazard_zone, sample_hazard_instance, HazardInstance, HazardOutcome, HazardRecord};
pub use sampling::{build_instance, draw_deadlines, sample_instance, weighted_sample, SampledInstance, SamplingParams};
pub use stochastic::{sample_stochastic_realization, NoiseParams, Realization, DEFAULT_REL_SIGMA};
pub use synth::{count_frequencies, grid_graph, split_nodes, GridSpec, NodeSplit};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraphNode {
    pub id: usize,
    pub lon: f64,
    pub lat: f64,
    pub frequency: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub travel_time: Millis,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RoadnetError {
    #[error("no path from graph node {from} to graph node {to}")]
    Disconnected { from: usize, to: usize },
    #[error("need {needed} eligible nodes but only {available} are available")]
    InsufficientNodes { needed: usize, available: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid sampling parameters: {0}")]
    InvalidParams(String),
    #[error("the depot lies inside the hazard zone")]
    DepotInZone,
    #[error("hazard radius is ambiguous: several candidates share the boundary distance")]
    AmbiguousRadius,
    #[error("gave up after {attempts} hazard draws")]
    ResampleLimitExceeded { attempts: u32 },
}

impl RoadGraph {
    /// Checks dense ids, positive frequencies, positive edge times and edge endpoints.
    pub fn validate(&self) -> Result<(), RoadnetError> {
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(RoadnetError::InvalidGraph(alloc::format!(
                    "node at position {i} has id {}",
                    node.id
                )));
            }
            if node.frequency == 0 {
                return Err(RoadnetError::InvalidGraph(alloc::format!("node {i} has frequency 0")));
            }
        }
        for e in &self.edges {
            if e.from >= self.nodes.len() || e.to >= self.nodes.len() {
                return Err(RoadnetError::InvalidGraph(alloc::format!(
                    "edge {} -> {} references a missing node",
                    e.from,
                    e.to
                )));
            }
            if e.travel_time == 0 {
                return Err(RoadnetError::InvalidGraph(alloc::format!(
                    "edge {} -> {} has zero travel time",
                    e.from,
                    e.to
                )));
            }
        }
        Ok(())
    }

    pub fn coords(&self, id: usize) -> [f64; 2] {
        [self.nodes[id].lon, self.nodes[id].lat]
    }

    /// Keeps the nodes for which `keep` holds, renumbering them densely.
    /// Returns the pruned graph and the old-to-new id map.
    pub fn retain_nodes(&self, keep: impl Fn(usize) -> bool) -> (RoadGraph, Vec<Option<usize>>) {
        let mut map = vec![None; self.nodes.len()];
        let mut nodes = Vec::new();
        for node in &self.nodes {
            if keep(node.id) {
                map[node.id] = Some(nodes.len());
                nodes.push(GraphNode { id: nodes.len(), ..node.clone() });
            }
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                Some(Edge {
                    from: map[e.from]?,
                    to: map[e.to]?,
                    travel_time: e.travel_time,
                })
            })
            .collect();
        (RoadGraph { nodes, edges }, map)
    }
}

/// Compressed forward and reverse adjacency.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<(usize, Millis)>,
    rev_offsets: Vec<usize>,
    rev_targets: Vec<(usize, Millis)>,
}

fn csr(n: usize, edges: impl Iterator<Item = (usize, usize, Millis)> + Clone) -> (Vec<usize>, Vec<(usize, Millis)>) {
    let mut offsets = vec![0usize; n + 1];
    for (from, _, _) in edges.clone() {
        offsets[from + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![(0, 0); offsets[n]];
    for (from, to, t) in edges {
        targets[fill[from]] = (to, t);
        fill[from] += 1;
    }
    (offsets, targets)
}

impl Adjacency {
    pub fn new(graph: &RoadGraph) -> Self {
        let n = graph.nodes.len();
        let (offsets, targets) = csr(n, graph.edges.iter().map(|e| (e.from, e.to, e.travel_time)));
        let (rev_offsets, rev_targets) = csr(n, graph.edges.iter().map(|e| (e.to, e.from, e.travel_time)));
        Adjacency {
            offsets,
            targets,
            rev_offsets,
            rev_targets,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn out_edges(&self, v: usize) -> &[(usize, Millis)] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn in_edges(&self, v: usize) -> &[(usize, Millis)] {
        &self.rev_targets[self.rev_offsets[v]..self.rev_offsets[v + 1]]
    }

    /// Nodes reachable from `source` following edges forward (or backward).
    pub fn reachable(&self, source: usize, backward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.num_nodes()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(v) = stack.pop() {
            let next = if backward { self.in_edges(v) } else { self.out_edges(v) };
            for &(w, _) in next {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Single-source shortest travel times; `None` marks unreachable nodes.
pub fn dijkstra(adj: &Adjacency, source: usize) -> Vec<Option<Millis>> {
    let mut dist: Vec<Option<Millis>> = vec![None; adj.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0);
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].is_some_and(|best| d > best) {
            continue;
        }
        for &(w, t) in adj.out_edges(v) {
            let nd = d + t;
            if dist[w].is_none_or(|best| nd < best) {
                dist[w] = Some(nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
    dist
}

/// Row of shortest times from `source` to each of `targets`.
pub fn shortest_times_row(adj: &Adjacency, source: usize, targets: &[usize]) -> Result<Vec<Millis>, RoadnetError> {
    let dist = dijkstra(adj, source);
    targets
        .iter()
        .map(|&to| dist[to].ok_or(RoadnetError::Disconnected { from: source, to }))
        .collect()
}

/// Row-major `|subset|²` matrix of shortest directed travel times between
/// the given graph nodes.
pub fn all_pairs_shortest_times(adj: &Adjacency, subset: &[usize]) -> Result<Vec<Millis>, RoadnetError> {
    let mut out = Vec::with_capacity(subset.len() * subset.len());
    for &src in subset {
        out.extend(shortest_times_row(adj, src, subset)?);
    }
    Ok(out)
}

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Great-circle distance in meters between two `[lon, lat]` points in degrees.
pub fn haversine_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let s_lat = libm::sin((lat2 - lat1) / 2.0);
    let s_lon = libm::sin((lon2 - lon1) / 2.0);
    let h = s_lat * s_lat + libm::cos(lat1) * libm::cos(lat2) * s_lon * s_lon;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h.min(1.0)))
}
