use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{haversine_m, Edge, GraphNode, RoadGraph};
use crate::instance::Millis;

/// A jittered street grid, used where no real road network is at hand.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// `[lon, lat]` of the south-west corner.
    pub origin: [f64; 2],
    pub spacing_deg: f64,
    /// Nominal driving speed in meters per second.
    pub speed_mps: f64,
    /// Per-edge travel times are scaled by a uniform factor in `1 ± jitter`.
    pub jitter: f64,
    /// Frequencies are drawn from a skewed distribution on `1..=max_frequency`.
    pub max_frequency: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rows: 12,
            cols: 12,
            origin: [-122.51, 37.71],
            spacing_deg: 0.004,
            speed_mps: 9.0,
            jitter: 0.2,
            max_frequency: 50,
        }
    }
}

/// Builds a strongly connected grid network with independently jittered
/// travel times in each direction.
pub fn grid_graph<R: Rng + ?Sized>(spec: &GridSpec, rng: &mut R) -> RoadGraph {
    let id = |r: usize, c: usize| r * spec.cols + c;
    let mut nodes = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let u: f64 = rng.random();
            let skew = libm::floor((spec.max_frequency.max(1) - 1) as f64 * u * u * u) as u64;
            nodes.push(GraphNode {
                id: id(r, c),
                lon: spec.origin[0] + c as f64 * spec.spacing_deg,
                lat: spec.origin[1] + r as f64 * spec.spacing_deg,
                frequency: 1 + skew,
            });
        }
    }
    let mut edges = Vec::new();
    let mut link = |a: usize, b: usize, rng: &mut R| {
        let meters = haversine_m([nodes[a].lon, nodes[a].lat], [nodes[b].lon, nodes[b].lat]);
        for (from, to) in [(a, b), (b, a)] {
            let f = 1.0 + spec.jitter * (2.0 * rng.random::<f64>() - 1.0);
            let ms = libm::round(meters / spec.speed_mps * f * 1000.0).max(1.0) as Millis;
            edges.push(Edge { from, to, travel_time: ms });
        }
    };
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                link(id(r, c), id(r, c + 1), rng);
            }
            if r + 1 < spec.rows {
                link(id(r, c), id(r + 1, c), rng);
            }
        }
    }
    RoadGraph { nodes, edges }
}

/// Adds one to the frequency of the node nearest to each point.
pub fn count_frequencies(graph: &mut RoadGraph, points: &[[f64; 2]]) {
    if graph.nodes.is_empty() {
        return;
    }
    for &p in points {
        let nearest = graph
            .nodes
            .iter()
            .map(|n| (haversine_m(p, [n.lon, n.lat]), n.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
            .unwrap();
        graph.nodes[nearest].frequency += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Random 70/15/15 partition of node ids `0..num_nodes`.
pub fn split_nodes<R: Rng + ?Sized>(num_nodes: usize, rng: &mut R) -> NodeSplit {
    let mut ids: Vec<usize> = (0..num_nodes).collect();
    ids.shuffle(rng);
    let n_train = num_nodes * 70 / 100;
    let n_val = num_nodes * 15 / 100;
    let test = ids.split_off(n_train + n_val);
    let validation = ids.split_off(n_train);
    NodeSplit {
        train: ids,
        validation,
        test,
    }
}
