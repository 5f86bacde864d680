use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{all_pairs_shortest_times, Adjacency, RoadGraph, RoadnetError};
use crate::instance::{BeopInstance, Millis};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingParams {
    /// Evacuation points per instance, depot excluded.
    pub num_points: usize,
    pub num_vehicles: u32,
    pub capacity: u32,
    pub max_time: Millis,
    /// Upper bound on the share of points that get a deadline.
    pub tw_fraction: f64,
    /// Inclusive demand interval.
    pub demand_range: (u32, u32),
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), RoadnetError> {
        let bad = |msg: &str| Err(RoadnetError::InvalidParams(msg.into()));
        if self.num_vehicles == 0 || self.capacity == 0 || self.max_time == 0 {
            return bad("vehicles, capacity and max time must be positive");
        }
        if !(0.0..=1.0).contains(&self.tw_fraction) {
            return bad("tw_fraction must lie in [0, 1]");
        }
        let (lo, hi) = self.demand_range;
        if lo == 0 || lo > hi || hi > self.capacity {
            return bad("demand range must satisfy 1 <= lo <= hi <= capacity");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledInstance {
    pub instance: BeopInstance,
    /// Graph node id of each instance node, depot first.
    pub graph_nodes: Vec<usize>,
}

/// Draws `count` distinct positions with probability proportional to
/// `weights`, one at a time without replacement.
pub fn weighted_sample<R: Rng + ?Sized>(weights: &[u64], count: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<u64> = weights.to_vec();
    let mut total: u64 = remaining.iter().sum();
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count && total > 0 {
        let mut target = rng.random_range(0..total);
        let pos = remaining
            .iter()
            .position(|&w| {
                if target < w {
                    true
                } else {
                    target -= w;
                    false
                }
            })
            .expect("target lies below the total weight");
        total -= remaining[pos];
        remaining[pos] = 0;
        picked.push(pos);
    }
    picked
}

/// Fills demands, prizes and deadlines around a given travel matrix.
///
/// Demands are iid uniform over `params.demand_range` with prize equal to
/// demand. Deadlines follow [`draw_deadlines`].
pub fn build_instance<R: Rng + ?Sized>(
    travel: Vec<Millis>,
    coords: Option<Vec<[f64; 2]>>,
    params: &SamplingParams,
    rng: &mut R,
) -> BeopInstance {
    let m = libm::sqrt(travel.len() as f64) as usize;
    let n = m - 1;
    let t = params.max_time;
    let (lo, hi) = params.demand_range;
    let mut demand = alloc::vec![0u32; m];
    for d in demand.iter_mut().skip(1) {
        *d = rng.random_range(lo..=hi);
    }
    let deadline = draw_deadlines(n, t, params.tw_fraction, rng);
    let mut inst = BeopInstance::from_parts(
        travel,
        demand.clone(),
        demand,
        deadline,
        params.num_vehicles,
        params.capacity,
        t,
    );
    inst.coords = coords;
    inst
}

/// Deadlines for a depot and `n` points under horizon `t`: a share
/// `u · tw_fraction` of the points (rounded down) gets a deadline uniform in
/// `[0.3 t, 0.8 t]`, every other node keeps `t`.
pub fn draw_deadlines<R: Rng + ?Sized>(n: usize, t: Millis, tw_fraction: f64, rng: &mut R) -> Vec<Millis> {
    let mut deadline = alloc::vec![t; n + 1];
    let u: f64 = rng.random();
    let windows = libm::floor(u * tw_fraction * n as f64) as usize;
    if windows > 0 {
        let lo_t = (libm::ceil(0.3 * t as f64) as Millis).max(1);
        let hi_t = (libm::floor(0.8 * t as f64) as Millis).max(lo_t);
        for pos in index::sample(rng, n, windows.min(n)) {
            deadline[pos + 1] = rng.random_range(lo_t..=hi_t);
        }
    }
    deadline
}

/// Samples a depot and `params.num_points` evacuation points from `eligible`
/// graph nodes (frequency-weighted, without replacement) and builds an
/// instance over their shortest travel times.
pub fn sample_instance<R: Rng + ?Sized>(
    graph: &RoadGraph,
    adj: &Adjacency,
    eligible: &[usize],
    params: &SamplingParams,
    rng: &mut R,
) -> Result<SampledInstance, RoadnetError> {
    params.validate()?;
    let needed = params.num_points + 1;
    if eligible.len() < needed {
        return Err(RoadnetError::InsufficientNodes {
            needed,
            available: eligible.len(),
        });
    }
    let weights: Vec<u64> = eligible.iter().map(|&v| graph.nodes[v].frequency).collect();
    let graph_nodes: Vec<usize> = weighted_sample(&weights, needed, rng)
        .into_iter()
        .map(|pos| eligible[pos])
        .collect();
    let travel = all_pairs_shortest_times(adj, &graph_nodes)?;
    let coords = graph_nodes.iter().map(|&v| graph.coords(v)).collect();
    let instance = build_instance(travel, Some(coords), params, rng);
    Ok(SampledInstance { instance, graph_nodes })
}

#[cfg(test)]
mod tests {
    use super::super::{grid_graph, GridSpec};
    use super::*;
    use crate::instance::validate_instance;
    use crate::rng::stream;

    fn params(tw: f64) -> SamplingParams {
        SamplingParams {
            num_points: 10,
            num_vehicles: 2,
            capacity: 10,
            max_time: 3_600_000,
            tw_fraction: tw,
            demand_range: (1, 5),
        }
    }

    #[test]
    fn sampled_instances_are_valid_and_reproducible() {
        let g = grid_graph(&GridSpec::default(), &mut stream(1, &[]));
        let adj = Adjacency::new(&g);
        let all: Vec<usize> = (0..g.nodes.len()).collect();
        let a = sample_instance(&g, &adj, &all, &params(0.3), &mut stream(5, &[])).unwrap();
        let b = sample_instance(&g, &adj, &all, &params(0.3), &mut stream(5, &[])).unwrap();
        assert_eq!(a, b);
        assert!(validate_instance(&a.instance).is_feasible());
        assert!(a.instance.metric);
        let mut seen = a.graph_nodes.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 11);
    }

    #[test]
    fn no_windows_when_fraction_zero() {
        let g = grid_graph(&GridSpec::default(), &mut stream(1, &[]));
        let adj = Adjacency::new(&g);
        let all: Vec<usize> = (0..g.nodes.len()).collect();
        for s in 0..20 {
            let inst = sample_instance(&g, &adj, &all, &params(0.0), &mut stream(s, &[])).unwrap().instance;
            assert!(inst.deadline.iter().all(|&d| d == inst.max_time));
        }
    }

    #[test]
    fn insufficient_nodes() {
        let g = grid_graph(&GridSpec::default(), &mut stream(1, &[]));
        let adj = Adjacency::new(&g);
        let err = sample_instance(&g, &adj, &[0, 1, 2], &params(0.0), &mut stream(0, &[])).unwrap_err();
        assert_eq!(err, RoadnetError::InsufficientNodes { needed: 11, available: 3 });
    }

    #[test]
    fn rejects_demand_above_capacity() {
        let mut p = params(0.0);
        p.demand_range = (1, 11);
        assert!(p.validate().is_err());
    }

    #[test]
    fn weighted_sample_skips_zero_weights() {
        let picks = weighted_sample(&[0, 3, 0, 1], 4, &mut stream(0, &[]));
        let mut sorted = picks.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 3]);
    }
}
