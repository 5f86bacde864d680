use alloc::vec::Vec;

use rand::Rng;

use super::{all_pairs_shortest_times, build_instance, haversine_m, weighted_sample, Adjacency, RoadGraph, RoadnetError, SamplingParams};
use crate::instance::BeopInstance;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HazardRecord {
    /// Original graph id of the epicenter.
    pub epicenter: usize,
    pub radius_m: f64,
    /// Original graph ids of the candidates inside the zone.
    pub affected: Vec<usize>,
    /// Number of road-network nodes deleted.
    pub removed_graph_nodes: usize,
}

#[derive(Clone, Debug)]
pub struct HazardOutcome {
    /// Road network without the zone, renumbered densely.
    pub graph: RoadGraph,
    /// Surviving candidates (depot first) as ids of the pruned graph.
    pub kept: Vec<usize>,
    /// The same candidates as original graph ids.
    pub kept_original: Vec<usize>,
    pub record: HazardRecord,
}

/// Places a hazard zone on a random non-depot candidate and deletes every
/// road node within the radius that covers exactly `affected` candidates.
///
/// `candidates[0]` is the depot. Fails with [`RoadnetError::DepotInZone`],
/// [`RoadnetError::AmbiguousRadius`] or [`RoadnetError::Disconnected`] when
/// this draw cannot be used.
pub fn apply_hazard_zone<R: Rng + ?Sized>(
    graph: &RoadGraph,
    candidates: &[usize],
    affected: usize,
    rng: &mut R,
) -> Result<HazardOutcome, RoadnetError> {
    if affected == 0 || candidates.len() <= affected + 1 {
        return Err(RoadnetError::InvalidParams(alloc::format!(
            "{} candidates cannot lose {affected} and keep a depot and a point",
            candidates.len()
        )));
    }
    let epicenter = candidates[1 + rng.random_range(0..candidates.len() - 1)];
    let center = graph.coords(epicenter);
    let dist: Vec<f64> = candidates.iter().map(|&c| haversine_m(center, graph.coords(c))).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let radius = dist[order[affected - 1]];
    if dist[order[affected]] <= radius {
        return Err(RoadnetError::AmbiguousRadius);
    }
    if dist[0] <= radius {
        return Err(RoadnetError::DepotInZone);
    }
    let inside = |v: usize| haversine_m(center, graph.coords(v)) <= radius;
    let (pruned, map) = graph.retain_nodes(|v| !inside(v));
    let kept_original: Vec<usize> = candidates.iter().copied().filter(|&c| !inside(c)).collect();
    let kept: Vec<usize> = kept_original.iter().map(|&c| map[c].expect("kept node survives")).collect();

    let adj = Adjacency::new(&pruned);
    let forward = adj.reachable(kept[0], false);
    let backward = adj.reachable(kept[0], true);
    for (&new, &old) in kept.iter().zip(&kept_original) {
        if !forward[new] {
            return Err(RoadnetError::Disconnected { from: candidates[0], to: old });
        }
        if !backward[new] {
            return Err(RoadnetError::Disconnected { from: old, to: candidates[0] });
        }
    }
    let mut affected_ids: Vec<usize> = order[..affected].iter().map(|&p| candidates[p]).collect();
    affected_ids.sort_unstable();
    Ok(HazardOutcome {
        record: HazardRecord {
            epicenter,
            radius_m: radius,
            affected: affected_ids,
            removed_graph_nodes: graph.nodes.len() - pruned.nodes.len(),
        },
        graph: pruned,
        kept,
        kept_original,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HazardInstance {
    pub instance: BeopInstance,
    /// Original graph ids of the instance nodes, depot first.
    pub graph_nodes: Vec<usize>,
    pub record: HazardRecord,
    /// Draws needed, including the successful one.
    pub attempts: u32,
}

/// Draws `num_points + 1 + affected` candidates, applies a hazard zone and
/// builds an instance on the surviving points over the pruned road network.
/// The whole draw is repeated while it is unusable.
pub fn sample_hazard_instance<R: Rng + ?Sized>(
    graph: &RoadGraph,
    eligible: &[usize],
    params: &SamplingParams,
    affected: usize,
    max_attempts: u32,
    rng: &mut R,
) -> Result<HazardInstance, RoadnetError> {
    params.validate()?;
    let needed = params.num_points + 1 + affected;
    if eligible.len() < needed {
        return Err(RoadnetError::InsufficientNodes {
            needed,
            available: eligible.len(),
        });
    }
    let weights: Vec<u64> = eligible.iter().map(|&v| graph.nodes[v].frequency).collect();
    for attempt in 1..=max_attempts {
        let candidates: Vec<usize> = weighted_sample(&weights, needed, rng)
            .into_iter()
            .map(|p| eligible[p])
            .collect();
        let outcome = match apply_hazard_zone(graph, &candidates, affected, rng) {
            Ok(o) => o,
            Err(RoadnetError::DepotInZone | RoadnetError::AmbiguousRadius | RoadnetError::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        };
        let adj = Adjacency::new(&outcome.graph);
        let travel = all_pairs_shortest_times(&adj, &outcome.kept)?;
        let coords = outcome.kept.iter().map(|&v| outcome.graph.coords(v)).collect();
        let instance = build_instance(travel, Some(coords), params, rng);
        return Ok(HazardInstance {
            instance,
            graph_nodes: outcome.kept_original,
            record: outcome.record,
            attempts: attempt,
        });
    }
    Err(RoadnetError::ResampleLimitExceeded { attempts: max_attempts })
}
