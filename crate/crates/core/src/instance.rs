//! Instance data model, solutions and feasibility checking.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::nodeset::NodeSet;

/// Travel times, deadlines and horizons are integer milliseconds.
pub type Millis = u64;

/// One evacuation scenario. Node `0` is the safe depot.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeopInstance {
    /// Number of evacuation nodes; node ids run `0..=n`.
    pub n: usize,
    /// Row-major `(n+1)²` matrix, `travel[i*(n+1)+j]`.
    pub travel: Vec<Millis>,
    pub demand: Vec<u32>,
    pub prize: Vec<u32>,
    /// Latest feasible arrival per node; nodes without a window carry `max_time`.
    pub deadline: Vec<Millis>,
    pub num_vehicles: u32,
    pub capacity: u32,
    pub max_time: Millis,
    /// Whether `travel` satisfies the triangle inequality.
    pub metric: bool,
    /// Optional `[lon, lat]` per node, used for route export only.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub coords: Option<Vec<[f64; 2]>>,
}

impl BeopInstance {
    /// Builds an instance from its parts, deriving `n` and the metric flag.
    pub fn from_parts(
        travel: Vec<Millis>,
        demand: Vec<u32>,
        prize: Vec<u32>,
        deadline: Vec<Millis>,
        num_vehicles: u32,
        capacity: u32,
        max_time: Millis,
    ) -> Self {
        let n = demand.len().saturating_sub(1);
        let mut inst = BeopInstance {
            n,
            travel,
            demand,
            prize,
            deadline,
            num_vehicles,
            capacity,
            max_time,
            metric: false,
            coords: None,
        };
        inst.metric = inst.triangle_inequality_holds();
        inst
    }

    /// Number of nodes including the depot.
    #[inline]
    pub fn size(&self) -> usize {
        self.n + 1
    }

    #[inline]
    pub fn t(&self, i: usize, j: usize) -> Millis {
        self.travel[i * (self.n + 1) + j]
    }

    pub fn total_prize(&self) -> u64 {
        self.prize.iter().skip(1).map(|&p| p as u64).sum()
    }

    /// True when some evacuation node has a deadline tighter than the horizon.
    pub fn has_time_windows(&self) -> bool {
        self.deadline
            .iter()
            .skip(1)
            .any(|&f| f < self.max_time)
    }

    pub fn triangle_inequality_holds(&self) -> bool {
        let m = self.size();
        if self.travel.len() != m * m {
            return false;
        }
        for k in 0..m {
            for i in 0..m {
                let tik = self.t(i, k);
                for j in 0..m {
                    if self.t(i, j) > tik + self.t(k, j) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Copy with every travel time multiplied by `factor` (rounded to the
    /// nearest millisecond); horizon and deadlines are untouched.
    pub fn with_travel_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for t in out.travel.iter_mut() {
            *t = libm::round(*t as f64 * factor) as Millis;
        }
        out.metric = out.triangle_inequality_holds();
        out
    }

    /// Total duration of a node sequence.
    pub fn route_time(&self, nodes: &[usize]) -> Millis {
        nodes.windows(2).map(|w| self.t(w[0], w[1])).sum()
    }
}

/// One vehicle's route: starts and ends at the depot, may revisit it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tour {
    pub vehicle: usize,
    pub nodes: Vec<usize>,
}

impl Tour {
    pub fn new(vehicle: usize, nodes: Vec<usize>) -> Self {
        Tour { vehicle, nodes }
    }

    /// A vehicle that never leaves the depot.
    pub fn idle(vehicle: usize) -> Self {
        Tour::new(vehicle, vec![0, 0])
    }

    pub fn is_well_formed(&self) -> bool {
        self.nodes.len() >= 2 && self.nodes.first() == Some(&0) && self.nodes.last() == Some(&0)
    }

    /// Non-empty depot-to-depot segments, depot ids stripped.
    pub fn subtours(&self) -> impl Iterator<Item = &[usize]> {
        self.nodes.split(|&v| v == 0).filter(|s| !s.is_empty())
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().copied().filter(|&v| v != 0)
    }

    pub fn time(&self, inst: &BeopInstance) -> Millis {
        inst.route_time(&self.nodes)
    }
}

/// A complete plan: one tour per vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub tours: Vec<Tour>,
    pub collected_prize: u64,
    pub quota: f64,
}

impl Solution {
    /// Wraps per-vehicle node sequences and computes prize and quota over
    /// the distinct visited nodes. No feasibility check is performed.
    pub fn from_routes(inst: &BeopInstance, routes: Vec<Vec<usize>>) -> Self {
        let tours: Vec<Tour> = routes
            .into_iter()
            .enumerate()
            .map(|(k, nodes)| Tour::new(k, nodes))
            .collect();
        let mut seen = NodeSet::new(inst.size());
        let mut collected = 0u64;
        for v in tours.iter().flat_map(|t| t.customers()) {
            if v < inst.size() && seen.insert(v) {
                collected += inst.prize[v] as u64;
            }
        }
        Solution {
            tours,
            collected_prize: collected,
            quota: quota_of(inst, collected),
        }
    }

    /// Every vehicle idle.
    pub fn empty(inst: &BeopInstance) -> Self {
        Solution::from_routes(
            inst,
            (0..inst.num_vehicles as usize).map(|_| vec![0, 0]).collect(),
        )
    }

    pub fn routes(&self) -> Vec<Vec<usize>> {
        self.tours.iter().map(|t| t.nodes.clone()).collect()
    }

    pub fn visited(&self, capacity: usize) -> NodeSet {
        NodeSet::from_nodes(capacity, self.tours.iter().flat_map(|t| t.customers()))
    }
}

pub(crate) fn quota_of(inst: &BeopInstance, collected: u64) -> f64 {
    let total = inst.total_prize();
    if total == 0 {
        0.0
    } else {
        collected as f64 / total as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    TimeBudget,
    Capacity,
    Deadline,
    DuplicateVisit,
    MalformedTour,
    UnservableDemand,
    /// Structural instance defects (shape, diagonal, parameters, flags).
    MalformedInstance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vehicle: Option<usize>,
    pub node: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(k) = self.vehicle {
            write!(f, " vehicle {k}")?;
        }
        if let Some(v) = self.node {
            write!(f, " node {v}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    #[inline]
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(
        &mut self,
        kind: ViolationKind,
        vehicle: Option<usize>,
        node: Option<usize>,
        detail: String,
    ) {
        self.violations.push(Violation {
            kind,
            vehicle,
            node,
            detail,
        });
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("solution is infeasible ({} violation(s))", .0.violations.len())]
    Infeasible(FeasibilityReport),
    #[error("travel times do not satisfy the triangle inequality")]
    NotMetric,
    #[error("tour demand {demand} exceeds vehicle capacity {capacity}")]
    TourOverCapacity { demand: u64, capacity: u32 },
    #[error("tour must start and end at the depot")]
    MalformedTour,
}

/// Reports every violated instance invariant.
pub fn validate_instance(inst: &BeopInstance) -> FeasibilityReport {
    use ViolationKind::*;
    let mut rep = FeasibilityReport::default();
    let m = inst.size();
    if inst.travel.len() != m * m {
        rep.push(
            MalformedInstance,
            None,
            None,
            format!("travel has {} entries, expected {}", inst.travel.len(), m * m),
        );
    }
    for (name, len) in [
        ("demand", inst.demand.len()),
        ("prize", inst.prize.len()),
        ("deadline", inst.deadline.len()),
    ] {
        if len != m {
            rep.push(
                MalformedInstance,
                None,
                None,
                format!("{name} has {len} entries, expected {m}"),
            );
        }
    }
    if !rep.is_feasible() {
        return rep;
    }
    if inst.num_vehicles == 0 {
        rep.push(MalformedInstance, None, None, "num_vehicles must be >= 1".into());
    }
    if inst.capacity == 0 {
        rep.push(MalformedInstance, None, None, "capacity must be >= 1".into());
    }
    if inst.max_time == 0 {
        rep.push(MalformedInstance, None, None, "max_time must be > 0".into());
    }
    for i in 0..m {
        if inst.t(i, i) != 0 {
            rep.push(
                MalformedInstance,
                None,
                Some(i),
                format!("travel[{i}][{i}] = {} != 0", inst.t(i, i)),
            );
        }
    }
    if inst.demand[0] != 0 || inst.prize[0] != 0 {
        rep.push(
            MalformedInstance,
            None,
            Some(0),
            "depot demand and prize must be 0".into(),
        );
    }
    if inst.deadline[0] != inst.max_time {
        rep.push(
            Deadline,
            None,
            Some(0),
            format!("depot deadline {} != max_time {}", inst.deadline[0], inst.max_time),
        );
    }
    for v in 1..m {
        let f = inst.deadline[v];
        if f == 0 || f > inst.max_time {
            rep.push(
                Deadline,
                None,
                Some(v),
                format!("deadline {f} outside (0, {}]", inst.max_time),
            );
        }
        if inst.demand[v] > inst.capacity {
            rep.push(
                UnservableDemand,
                None,
                Some(v),
                format!("demand {} > capacity {}", inst.demand[v], inst.capacity),
            );
        }
    }
    if inst.metric && !inst.triangle_inequality_holds() {
        rep.push(
            MalformedInstance,
            None,
            None,
            "metric flag set but the triangle inequality fails".into(),
        );
    }
    rep
}

/// Checks time budget, subtour capacity, deadlines and unique visits.
pub fn check_feasible(inst: &BeopInstance, sol: &Solution) -> FeasibilityReport {
    use ViolationKind::*;
    let mut rep = FeasibilityReport::default();
    let m = inst.size();
    if sol.tours.len() > inst.num_vehicles as usize {
        rep.push(
            MalformedTour,
            None,
            None,
            format!("{} tours for {} vehicles", sol.tours.len(), inst.num_vehicles),
        );
    }
    let mut seen = NodeSet::new(m);
    for (k, tour) in sol.tours.iter().enumerate() {
        if !tour.is_well_formed() {
            rep.push(
                MalformedTour,
                Some(k),
                None,
                "tour must start and end at the depot".into(),
            );
            continue;
        }
        if let Some(&bad) = tour.nodes.iter().find(|&&v| v >= m) {
            rep.push(
                MalformedTour,
                Some(k),
                Some(bad),
                format!("node id {bad} out of range"),
            );
            continue;
        }
        let mut elapsed: Millis = 0;
        let mut load: u64 = 0;
        for w in tour.nodes.windows(2) {
            let (from, to) = (w[0], w[1]);
            elapsed += inst.t(from, to);
            if to == 0 {
                if load > inst.capacity as u64 {
                    rep.push(
                        Capacity,
                        Some(k),
                        Some(from),
                        format!("subtour load {load} > capacity {}", inst.capacity),
                    );
                }
                load = 0;
                continue;
            }
            load += inst.demand[to] as u64;
            if elapsed > inst.deadline[to] {
                rep.push(
                    Deadline,
                    Some(k),
                    Some(to),
                    format!("arrival {elapsed} > deadline {}", inst.deadline[to]),
                );
            }
            if !seen.insert(to) {
                rep.push(
                    DuplicateVisit,
                    Some(k),
                    Some(to),
                    "node visited more than once".into(),
                );
            }
        }
        if elapsed > inst.max_time {
            rep.push(
                TimeBudget,
                Some(k),
                None,
                format!("tour time {elapsed} > max_time {}", inst.max_time),
            );
        }
    }
    rep
}

/// Collected prize and quota of a feasible solution, recomputed from its tours.
pub fn solution_prize(inst: &BeopInstance, sol: &Solution) -> Result<(u64, f64), InstanceError> {
    let rep = check_feasible(inst, sol);
    if !rep.is_feasible() {
        return Err(InstanceError::Infeasible(rep));
    }
    let visited = sol.visited(inst.size());
    let collected: u64 = visited.iter().map(|v| inst.prize[v] as u64).sum();
    Ok((collected, quota_of(inst, collected)))
}

/// Removes every interior depot visit, merging all subtours into one.
///
/// On a metric instance `t[i][j] <= t[i][0] + t[0][j]`, so the result is never
/// slower than the input and visits the same customers in the same order.
pub fn strip_redundant_depot_visits(inst: &BeopInstance, tour: &Tour) -> Result<Tour, InstanceError> {
    if !inst.metric {
        return Err(InstanceError::NotMetric);
    }
    if !tour.is_well_formed() {
        return Err(InstanceError::MalformedTour);
    }
    let demand: u64 = tour.customers().map(|v| inst.demand[v] as u64).sum();
    if demand > inst.capacity as u64 {
        return Err(InstanceError::TourOverCapacity {
            demand,
            capacity: inst.capacity,
        });
    }
    let mut nodes = Vec::with_capacity(tour.nodes.len());
    nodes.push(0);
    nodes.extend(tour.customers());
    nodes.push(0);
    Ok(Tour::new(tour.vehicle, nodes))
}

/// A plain orienteering instance: one vehicle, a time budget, node prizes.
#[derive(Clone, Debug, PartialEq)]
pub struct OpInstance {
    /// Row-major `(n+1)²` travel matrix, depot at index 0.
    pub travel: Vec<Millis>,
    pub prize: Vec<u32>,
    pub max_time: Millis,
}

/// Orienteering to evacuation reduction: one bus with capacity `n`, unit
/// demands, no time windows, same prizes and budget.
pub fn op_to_beop(op: &OpInstance) -> BeopInstance {
    let m = op.prize.len();
    let n = m.saturating_sub(1);
    let mut demand = vec![1u32; m];
    demand[0] = 0;
    let mut prize = op.prize.clone();
    if let Some(p0) = prize.first_mut() {
        *p0 = 0;
    }
    BeopInstance::from_parts(
        op.travel.clone(),
        demand,
        prize,
        vec![op.max_time; m],
        1,
        n.max(1) as u32,
        op.max_time,
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `travel` given as rows; demand doubles as prize; no windows.
    pub(crate) fn small(rows: &[&[Millis]], demand: &[u32], k: u32, c: u32, t: Millis) -> BeopInstance {
        let travel: Vec<Millis> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BeopInstance::from_parts(
            travel,
            demand.to_vec(),
            demand.to_vec(),
            vec![t; demand.len()],
            k,
            c,
            t,
        )
    }

    fn sol(inst: &BeopInstance, routes: &[&[usize]]) -> Solution {
        Solution::from_routes(inst, routes.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn validate_accepts_simple_instance() {
        let inst = small(&[&[0, 10], &[10, 0]], &[0, 3], 1, 5, 25);
        assert!(validate_instance(&inst).is_feasible());
    }

    #[test]
    fn validate_flags_unservable_demand() {
        let inst = small(&[&[0, 10], &[10, 0]], &[0, 60], 1, 50, 25);
        let rep = validate_instance(&inst);
        assert!(!rep.is_feasible());
        assert_eq!(rep.violations[0].kind, ViolationKind::UnservableDemand);
        assert_eq!(rep.violations[0].node, Some(1));
    }

    #[test]
    fn validate_flags_deadline_out_of_range() {
        let mut inst = small(&[&[0, 10], &[10, 0]], &[0, 3], 1, 5, 100);
        inst.deadline[1] = 120;
        let rep = validate_instance(&inst);
        assert!(rep.has(ViolationKind::Deadline));
        inst.deadline[1] = 0;
        assert!(validate_instance(&inst).has(ViolationKind::Deadline));
    }

    #[test]
    fn validate_flags_structure() {
        let mut inst = small(&[&[0, 10], &[10, 0]], &[0, 3], 1, 5, 25);
        inst.travel[0] = 1;
        inst.num_vehicles = 0;
        let rep = validate_instance(&inst);
        assert_eq!(
            rep.violations
                .iter()
                .filter(|v| v.kind == ViolationKind::MalformedInstance)
                .count(),
            2
        );
        inst.travel.pop();
        assert!(validate_instance(&inst).has(ViolationKind::MalformedInstance));
    }

    #[test]
    fn feasible_single_round_trip() {
        let inst = small(&[&[0, 10], &[10, 0]], &[0, 3], 1, 5, 25);
        assert!(check_feasible(&inst, &sol(&inst, &[&[0, 1, 0]])).is_feasible());
    }

    #[test]
    fn capacity_violation_on_single_subtour() {
        let inst = small(
            &[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]],
            &[0, 5, 5],
            1,
            5,
            100,
        );
        let rep = check_feasible(&inst, &sol(&inst, &[&[0, 1, 2, 0]]));
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].kind, ViolationKind::Capacity);
        // an intermediate drop-off resets the load
        assert!(check_feasible(&inst, &sol(&inst, &[&[0, 1, 0, 2, 0]])).is_feasible());
    }

    #[test]
    fn time_deadline_and_duplicates() {
        let mut inst = small(
            &[&[0, 10, 10], &[10, 0, 10], &[10, 10, 0]],
            &[0, 1, 1],
            2,
            5,
            30,
        );
        inst.deadline[2] = 15;
        let rep = check_feasible(&inst, &sol(&inst, &[&[0, 1, 2, 0]]));
        assert!(rep.has(ViolationKind::Deadline));
        assert!(!rep.has(ViolationKind::TimeBudget));
        let rep = check_feasible(&inst, &sol(&inst, &[&[0, 1, 0, 1, 0]]));
        assert!(rep.has(ViolationKind::TimeBudget));
        assert!(rep.has(ViolationKind::DuplicateVisit));
        let rep = check_feasible(&inst, &sol(&inst, &[&[0, 1, 0], &[0, 1, 0]]));
        assert!(rep.has(ViolationKind::DuplicateVisit));
        let rep = check_feasible(&inst, &sol(&inst, &[&[1, 0]]));
        assert!(rep.has(ViolationKind::MalformedTour));
        let rep = check_feasible(&inst, &sol(&inst, &[&[0, 0], &[0, 0], &[0, 0]]));
        assert!(rep.has(ViolationKind::MalformedTour));
    }

    #[test]
    fn arrival_exactly_at_deadline_is_valid() {
        let mut inst = small(&[&[0, 10], &[10, 0]], &[0, 1], 1, 5, 30);
        inst.deadline[1] = 10;
        assert!(check_feasible(&inst, &sol(&inst, &[&[0, 1, 0]])).is_feasible());
    }

    #[test]
    fn prize_and_quota() {
        let travel = vec![1; 16]
            .into_iter()
            .enumerate()
            .map(|(i, t)| if i % 5 == 0 { 0 } else { t })
            .collect();
        let inst = BeopInstance::from_parts(
            travel,
            vec![0, 4, 5, 7],
            vec![0, 4, 5, 7],
            vec![100; 4],
            2,
            20,
            100,
        );
        let s = sol(&inst, &[&[0, 1, 0], &[0, 2, 0]]);
        assert_eq!(solution_prize(&inst, &s).unwrap(), (9, 9.0 / 16.0));
        let s = Solution::empty(&inst);
        assert_eq!(solution_prize(&inst, &s).unwrap(), (0, 0.0));
        let s = sol(&inst, &[&[0, 1, 2, 3, 0], &[0, 0]]);
        assert_eq!(solution_prize(&inst, &s).unwrap(), (16, 1.0));
        let s = sol(&inst, &[&[0, 1, 0], &[0, 1, 0]]);
        assert!(matches!(
            solution_prize(&inst, &s),
            Err(InstanceError::Infeasible(_))
        ));
    }

    #[test]
    fn strip_depot_visits() {
        let inst = small(
            &[&[0, 3, 4], &[3, 0, 5], &[4, 5, 0]],
            &[0, 1, 1],
            1,
            2,
            100,
        );
        let t = Tour::new(0, vec![0, 1, 0, 2, 0]);
        let s = strip_redundant_depot_visits(&inst, &t).unwrap();
        assert_eq!(s.nodes, vec![0, 1, 2, 0]);
        assert!(s.time(&inst) <= t.time(&inst));
        let t = Tour::new(0, vec![0, 1, 2, 0]);
        assert_eq!(strip_redundant_depot_visits(&inst, &t).unwrap(), t);
    }

    #[test]
    fn strip_rejects_non_metric_and_small_capacity() {
        let inst = small(
            &[&[0, 1, 1], &[1, 0, 50], &[1, 50, 0]],
            &[0, 1, 1],
            1,
            2,
            100,
        );
        assert!(!inst.metric);
        let t = Tour::new(0, vec![0, 1, 0, 2, 0]);
        assert!(matches!(
            strip_redundant_depot_visits(&inst, &t),
            Err(InstanceError::NotMetric)
        ));
        let inst = small(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]], &[0, 1, 1], 1, 1, 100);
        assert!(matches!(
            strip_redundant_depot_visits(&inst, &t),
            Err(InstanceError::TourOverCapacity { .. })
        ));
    }

    #[test]
    fn op_reduction_shape() {
        let m = 6;
        let travel = (0..m * m)
            .map(|idx| if idx / m == idx % m { 0 } else { 7 })
            .collect();
        let op = OpInstance {
            travel,
            prize: vec![0, 3, 1, 4, 1, 5],
            max_time: 30,
        };
        let b = op_to_beop(&op);
        assert_eq!(b.n, 5);
        assert_eq!(b.capacity, 5);
        assert_eq!(b.num_vehicles, 1);
        assert_eq!(&b.demand[1..], &[1, 1, 1, 1, 1]);
        assert!(b.deadline.iter().all(|&f| f == 30));
        assert_eq!(b.prize, op.prize);
        assert!(b.metric);
        assert!(validate_instance(&b).is_feasible());
    }
}
