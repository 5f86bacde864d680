//! Instance generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use beop_core::instance::OpInstance;
use beop_core::mdp::{feasible_actions, initial_state, step, MdpState};
use beop_core::{BeopInstance, Millis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Floyd–Warshall over an optional-weight matrix (`None` = no arc).
pub fn floyd_warshall(m: usize, arcs: &[Option<Millis>]) -> Vec<Option<Millis>> {
    let mut d = arcs.to_vec();
    for i in 0..m {
        d[i * m + i] = Some(0);
    }
    for k in 0..m {
        for i in 0..m {
            let Some(ik) = d[i * m + k] else { continue };
            for j in 0..m {
                if let Some(kj) = d[k * m + j] {
                    let via = ik + kj;
                    if d[i * m + j].is_none_or(|cur| via < cur) {
                        d[i * m + j] = Some(via);
                    }
                }
            }
        }
    }
    d
}

/// Random asymmetric travel matrix over `m` nodes. Metric matrices are the
/// shortest-path closure of perturbed planar distances; non-metric ones are
/// independent uniform draws.
pub fn random_travel(rng: &mut impl Rng, m: usize, metric: bool) -> Vec<Millis> {
    if !metric {
        return (0..m * m)
            .map(|k| if k / m == k % m { 0 } else { rng.random_range(5..=60) })
            .collect();
    }
    let pts: Vec<(f64, f64)> = (0..m).map(|_| (rng.random_range(0.0..40.0), rng.random_range(0.0..40.0))).collect();
    let arcs: Vec<Option<Millis>> = (0..m * m)
        .map(|k| {
            let (i, j) = (k / m, k % m);
            let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            let skew = rng.random_range(1.0..1.3);
            Some((dx.hypot(dy) * skew).ceil().max(1.0) as Millis)
        })
        .collect();
    floyd_warshall(m, &arcs).into_iter().map(Option::unwrap).collect()
}

/// Small instance: `n` customers, demand = prize in 1..=5, a capacity that
/// usually forces at least one drop-off, a horizon that leaves some nodes out
/// of reach, and a deadline on each customer with probability `tw_prob`.
pub fn random_instance(rng: &mut impl Rng, n: usize, k: u32, metric: bool, tw_prob: f64) -> BeopInstance {
    let m = n + 1;
    let travel = random_travel(rng, m, metric);
    let mut demand = vec![0u32; m];
    for d in demand.iter_mut().skip(1) {
        *d = rng.random_range(1..=5);
    }
    let round_trip = (1..m).map(|v| travel[v] + travel[v * m]).max().unwrap_or(1);
    let t: Millis = (round_trip as f64 * rng.random_range(0.8..1.8)).ceil() as Millis;
    let mut deadline = vec![t; m];
    for f in deadline.iter_mut().skip(1) {
        if rng.random_bool(tw_prob) {
            *f = rng.random_range((t as f64 * 0.3).ceil() as Millis..=(t as f64 * 0.8).floor() as Millis);
        }
    }
    let capacity = rng.random_range(5..=10);
    BeopInstance::from_parts(travel, demand.clone(), demand, deadline, k, capacity, t)
}

/// Optimum by enumerating every plan straight from the problem definition:
/// each vehicle leaves the depot at time 0, visits customers in any order with
/// any number of depot returns, keeps every segment within capacity, reaches
/// each customer by its deadline and is home by `T`.
pub fn definition_optimum(inst: &BeopInstance) -> u64 {
    use std::collections::HashMap;
    struct Enum<'a> {
        inst: &'a BeopInstance,
        /// Best prize the vehicles `k..` can add given the visited set.
        memo: HashMap<(u32, u64), u64>,
    }
    impl Enum<'_> {
        fn vehicles_from(&mut self, k: u32, visited: u64) -> u64 {
            if k == self.inst.num_vehicles {
                return 0;
            }
            if let Some(&v) = self.memo.get(&(k, visited)) {
                return v;
            }
            let best = self.walk(k, visited, 0, 0, 0).expect("an idle vehicle is always feasible");
            self.memo.insert((k, visited), best);
            best
        }

        /// Best prize added from this point of vehicle `k`'s route onwards,
        /// `None` when the vehicle can no longer get home in time.
        fn walk(&mut self, k: u32, visited: u64, at: usize, time: Millis, load: u32) -> Option<u64> {
            let inst = self.inst;
            let mut best = None;
            let home = time + inst.t(at, 0);
            if home <= inst.max_time {
                // finish this vehicle, or unload and keep going
                best = Some(self.vehicles_from(k + 1, visited));
                if at != 0 {
                    best = best.max(self.walk(k, visited, 0, home, 0));
                }
            }
            for v in 1..inst.size() {
                if visited & (1 << v) != 0 {
                    continue;
                }
                let arrive = time + inst.t(at, v);
                if arrive > inst.max_time || arrive > inst.deadline[v] || load + inst.demand[v] > inst.capacity {
                    continue;
                }
                let rest = self.walk(k, visited | (1 << v), v, arrive, load + inst.demand[v]);
                best = best.max(rest.map(|r| inst.prize[v] as u64 + r));
            }
            best
        }
    }
    assert!(inst.size() <= 64);
    Enum { inst, memo: HashMap::new() }.vehicles_from(0, 0)
}

/// Optimum of the decision process by visiting every reachable state
/// sequence without any bounding.
pub fn mdp_optimum(inst: &BeopInstance) -> u64 {
    fn go(inst: &BeopInstance, s: &MdpState) -> u64 {
        if s.is_terminal() {
            return s.collected;
        }
        feasible_actions(inst, s)
            .into_iter()
            .map(|a| go(inst, &step(inst, s, a).unwrap().next))
            .max()
            .unwrap()
    }
    go(inst, &initial_state(inst))
}

/// Best prize of a single tour `0 → … → 0` with duration at most the budget.
pub fn op_brute_force(op: &OpInstance) -> u64 {
    let m = op.prize.len();
    fn go(op: &OpInstance, m: usize, at: usize, time: Millis, used: &mut [bool], prize: u64) -> u64 {
        let mut best = if time + op.travel[at * m] <= op.max_time { prize } else { 0 };
        for v in 1..m {
            if used[v] {
                continue;
            }
            let arrive = time + op.travel[at * m + v];
            if arrive > op.max_time {
                continue;
            }
            used[v] = true;
            best = best.max(go(op, m, v, arrive, used, prize + op.prize[v] as u64));
            used[v] = false;
        }
        best
    }
    go(op, m, 0, 0, &mut vec![false; m], 0)
}

/// Random metric orienteering instance with a budget that covers part of the nodes.
pub fn random_op(rng: &mut impl Rng, n: usize) -> OpInstance {
    let m = n + 1;
    let travel = random_travel(rng, m, true);
    let mut prize = vec![0u32; m];
    for p in prize.iter_mut().skip(1) {
        *p = rng.random_range(1..=9);
    }
    let round_trip = (1..m).map(|v| travel[v] + travel[v * m]).max().unwrap_or(1);
    let max_time = (round_trip as f64 * rng.random_range(1.0..2.0)).ceil() as Millis;
    OpInstance { travel, prize, max_time }
}

/// Random reachable state: a uniform-random walk through the process,
/// stopped after a random number of steps.
pub fn random_state(inst: &BeopInstance, rng: &mut impl Rng) -> MdpState {
    let mut s = initial_state(inst);
    let stop = rng.random_range(0..2 * inst.size());
    for _ in 0..stop {
        let actions = feasible_actions(inst, &s);
        if actions.is_empty() {
            break;
        }
        let next = step(inst, &s, actions[rng.random_range(0..actions.len())]).unwrap().next;
        if next.is_terminal() {
            break;
        }
        s = next;
    }
    s
}

/// [`random_instance`] with a fleet of `1..=max_k` vehicles and a fair coin
/// deciding whether the travel matrix is metric.
pub fn random_mixed(rng: &mut impl Rng, n: usize, max_k: u32, tw_prob: f64) -> BeopInstance {
    let k = rng.random_range(1..=max_k);
    let metric = rng.random_bool(0.5);
    random_instance(rng, n, k, metric, tw_prob)
}
