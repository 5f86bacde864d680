//! Exact optimization.
//!
//! [`exact_solve`] is a depth-first branch-and-bound over the sequential
//! decision process of [`crate::mdp`]; [`emit_milp_lp`] writes the
//! mixed-integer formulation with per-vehicle subtours for external solvers.

use alloc::vec::Vec;

use crate::instance::{BeopInstance, Millis, Solution};
use crate::mdp::{feasible_actions, initial_state, solution_from_actions, step, MdpState, Transition};

mod milp;

pub use milp::{emit_milp_lp, load_warm_start, warm_start_assignment, MilpError, MilpModel, MilpRow, MilpVar, Sense};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BnbLimits {
    /// Search-tree nodes to expand after the first complete dive.
    pub node_budget: u64,
    /// Wall-clock seconds.
    pub time_budget: f64,
    /// Maximum depot-to-depot segments per vehicle.
    pub subtour_cap: Option<usize>,
}

impl Default for BnbLimits {
    fn default() -> Self {
        BnbLimits {
            node_budget: u64::MAX,
            time_budget: f64::INFINITY,
            subtour_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub best: Solution,
    pub best_prize: u64,
    pub upper_bound: u64,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
}

/// Shortest-path closure of the travel matrix.
fn closure(inst: &BeopInstance) -> Vec<Millis> {
    let m = inst.size();
    let mut d = inst.travel.clone();
    for k in 0..m {
        for i in 0..m {
            let dik = d[i * m + k];
            for j in 0..m {
                let via = dik + d[k * m + j];
                if via < d[i * m + j] {
                    d[i * m + j] = via;
                }
            }
        }
    }
    d
}

struct Search<'a, F: FnMut() -> f64> {
    inst: &'a BeopInstance,
    fast: Vec<Millis>,
    limits: BnbLimits,
    clock: F,
    started: f64,
    nodes: u64,
    best: Option<u64>,
    best_path: Vec<usize>,
    path: Vec<usize>,
    aborted: bool,
    open_bound: u64,
}

impl<F: FnMut() -> f64> Search<'_, F> {
    #[inline]
    fn c(&self, i: usize, j: usize) -> Millis {
        self.fast[i * self.inst.size() + j]
    }

    /// Whether `v` could still be served by the current vehicle or a fresh
    /// one, judged on shortest-path times and ignoring all other nodes.
    fn reachable(&self, s: &MdpState, v: usize) -> bool {
        let inst = self.inst;
        if inst.demand[v] > inst.capacity {
            return false;
        }
        let (t, dl) = (inst.max_time, inst.deadline[v]);
        let arrive = s.elapsed + self.c(s.current, v);
        if arrive + self.c(v, 0) <= t && arrive <= dl {
            if s.load + inst.demand[v] <= inst.capacity {
                return true;
            }
            let via_depot = s.elapsed + self.c(s.current, 0) + self.c(0, v);
            if via_depot + self.c(v, 0) <= t && via_depot <= dl {
                return true;
            }
        }
        s.vehicles_left >= 2 && self.c(0, v) + self.c(v, 0) <= t && self.c(0, v) <= dl
    }

    fn bound(&self, s: &MdpState) -> u64 {
        s.collected
            + (1..self.inst.size())
                .filter(|&v| !s.visited.contains(v) && self.reachable(s, v))
                .map(|v| self.inst.prize[v] as u64)
                .sum::<u64>()
    }

    fn offer(&mut self, prize: u64) {
        if self.best.is_none_or(|b| prize > b) {
            self.best = Some(prize);
            self.best_path.clone_from(&self.path);
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.nodes > self.limits.node_budget {
            return true;
        }
        self.limits.time_budget.is_finite()
            && self.nodes.is_multiple_of(256)
            && (self.clock)() - self.started > self.limits.time_budget
    }

    /// `fresh`: the current vehicle has not moved yet. `prev_first`: first
    /// customer of the previous vehicle, which a fresh vehicle must exceed.
    fn dfs(&mut self, s: &MdpState, fresh: bool, prev_first: usize, own_first: usize, subtours: usize) {
        self.nodes += 1;
        if s.is_terminal() {
            self.offer(s.collected);
            return;
        }
        let bound = self.bound(s);
        if self.best.is_some_and(|b| bound <= b) {
            return;
        }
        if self.best.is_some() && self.out_of_budget() {
            self.aborted = true;
            self.open_bound = self.open_bound.max(bound);
            return;
        }
        let inst = self.inst;
        let mut actions = feasible_actions(inst, s);
        actions.sort_by_key(|&a| (a == 0, core::cmp::Reverse(inst.prize[a]), a));
        for a in actions {
            if self.aborted {
                self.open_bound = self.open_bound.max(bound);
                return;
            }
            if a == 0 && fresh {
                // this vehicle and every later one stay idle
                self.offer(s.collected);
                continue;
            }
            if a != 0 && fresh && a <= prev_first {
                continue;
            }
            if a != 0 && s.current == 0 && self.limits.subtour_cap.is_some_and(|cap| subtours >= cap) {
                continue;
            }
            let out = step(inst, s, a).expect("action drawn from the feasible set");
            self.path.push(a);
            match out.transition {
                Transition::Visit => {
                    let first = if fresh { a } else { own_first };
                    let started = subtours + (s.current == 0) as usize;
                    self.dfs(&out.next, false, prev_first, first, started);
                }
                Transition::DropOff => self.dfs(&out.next, false, prev_first, own_first, subtours),
                Transition::EndVehicle => self.dfs(&out.next, true, own_first, 0, 0),
            }
            self.path.pop();
        }
        if self.aborted {
            self.open_bound = self.open_bound.max(bound);
        }
    }
}

/// Branch-and-bound with an explicit clock returning seconds.
///
/// Customers are branched in order of decreasing prize, the depot last.
/// Vehicles are interchangeable, so vehicle `k + 1` may only start at a
/// customer with a larger id than vehicle `k`'s first customer, and an idle
/// vehicle ends the branch. Budgets are only checked once a first complete
/// plan exists.
pub fn exact_solve_with_clock(inst: &BeopInstance, limits: &BnbLimits, mut clock: impl FnMut() -> f64) -> ExactResult {
    let started = clock();
    let mut search = Search {
        inst,
        fast: closure(inst),
        limits: *limits,
        clock,
        started,
        nodes: 0,
        best: None,
        best_path: Vec::new(),
        path: Vec::new(),
        aborted: false,
        open_bound: 0,
    };
    search.dfs(&initial_state(inst), true, 0, 0, 0);
    let best_prize = search.best.unwrap_or(0);
    let (best, replayed) = solution_from_actions(inst, &search.best_path).expect("search path is feasible");
    debug_assert_eq!(replayed, best_prize);
    ExactResult {
        best,
        best_prize,
        upper_bound: if search.aborted { search.open_bound.max(best_prize) } else { best_prize },
        proven_optimal: !search.aborted,
        nodes_explored: search.nodes,
    }
}

/// Branch-and-bound timed by the system clock.
#[cfg(feature = "std")]
pub fn exact_solve(inst: &BeopInstance, limits: &BnbLimits) -> ExactResult {
    let start = std::time::Instant::now();
    exact_solve_with_clock(inst, limits, move || start.elapsed().as_secs_f64())
}
