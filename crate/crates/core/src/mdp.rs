//! Sequential decision process over vehicle plans.
//!
//! Vehicles are planned one after another. A state is
//! `(visited, current, load, elapsed, vehicles_left)`; an action is either a
//! customer node or the depot `0`. Returning to the depot either drops off
//! passengers and continues the same vehicle (some unvisited node is still
//! reachable afterwards) or finishes the vehicle. Choosing the depot while
//! already standing at it finishes the vehicle.
//!
//! The stochastic variant masks with expected travel times but advances the
//! clock with realized ones; it supports a single vehicle only.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::instance::{BeopInstance, Millis, Solution};
use crate::nodeset::NodeSet;
use crate::roadnet::Realization;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MdpState {
    pub visited: NodeSet,
    pub current: usize,
    pub load: u32,
    /// Time spent by the current vehicle.
    pub elapsed: Millis,
    /// Vehicles whose plan is not finished yet, including the current one.
    pub vehicles_left: u32,
    /// Prize collected so far. In the deterministic process this equals the
    /// prize of `visited`; stochastically it only counts served nodes.
    pub collected: u64,
}

impl MdpState {
    pub fn is_terminal(&self) -> bool {
        self.vehicles_left == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    /// Move to an unvisited customer.
    Visit,
    /// Return to the depot and finish the current vehicle.
    EndVehicle,
    /// Return to the depot, unload and continue with the same vehicle.
    DropOff,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next: MdpState,
    pub transition: Transition,
    pub terminal: bool,
    /// Stochastic only: the horizon was exceeded.
    pub invalid: bool,
    /// Defined at terminal states only; zero for invalid ones.
    pub reward: Option<u64>,
    pub deadline_missed: bool,
    pub demand_dropped: bool,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MdpError {
    #[error("action {action} is not feasible in the current state")]
    IllegalAction { action: usize },
    #[error("the stochastic process supports a single vehicle only")]
    RequiresSingleVehicle,
}

pub fn initial_state(inst: &BeopInstance) -> MdpState {
    MdpState {
        visited: NodeSet::new(inst.size()),
        current: 0,
        load: 0,
        elapsed: 0,
        vehicles_left: inst.num_vehicles,
        collected: 0,
    }
}

/// Whether customer `v` can be visited next and the vehicle still get home in time.
#[inline]
pub fn node_feasible(inst: &BeopInstance, state: &MdpState, v: usize) -> bool {
    if v == 0 || state.visited.contains(v) {
        return false;
    }
    let arrive = state.elapsed + inst.t(state.current, v);
    state.load as u64 + inst.demand[v] as u64 <= inst.capacity as u64
        && arrive + inst.t(v, 0) <= inst.max_time
        && arrive <= inst.deadline[v]
}

/// Feasible actions in ascending id order; the depot comes first and is
/// present whenever the state is not terminal.
pub fn feasible_actions(inst: &BeopInstance, state: &MdpState) -> Vec<usize> {
    if state.is_terminal() {
        return Vec::new();
    }
    let mut out = vec![0];
    out.extend((1..inst.size()).filter(|&v| node_feasible(inst, state, v)));
    out
}

/// Feasible actions with travel legs inflated by `1 + margin`. With a zero
/// margin this is exactly [`feasible_actions`].
pub fn guarded_actions(inst: &BeopInstance, state: &MdpState, margin: f64) -> Vec<usize> {
    if margin == 0.0 {
        return feasible_actions(inst, state);
    }
    if state.is_terminal() {
        return Vec::new();
    }
    let inflate = |t: Millis| libm::ceil(t as f64 * (1.0 + margin)) as Millis;
    let mut out = vec![0];
    out.extend((1..inst.size()).filter(|&v| {
        if !node_feasible(inst, state, v) {
            return false;
        }
        let arrive = state.elapsed + inflate(inst.t(state.current, v));
        arrive + inflate(inst.t(v, 0)) <= inst.max_time && arrive <= inst.deadline[v]
    }));
    out
}

/// True if, after returning to the depot with `elapsed_at_depot` on the clock,
/// some unvisited node could still be served and the vehicle get back in time.
fn reachable_after_return(inst: &BeopInstance, visited: &NodeSet, elapsed_at_depot: Millis) -> bool {
    (1..inst.size()).any(|v| {
        if visited.contains(v) || inst.demand[v] > inst.capacity {
            return false;
        }
        let arrive = elapsed_at_depot + inst.t(0, v);
        arrive + inst.t(v, 0) <= inst.max_time && arrive <= inst.deadline[v]
    })
}

fn finish_vehicle(inst: &BeopInstance, state: &MdpState) -> (MdpState, bool) {
    let vehicles_left = state.vehicles_left - 1;
    let terminal = vehicles_left == 0 || state.visited.len() == inst.n;
    let next = MdpState {
        visited: state.visited.clone(),
        current: 0,
        load: 0,
        elapsed: 0,
        vehicles_left: if terminal { 0 } else { vehicles_left },
        collected: state.collected,
    };
    (next, terminal)
}

/// Deterministic transition.
pub fn step(inst: &BeopInstance, state: &MdpState, action: usize) -> Result<StepOutcome, MdpError> {
    if state.is_terminal() || (action != 0 && !node_feasible(inst, state, action)) {
        return Err(MdpError::IllegalAction { action });
    }
    if action != 0 {
        let mut next = state.clone();
        next.visited.insert(action);
        next.current = action;
        next.load += inst.demand[action];
        next.elapsed += inst.t(state.current, action);
        next.collected += inst.prize[action] as u64;
        return Ok(StepOutcome {
            next,
            transition: Transition::Visit,
            terminal: false,
            invalid: false,
            reward: None,
            deadline_missed: false,
            demand_dropped: false,
        });
    }
    let at_depot = state.elapsed + inst.t(state.current, 0);
    let continue_vehicle =
        state.current != 0 && reachable_after_return(inst, &state.visited, at_depot);
    if continue_vehicle {
        let next = MdpState {
            current: 0,
            load: 0,
            elapsed: at_depot,
            ..state.clone()
        };
        return Ok(StepOutcome {
            next,
            transition: Transition::DropOff,
            terminal: false,
            invalid: false,
            reward: None,
            deadline_missed: false,
            demand_dropped: false,
        });
    }
    let (next, terminal) = finish_vehicle(inst, state);
    let reward = terminal.then_some(next.collected);
    Ok(StepOutcome {
        next,
        transition: Transition::EndVehicle,
        terminal,
        invalid: false,
        reward,
        deadline_missed: false,
        demand_dropped: false,
    })
}

/// Stochastic transition: masking uses `inst.travel`, the clock advances with
/// `real.realized_travel`. Late or emptied nodes are marked visited but add
/// neither load nor prize. Any depot arrival past the horizon ends the episode
/// as invalid with reward zero.
pub fn step_stochastic(
    inst: &BeopInstance,
    real: &Realization,
    state: &MdpState,
    action: usize,
) -> Result<StepOutcome, MdpError> {
    if inst.num_vehicles != 1 {
        return Err(MdpError::RequiresSingleVehicle);
    }
    if state.is_terminal() || (action != 0 && !node_feasible(inst, state, action)) {
        return Err(MdpError::IllegalAction { action });
    }
    let m = inst.size();
    let realized = |i: usize, j: usize| real.realized_travel[i * m + j];
    if action != 0 {
        let mut next = state.clone();
        next.visited.insert(action);
        next.current = action;
        next.elapsed += realized(state.current, action);
        let deadline_missed = next.elapsed > inst.deadline[action];
        let demand_dropped = real.realized_demand[action] == 0;
        if !deadline_missed && !demand_dropped {
            next.load += real.realized_demand[action];
            next.collected += inst.prize[action] as u64;
        }
        return Ok(StepOutcome {
            next,
            transition: Transition::Visit,
            terminal: false,
            invalid: false,
            reward: None,
            deadline_missed,
            demand_dropped,
        });
    }
    let at_depot = state.elapsed + realized(state.current, 0);
    if at_depot > inst.max_time {
        let next = MdpState {
            current: 0,
            load: 0,
            elapsed: at_depot,
            vehicles_left: 0,
            ..state.clone()
        };
        return Ok(StepOutcome {
            next,
            transition: Transition::EndVehicle,
            terminal: true,
            invalid: true,
            reward: Some(0),
            deadline_missed: false,
            demand_dropped: false,
        });
    }
    let continue_vehicle =
        state.current != 0 && reachable_after_return(inst, &state.visited, at_depot);
    if continue_vehicle {
        let next = MdpState {
            current: 0,
            load: 0,
            elapsed: at_depot,
            ..state.clone()
        };
        return Ok(StepOutcome {
            next,
            transition: Transition::DropOff,
            terminal: false,
            invalid: false,
            reward: None,
            deadline_missed: false,
            demand_dropped: false,
        });
    }
    let (next, terminal) = finish_vehicle(inst, state);
    Ok(StepOutcome {
        reward: terminal.then_some(next.collected),
        next,
        transition: Transition::EndVehicle,
        terminal,
        invalid: false,
        deadline_missed: false,
        demand_dropped: false,
    })
}

/// A stochastic decision rule over the feasible actions of a state.
pub trait Policy {
    /// Probabilities aligned with `actions` (ascending ids, never empty).
    fn probabilities(&self, inst: &BeopInstance, state: &MdpState, actions: &[usize]) -> Vec<f64>;
}

/// Picks uniformly among feasible actions.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn probabilities(&self, _: &BeopInstance, _: &MdpState, actions: &[usize]) -> Vec<f64> {
        vec![1.0 / actions.len() as f64; actions.len()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decode {
    /// Draw from the policy distribution.
    Sample,
    /// Take the most probable action, lowest id on ties.
    Greedy,
}

/// Index of the chosen action within `probs`.
pub fn choose<R: Rng + ?Sized>(probs: &[f64], decode: Decode, rng: &mut R) -> usize {
    match decode {
        Decode::Greedy => {
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        }
        Decode::Sample => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut last_positive = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                acc += p;
                last_positive = i;
                if u < acc {
                    return i;
                }
            }
            last_positive
        }
    }
}

/// One decision taken during a rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub before: MdpState,
    /// Action set the decision was made over.
    pub actions: Vec<usize>,
    pub action: usize,
    pub transition: Transition,
    pub elapsed_after: Millis,
    /// The action was imposed (multi-start) rather than drawn from the policy.
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub solution: Solution,
    pub reward: u64,
    /// Sum of log-probabilities of the policy's own decisions; forced steps
    /// are excluded.
    pub log_prob_sum: f64,
    pub steps: Vec<StepRecord>,
}

/// Accumulates per-vehicle routes from transitions.
struct RouteBuilder {
    routes: Vec<Vec<usize>>,
    current: Vec<usize>,
}

impl RouteBuilder {
    fn new() -> Self {
        RouteBuilder {
            routes: Vec::new(),
            current: vec![0],
        }
    }

    fn record(&mut self, action: usize, transition: Transition) {
        match transition {
            Transition::Visit | Transition::DropOff => self.current.push(action),
            Transition::EndVehicle => {
                if self.current.len() == 1 || *self.current.last().unwrap() != 0 {
                    self.current.push(0);
                }
                self.routes.push(core::mem::replace(&mut self.current, vec![0]));
            }
        }
    }

    fn finish(mut self, vehicles: usize) -> Vec<Vec<usize>> {
        while self.routes.len() < vehicles {
            self.routes.push(vec![0, 0]);
        }
        self.routes
    }
}

/// Replays an action sequence from the initial state and returns the routes
/// and collected prize. Vehicles the sequence never started stay idle.
pub fn solution_from_actions(inst: &BeopInstance, actions: &[usize]) -> Result<(Solution, u64), MdpError> {
    let mut state = initial_state(inst);
    let mut routes = RouteBuilder::new();
    for &a in actions {
        let out = step(inst, &state, a)?;
        routes.record(a, out.transition);
        state = out.next;
    }
    if routes.current.len() > 1 {
        routes.record(0, Transition::EndVehicle);
    }
    let solution = Solution::from_routes(inst, routes.finish(inst.num_vehicles as usize));
    Ok((solution, state.collected))
}

/// Runs the deterministic process to termination.
pub fn rollout<P: Policy + ?Sized, R: Rng + ?Sized>(
    inst: &BeopInstance,
    policy: &P,
    decode: Decode,
    rng: &mut R,
    first_action: Option<usize>,
) -> Result<Rollout, MdpError> {
    let mut state = initial_state(inst);
    let mut routes = RouteBuilder::new();
    let mut steps = Vec::new();
    let mut log_prob_sum = 0.0;
    let mut forced = first_action;
    loop {
        let actions = feasible_actions(inst, &state);
        if actions.is_empty() {
            break;
        }
        let (action, was_forced) = match forced.take() {
            Some(a) => {
                if !actions.contains(&a) {
                    return Err(MdpError::IllegalAction { action: a });
                }
                (a, true)
            }
            None => {
                let probs = policy.probabilities(inst, &state, &actions);
                let idx = choose(&probs, decode, rng);
                log_prob_sum += libm::log(probs[idx]);
                (actions[idx], false)
            }
        };
        let out = step(inst, &state, action)?;
        routes.record(action, out.transition);
        steps.push(StepRecord {
            before: state,
            actions,
            action,
            transition: out.transition,
            elapsed_after: out.next.elapsed,
            forced: was_forced,
        });
        state = out.next;
        if out.terminal {
            break;
        }
    }
    let solution = Solution::from_routes(inst, routes.finish(inst.num_vehicles as usize));
    Ok(Rollout {
        reward: state.collected,
        solution,
        log_prob_sum,
        steps,
    })
}

/// Result of one online single-vehicle episode.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticRollout {
    pub route: Vec<usize>,
    /// Prize of served nodes, zero when invalid.
    pub reward: u64,
    pub invalid: bool,
    pub deadline_misses: u32,
    pub dropped_visits: u32,
    pub elapsed: Millis,
    pub log_prob_sum: f64,
    pub steps: Vec<StepRecord>,
}

/// Runs the stochastic process for a single vehicle. Actions are masked with
/// expected times inflated by `1 + margin` (zero reproduces the plain mask)
/// against the realized clock.
pub fn rollout_stochastic<P: Policy + ?Sized, R: Rng + ?Sized>(
    inst: &BeopInstance,
    real: &Realization,
    policy: &P,
    decode: Decode,
    margin: f64,
    rng: &mut R,
) -> Result<StochasticRollout, MdpError> {
    if inst.num_vehicles != 1 {
        return Err(MdpError::RequiresSingleVehicle);
    }
    let mut state = initial_state(inst);
    let mut route = vec![0];
    let mut steps = Vec::new();
    let mut log_prob_sum = 0.0;
    let (mut misses, mut dropped) = (0, 0);
    let mut invalid = false;
    loop {
        let actions = guarded_actions(inst, &state, margin);
        if actions.is_empty() {
            break;
        }
        let probs = policy.probabilities(inst, &state, &actions);
        let idx = choose(&probs, decode, rng);
        log_prob_sum += libm::log(probs[idx]);
        let action = actions[idx];
        let out = step_stochastic(inst, real, &state, action)?;
        if action != 0 || *route.last().unwrap() != 0 || route.len() == 1 {
            route.push(action);
        }
        misses += out.deadline_missed as u32;
        dropped += out.demand_dropped as u32;
        steps.push(StepRecord {
            before: state,
            actions,
            action,
            transition: out.transition,
            elapsed_after: out.next.elapsed,
            forced: false,
        });
        state = out.next;
        if out.terminal {
            invalid = out.invalid;
            break;
        }
    }
    Ok(StochasticRollout {
        route,
        reward: if invalid { 0 } else { state.collected },
        invalid,
        deadline_misses: misses,
        dropped_visits: dropped,
        elapsed: state.elapsed,
        log_prob_sum,
        steps,
    })
}

/// Executes a fixed single-vehicle route under a realization without any
/// re-planning. Late or emptied nodes earn nothing; finishing past the
/// horizon makes the plan invalid.
pub fn replay_plan(inst: &BeopInstance, real: &Realization, route: &[usize]) -> StochasticRollout {
    let m = inst.size();
    let mut elapsed: Millis = 0;
    let mut collected = 0u64;
    let (mut misses, mut dropped) = (0, 0);
    for w in route.windows(2) {
        let (from, to) = (w[0], w[1]);
        elapsed += real.realized_travel[from * m + to];
        if to == 0 {
            continue;
        }
        let late = elapsed > inst.deadline[to];
        let empty = real.realized_demand[to] == 0;
        misses += late as u32;
        dropped += empty as u32;
        if !late && !empty {
            collected += inst.prize[to] as u64;
        }
    }
    let invalid = elapsed > inst.max_time;
    StochasticRollout {
        route: route.to_vec(),
        reward: if invalid { 0 } else { collected },
        invalid,
        deadline_misses: misses,
        dropped_visits: dropped,
        elapsed,
        log_prob_sum: 0.0,
        steps: Vec::new(),
    }
}
