//! Rollout policies.
//!
//! Each candidate move `current → v` is described by ten edge features and
//! seven summaries of the decision state. A [`LinearPolicy`] scores customers
//! with a weight vector over the concatenation, scores the depot with a
//! separate bias and samples from the tempered softmax over feasible actions.

use alloc::vec::Vec;

use crate::instance::BeopInstance;
use crate::mdp::{feasible_actions, MdpState, Policy};

mod eval;
mod pomo;
mod train;

pub use eval::{evaluate_policy, EvalMode, EvalRecord, EvalReport, QuotaSummary};
pub use pomo::{pomo_evaluate, PomoConfig, PomoResult};
pub use train::{
    grad_log_prob, log_prob, reinforce_gradient, reinforce_objective, reinforce_train, Adam, EpochRecord, TrainConfig,
    TrainError, TrainOutcome,
};

pub const EDGE_FEATURES: usize = 10;
pub const STATE_FEATURES: usize = 7;
pub const NUM_WEIGHTS: usize = EDGE_FEATURES + STATE_FEATURES;
/// Weights plus the depot bias.
pub const NUM_PARAMS: usize = NUM_WEIGHTS + 1;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicyParams {
    pub weights: [f64; NUM_WEIGHTS],
    pub depot_bias: f64,
    pub temperature: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams::zeros()
    }
}

impl PolicyParams {
    /// All-zero weights: uniform over feasible actions.
    pub fn zeros() -> Self {
        PolicyParams {
            weights: [0.0; NUM_WEIGHTS],
            depot_bias: 0.0,
            temperature: 1.0,
        }
    }

    pub fn theta(&self) -> [f64; NUM_PARAMS] {
        let mut out = [0.0; NUM_PARAMS];
        out[..NUM_WEIGHTS].copy_from_slice(&self.weights);
        out[NUM_WEIGHTS] = self.depot_bias;
        out
    }

    pub fn with_theta(&self, theta: &[f64; NUM_PARAMS]) -> Self {
        let mut weights = [0.0; NUM_WEIGHTS];
        weights.copy_from_slice(&theta[..NUM_WEIGHTS]);
        PolicyParams {
            weights,
            depot_bias: theta[NUM_WEIGHTS],
            temperature: self.temperature,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta().iter().all(|w| w.is_finite()) && self.temperature.is_finite() && self.temperature > 0.0
    }
}

/// Per-edge feature table.
///
/// Components, for the edge `i → j`: travel time in seconds; time over `T`;
/// time over `T·K`; time over the smallest and over the mean time into `j`;
/// time over the smallest and over the mean time out of `i`; demand of `j`
/// over capacity; return time `j → 0` in seconds; deadline of `j` over `T`
/// (fixed to 1 without time windows). The in/out statistics skip self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFeatures {
    m: usize,
    table: Vec<[f64; EDGE_FEATURES]>,
    /// Pairs whose in/out ratios fell back to 1 because a minimum was zero.
    pub degenerate_pairs: usize,
    /// Multiplier applied to the two raw-time components.
    pub time_scale: f64,
}

impl EdgeFeatures {
    pub fn new(inst: &BeopInstance) -> Self {
        let m = inst.size();
        let t_max = inst.max_time.max(1) as f64;
        let k = inst.num_vehicles.max(1) as f64;
        let tw = inst.has_time_windows();
        let time = |i: usize, j: usize| inst.t(i, j) as f64;
        let stats = |vals: &mut dyn Iterator<Item = f64>| {
            let (mut min, mut sum, mut cnt) = (f64::INFINITY, 0.0, 0usize);
            for v in vals {
                min = min.min(v);
                sum += v;
                cnt += 1;
            }
            (min, if cnt > 0 { sum / cnt as f64 } else { 0.0 })
        };
        let into: Vec<(f64, f64)> = (0..m)
            .map(|j| stats(&mut (0..m).filter(|&k| k != j).map(|k| time(k, j))))
            .collect();
        let out: Vec<(f64, f64)> = (0..m)
            .map(|i| stats(&mut (0..m).filter(|&k| k != i).map(|k| time(i, k))))
            .collect();
        let ratio = |t: f64, d: f64| if d > 0.0 && d.is_finite() { Some(t / d) } else { None };
        let mut degenerate_pairs = 0;
        let mut table = alloc::vec![[0.0; EDGE_FEATURES]; m * m];
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let t = time(i, j);
                let in_min = ratio(t, into[j].0);
                let in_mean = ratio(t, into[j].1);
                let out_min = ratio(t, out[i].0);
                let out_mean = ratio(t, out[i].1);
                if in_min.is_none() || in_mean.is_none() || out_min.is_none() || out_mean.is_none() {
                    degenerate_pairs += 1;
                }
                table[i * m + j] = [
                    t / 1000.0,
                    t / t_max,
                    t / (t_max * k),
                    in_min.unwrap_or(1.0),
                    in_mean.unwrap_or(1.0),
                    out_min.unwrap_or(1.0),
                    out_mean.unwrap_or(1.0),
                    inst.demand[j] as f64 / inst.capacity.max(1) as f64,
                    time(j, 0) / 1000.0,
                    if tw { inst.deadline[j] as f64 / t_max } else { 1.0 },
                ];
            }
        }
        EdgeFeatures {
            m,
            table,
            degenerate_pairs,
            time_scale: 1.0,
        }
    }

    /// The same table with raw-time components multiplied by `scale`, which is
    /// what scaling every travel time and the horizon by `scale` produces.
    pub fn with_time_scale(&self, scale: f64) -> Self {
        EdgeFeatures {
            time_scale: self.time_scale * scale,
            ..self.clone()
        }
    }

    pub fn edge(&self, i: usize, j: usize) -> [f64; EDGE_FEATURES] {
        let mut f = self.table[i * self.m + j];
        f[0] *= self.time_scale;
        f[8] *= self.time_scale;
        f
    }
}

/// Load over capacity, elapsed over `T`, vehicles left over `K`, collected
/// share of the total prize, return time over `T`, share of customers among
/// `actions`, and mean normalized time to those customers.
pub fn state_features(inst: &BeopInstance, state: &MdpState, actions: &[usize]) -> [f64; STATE_FEATURES] {
    let t_max = inst.max_time.max(1) as f64;
    let total = inst.total_prize();
    let visited_prize: u64 = state.visited.iter().map(|v| inst.prize[v] as u64).sum();
    let customers: Vec<usize> = actions.iter().copied().filter(|&a| a != 0).collect();
    let mean_time = if customers.is_empty() {
        0.0
    } else {
        customers.iter().map(|&v| inst.t(state.current, v) as f64).sum::<f64>() / (customers.len() as f64 * t_max)
    };
    [
        state.load as f64 / inst.capacity.max(1) as f64,
        state.elapsed as f64 / t_max,
        state.vehicles_left as f64 / inst.num_vehicles.max(1) as f64,
        if total == 0 { 0.0 } else { visited_prize as f64 / total as f64 },
        inst.t(state.current, 0) as f64 / t_max,
        customers.len() as f64 / inst.n.max(1) as f64,
        mean_time,
    ]
}

/// Feature-linear softmax policy bound to one instance's feature table.
#[derive(Clone, Debug)]
pub struct LinearPolicy<'a> {
    pub params: &'a PolicyParams,
    pub features: &'a EdgeFeatures,
}

impl<'a> LinearPolicy<'a> {
    pub fn new(params: &'a PolicyParams, features: &'a EdgeFeatures) -> Self {
        LinearPolicy { params, features }
    }

    /// Feature vector of each action in parameter space (weights, then bias).
    pub fn phi(&self, inst: &BeopInstance, state: &MdpState, actions: &[usize]) -> Vec<[f64; NUM_PARAMS]> {
        let sf = state_features(inst, state, actions);
        actions
            .iter()
            .map(|&a| {
                let mut f = [0.0; NUM_PARAMS];
                if a == 0 {
                    f[NUM_WEIGHTS] = 1.0;
                } else {
                    f[..EDGE_FEATURES].copy_from_slice(&self.features.edge(state.current, a));
                    f[EDGE_FEATURES..NUM_WEIGHTS].copy_from_slice(&sf);
                }
                f
            })
            .collect()
    }

    pub fn logits(&self, inst: &BeopInstance, state: &MdpState, actions: &[usize]) -> Vec<f64> {
        let theta = self.params.theta();
        self.phi(inst, state, actions)
            .iter()
            .map(|f| f.iter().zip(&theta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Tempered softmax.
pub fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp((l - max) / temperature)).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

impl Policy for LinearPolicy<'_> {
    fn probabilities(&self, inst: &BeopInstance, state: &MdpState, actions: &[usize]) -> Vec<f64> {
        softmax(&self.logits(inst, state, actions), self.params.temperature)
    }
}

/// `(action, probability)` for every feasible action of `state`.
pub fn action_distribution(
    params: &PolicyParams,
    inst: &BeopInstance,
    features: &EdgeFeatures,
    state: &MdpState,
) -> Vec<(usize, f64)> {
    let actions = feasible_actions(inst, state);
    let probs = LinearPolicy::new(params, features).probabilities(inst, state, &actions);
    actions.into_iter().zip(probs).collect()
}
