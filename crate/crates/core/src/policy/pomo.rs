use alloc::vec;
use alloc::vec::Vec;

use super::{EdgeFeatures, LinearPolicy, PolicyParams};
use crate::instance::{BeopInstance, Solution};
use crate::mdp::{feasible_actions, initial_state, rollout, Decode};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PomoConfig {
    /// Maximum number of distinct first actions to roll out from.
    pub starts: usize,
    /// Feature time scales to repeat the search under; `1.0` is the plain run.
    pub aug_scales: Vec<f64>,
}

impl Default for PomoConfig {
    fn default() -> Self {
        PomoConfig {
            starts: 100,
            aug_scales: vec![1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PomoResult {
    pub solution: Solution,
    pub reward: u64,
    pub quota: f64,
    /// Reward of every rollout, in start order, for each scale in turn.
    pub rollout_rewards: Vec<u64>,
}

/// Argmax rollouts from the highest-scoring feasible first actions (lowest
/// id on equal scores), repeated for each augmentation scale; the best plan
/// wins, the earliest one on ties.
pub fn pomo_evaluate(inst: &BeopInstance, params: &PolicyParams, config: &PomoConfig) -> PomoResult {
    let base = EdgeFeatures::new(inst);
    let root = initial_state(inst);
    let first = feasible_actions(inst, &root);
    let mut rng = stream(0, &[]);
    let mut best: Option<(u64, Solution)> = None;
    let mut rollout_rewards = Vec::new();
    let scales: &[f64] = if config.aug_scales.is_empty() { &[1.0] } else { &config.aug_scales };
    for &scale in scales {
        let features = base.with_time_scale(scale);
        let policy = LinearPolicy::new(params, &features);
        let logits = policy.logits(inst, &root, &first);
        let mut order: Vec<usize> = (0..first.len()).collect();
        order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
        for &pos in order.iter().take(config.starts.max(1)) {
            let r = rollout(inst, &policy, Decode::Greedy, &mut rng, Some(first[pos]))
                .expect("forced start is feasible");
            rollout_rewards.push(r.reward);
            if best.as_ref().is_none_or(|(b, _)| r.reward > *b) {
                best = Some((r.reward, r.solution));
            }
        }
    }
    let (reward, solution) = best.expect("at least one start");
    PomoResult {
        quota: solution.quota,
        solution,
        reward,
        rollout_rewards,
    }
}
