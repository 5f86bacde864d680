use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{pomo_evaluate, softmax, EdgeFeatures, LinearPolicy, PolicyParams, PomoConfig, NUM_PARAMS};
use crate::instance::BeopInstance;
use crate::mdp::{rollout, rollout_stochastic, Decode, MdpError, StepRecord};
use crate::roadnet::{sample_stochastic_realization, NoiseParams};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Sampled rollouts per training instance; their mean reward is the baseline.
    pub pomo_starts: usize,
    /// Travel times of each training instance are multiplied by a factor
    /// drawn uniformly from this interval; the horizon stays fixed.
    pub scale_range: (f64, f64),
    pub seed: u64,
    /// Multi-start width used to score the validation set after each epoch.
    pub validation_starts: usize,
    /// Train on the stochastic process (single vehicle) with these noise settings.
    pub stochastic: Option<NoiseParams>,
    /// Inflation of expected travel legs when masking stochastic rollouts.
    pub guard_margin: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 50,
            learning_rate: 1e-4,
            pomo_starts: 8,
            scale_range: (0.5, 1.5),
            seed: 0,
            validation_starts: 20,
            stochastic: None,
            guard_margin: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub validation_quota: f64,
    pub train_quota: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation quota (the initial
    /// parameters when no epoch ran).
    pub params: PolicyParams,
    pub curve: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("non-finite gradient in epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteGradient { epoch: usize, batch: usize, detail: String },
    #[error("the training set is empty")]
    EmptyTrainingSet,
    #[error("the validation set is empty")]
    EmptyValidationSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Adam ascent on the policy parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: [f64; NUM_PARAMS],
    v: [f64; NUM_PARAMS],
    t: i32,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: [0.0; NUM_PARAMS],
            v: [0.0; NUM_PARAMS],
            t: 0,
        }
    }

    /// Moves `theta` along the bias-corrected moment estimate of `grad`.
    pub fn ascend(&mut self, theta: &mut [f64; NUM_PARAMS], grad: &[f64; NUM_PARAMS]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..NUM_PARAMS {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] += self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
    }
}

/// Log-probability of the recorded, non-forced decisions under `params`.
pub fn log_prob(params: &PolicyParams, inst: &BeopInstance, features: &EdgeFeatures, steps: &[StepRecord]) -> f64 {
    let policy = LinearPolicy::new(params, features);
    steps
        .iter()
        .filter(|s| !s.forced)
        .map(|s| {
            let logits = policy.logits(inst, &s.before, &s.actions);
            let probs = softmax(&logits, params.temperature);
            let idx = s.actions.iter().position(|&a| a == s.action).expect("recorded action");
            libm::log(probs[idx])
        })
        .sum()
}

/// Gradient of [`log_prob`] with respect to the weights and depot bias:
/// `Σ (φ(a) − E_p[φ]) / temperature` over the recorded decisions.
pub fn grad_log_prob(
    params: &PolicyParams,
    inst: &BeopInstance,
    features: &EdgeFeatures,
    steps: &[StepRecord],
) -> [f64; NUM_PARAMS] {
    let policy = LinearPolicy::new(params, features);
    let theta = params.theta();
    let mut grad = [0.0; NUM_PARAMS];
    for s in steps.iter().filter(|s| !s.forced) {
        let phi = policy.phi(inst, &s.before, &s.actions);
        let logits: Vec<f64> = phi.iter().map(|f| f.iter().zip(&theta).map(|(a, b)| a * b).sum()).collect();
        let probs = softmax(&logits, params.temperature);
        let idx = s.actions.iter().position(|&a| a == s.action).expect("recorded action");
        for k in 0..NUM_PARAMS {
            let expected: f64 = phi.iter().zip(&probs).map(|(f, p)| p * f[k]).sum();
            grad[k] += (phi[idx][k] - expected) / params.temperature;
        }
    }
    grad
}

/// Surrogate `Σ_r A_r · log π(trajectory_r)` whose gradient is the REINFORCE estimate.
pub fn reinforce_objective(
    params: &PolicyParams,
    inst: &BeopInstance,
    features: &EdgeFeatures,
    rollouts: &[(f64, &[StepRecord])],
) -> f64 {
    rollouts.iter().map(|&(adv, steps)| adv * log_prob(params, inst, features, steps)).sum()
}

pub fn reinforce_gradient(
    params: &PolicyParams,
    inst: &BeopInstance,
    features: &EdgeFeatures,
    rollouts: &[(f64, &[StepRecord])],
) -> [f64; NUM_PARAMS] {
    let mut grad = [0.0; NUM_PARAMS];
    for &(adv, steps) in rollouts {
        if adv == 0.0 {
            continue;
        }
        let g = grad_log_prob(params, inst, features, steps);
        for k in 0..NUM_PARAMS {
            grad[k] += adv * g[k];
        }
    }
    grad
}

fn validation_quota(val: &[BeopInstance], params: &PolicyParams, starts: usize) -> f64 {
    let cfg = PomoConfig {
        starts,
        aug_scales: alloc::vec![1.0],
    };
    val.iter().map(|inst| pomo_evaluate(inst, params, &cfg).quota).sum::<f64>() / val.len() as f64
}

/// Sampled rollouts of one training instance: `(quota, steps)` pairs.
fn sample_rollouts(
    inst: &BeopInstance,
    params: &PolicyParams,
    features: &EdgeFeatures,
    config: &TrainConfig,
    path: [u64; 2],
) -> Result<Vec<(f64, Vec<StepRecord>)>, MdpError> {
    let policy = LinearPolicy::new(params, features);
    let total = inst.total_prize().max(1) as f64;
    (0..config.pomo_starts.max(1) as u64)
        .map(|r| {
            let mut rng = stream(config.seed, &[path[0], path[1], 2, r]);
            match &config.stochastic {
                None => {
                    let out = rollout(inst, &policy, Decode::Sample, &mut rng, None)?;
                    Ok((out.reward as f64 / total, out.steps))
                }
                Some(noise) => {
                    let real = sample_stochastic_realization(inst, noise, &mut rng);
                    let out = rollout_stochastic(inst, &real, &policy, Decode::Sample, config.guard_margin, &mut rng)?;
                    Ok((out.reward as f64 / total, out.steps))
                }
            }
        })
        .collect()
}

/// REINFORCE with the per-instance mean reward as baseline and Adam ascent.
///
/// Rewards are quotas so instances of different sizes weigh alike. After each
/// epoch the validation set is scored by multi-start argmax decoding and the
/// best epoch's parameters are kept.
pub fn reinforce_train(
    train: &[BeopInstance],
    val: &[BeopInstance],
    config: &TrainConfig,
    init: &PolicyParams,
) -> Result<TrainOutcome, TrainError> {
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            params: init.clone(),
            curve: Vec::new(),
            best_epoch: None,
        });
    }
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if val.is_empty() {
        return Err(TrainError::EmptyValidationSet);
    }
    let (lo, hi) = config.scale_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(TrainError::InvalidConfig("scale_range must be a positive interval".into()));
    }
    if !init.is_finite() {
        return Err(TrainError::InvalidConfig("initial parameters must be finite with positive temperature".into()));
    }
    let mut params = init.clone();
    let mut theta = params.theta();
    let mut adam = Adam::new(config.learning_rate);
    let mut best: Option<(f64, usize, PolicyParams)> = None;
    let mut curve = Vec::with_capacity(config.epochs);
    let batch_size = config.batch_size.max(1);
    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut stream(config.seed, &[epoch as u64, 0]));
        let (mut quota_sum, mut quota_cnt, mut norm_sum, mut batches) = (0.0, 0usize, 0.0, 0usize);
        for (b, batch) in order.chunks(batch_size).enumerate() {
            let mut grad = [0.0; NUM_PARAMS];
            let mut count = 0usize;
            for &idx in batch {
                let path = [epoch as u64, idx as u64];
                let scale = if lo == hi {
                    lo
                } else {
                    stream(config.seed, &[path[0], path[1], 1]).random_range(lo..hi)
                };
                let inst = train[idx].with_travel_scaled(scale);
                let features = EdgeFeatures::new(&inst);
                let samples = sample_rollouts(&inst, &params, &features, config, path)?;
                let mean = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
                let weighted: Vec<(f64, &[StepRecord])> = samples.iter().map(|(q, st)| (q - mean, st.as_slice())).collect();
                let g = reinforce_gradient(&params, &inst, &features, &weighted);
                for k in 0..NUM_PARAMS {
                    grad[k] += g[k];
                }
                count += samples.len();
                quota_sum += samples.iter().map(|s| s.0).sum::<f64>();
                quota_cnt += samples.len();
            }
            for g in grad.iter_mut() {
                *g /= count as f64;
            }
            if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
                return Err(TrainError::NonFiniteGradient {
                    epoch,
                    batch: b,
                    detail: alloc::format!("component {k} is {}", grad[k]),
                });
            }
            norm_sum += libm::sqrt(grad.iter().map(|g| g * g).sum());
            batches += 1;
            adam.ascend(&mut theta, &grad);
            params = params.with_theta(&theta);
        }
        let validation_quota = validation_quota(val, &params, config.validation_starts);
        curve.push(EpochRecord {
            epoch,
            validation_quota,
            train_quota: quota_sum / quota_cnt.max(1) as f64,
            grad_norm: norm_sum / batches.max(1) as f64,
        });
        if best.as_ref().is_none_or(|(q, _, _)| validation_quota > *q) {
            best = Some((validation_quota, epoch, params.clone()));
        }
    }
    let (_, best_epoch, best_params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params: best_params,
        curve,
        best_epoch: Some(best_epoch),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::small;
    use crate::mdp::rollout;

    fn inst() -> BeopInstance {
        small(
            &[
                &[0, 10, 20, 30, 25, 15],
                &[12, 0, 10, 20, 30, 14],
                &[20, 11, 0, 10, 20, 18],
                &[30, 20, 9, 0, 10, 22],
                &[25, 30, 20, 10, 0, 12],
                &[15, 13, 17, 21, 11, 0],
            ],
            &[0, 1, 4, 3, 2, 5],
            2,
            6,
            60,
        )
    }

    #[test]
    fn equal_rewards_give_zero_gradient() {
        let inst = inst();
        let f = EdgeFeatures::new(&inst);
        let p = PolicyParams::zeros();
        let r = rollout(&inst, &LinearPolicy::new(&p, &f), Decode::Sample, &mut stream(1, &[]), None).unwrap();
        let g = reinforce_gradient(&p, &inst, &f, &[(0.0, &r.steps), (0.0, &r.steps)]);
        assert_eq!(g, [0.0; NUM_PARAMS]);
    }

    #[test]
    fn log_prob_matches_rollout_record() {
        let inst = inst();
        let f = EdgeFeatures::new(&inst);
        let mut p = PolicyParams::zeros();
        p.weights[1] = -2.0;
        p.depot_bias = 0.5;
        let r = rollout(&inst, &LinearPolicy::new(&p, &f), Decode::Sample, &mut stream(4, &[]), Some(2)).unwrap();
        assert!((log_prob(&p, &inst, &f, &r.steps) - r.log_prob_sum).abs() < 1e-12);
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let inst = inst();
        let f = EdgeFeatures::new(&inst);
        let mut p = PolicyParams::zeros();
        p.weights = [0.01, -1.0, 0.5, 0.2, -0.3, 0.1, 0.4, 0.8, -0.02, 0.3, 0.2, -0.5, 0.1, 0.6, -0.4, 0.3, 0.2];
        p.depot_bias = -0.2;
        p.temperature = 0.8;
        let r = rollout(&inst, &LinearPolicy::new(&p, &f), Decode::Sample, &mut stream(7, &[]), None).unwrap();
        let g = grad_log_prob(&p, &inst, &f, &r.steps);
        let theta = p.theta();
        let h = 1e-6;
        for k in 0..NUM_PARAMS {
            let (mut up, mut down) = (theta, theta);
            up[k] += h;
            down[k] -= h;
            let fd = (log_prob(&p.with_theta(&up), &inst, &f, &r.steps) - log_prob(&p.with_theta(&down), &inst, &f, &r.steps))
                / (2.0 * h);
            let scale = g[k].abs().max(fd.abs()).max(1e-8);
            assert!((g[k] - fd).abs() / scale < 1e-5, "component {k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn zero_epochs_return_initial_params() {
        let init = PolicyParams::zeros();
        let out = reinforce_train(&[], &[], &TrainConfig { epochs: 0, ..TrainConfig::default() }, &init).unwrap();
        assert_eq!(out.params, init);
        assert!(out.curve.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_keeps_best_epoch() {
        let train: Vec<BeopInstance> = (0..4).map(|_| inst()).collect();
        let val = alloc::vec![inst()];
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 0.05,
            pomo_starts: 4,
            seed: 11,
            validation_starts: 3,
            ..TrainConfig::default()
        };
        let a = reinforce_train(&train, &val, &cfg, &PolicyParams::zeros()).unwrap();
        let b = reinforce_train(&train, &val, &cfg, &PolicyParams::zeros()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curve.len(), 3);
        let best = a.best_epoch.unwrap();
        let kept = validation_quota(&val, &a.params, 3);
        assert_eq!(kept, a.curve[best - 1].validation_quota);
    }

    #[test]
    fn adam_moves_along_gradient_sign() {
        let mut adam = Adam::new(0.1);
        let mut theta = [0.0; NUM_PARAMS];
        let mut grad = [0.0; NUM_PARAMS];
        grad[0] = 3.0;
        grad[1] = -0.001;
        adam.ascend(&mut theta, &grad);
        assert!((theta[0] - 0.1).abs() < 1e-6);
        assert!((theta[1] + 0.1).abs() < 1e-3);
        assert_eq!(theta[2], 0.0);
    }
}
