use alloc::vec::Vec;

use super::{pomo_evaluate, EdgeFeatures, LinearPolicy, PolicyParams, PomoConfig};
use crate::instance::BeopInstance;
use crate::mdp::{rollout_stochastic, Decode, MdpError};
use crate::roadnet::{sample_stochastic_realization, NoiseParams};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
pub enum EvalMode {
    /// Multi-start argmax decoding on expected travel times.
    Deterministic(PomoConfig),
    /// One trajectory per instance under a fresh realization.
    Stochastic {
        noise: NoiseParams,
        margin: f64,
        decode: Decode,
    },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EvalRecord {
    pub index: usize,
    /// Zero for invalid plans.
    pub quota: f64,
    pub reward: u64,
    pub invalid: bool,
    pub deadline_misses: u32,
    pub dropped_visits: u32,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuotaSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl QuotaSummary {
    pub fn from_quotas(quotas: &[f64]) -> Self {
        if quotas.is_empty() {
            return QuotaSummary { count: 0, mean: 0.0, median: 0.0, min: 0.0, max: 0.0 };
        }
        let mut sorted = quotas.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        QuotaSummary {
            count: n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            min: sorted[0],
            max: sorted[n - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub summary: QuotaSummary,
    pub invalid: usize,
    pub deadline_violations: u64,
}

/// Scores `params` on every instance. Instance `i` draws its realization and
/// trajectory from the stream `(seed, i)`.
pub fn evaluate_policy(
    instances: &[BeopInstance],
    params: &PolicyParams,
    mode: &EvalMode,
    seed: u64,
) -> Result<EvalReport, MdpError> {
    let mut records = Vec::with_capacity(instances.len());
    for (index, inst) in instances.iter().enumerate() {
        let record = match mode {
            EvalMode::Deterministic(cfg) => {
                let r = pomo_evaluate(inst, params, cfg);
                EvalRecord {
                    index,
                    quota: r.quota,
                    reward: r.reward,
                    invalid: false,
                    deadline_misses: 0,
                    dropped_visits: 0,
                }
            }
            EvalMode::Stochastic { noise, margin, decode } => {
                let mut rng = stream(seed, &[index as u64]);
                let real = sample_stochastic_realization(inst, noise, &mut rng);
                let features = EdgeFeatures::new(inst);
                let policy = LinearPolicy::new(params, &features);
                let r = rollout_stochastic(inst, &real, &policy, *decode, *margin, &mut rng)?;
                let total = inst.total_prize();
                EvalRecord {
                    index,
                    quota: if total == 0 { 0.0 } else { r.reward as f64 / total as f64 },
                    reward: r.reward,
                    invalid: r.invalid,
                    deadline_misses: r.deadline_misses,
                    dropped_visits: r.dropped_visits,
                }
            }
        };
        records.push(record);
    }
    let quotas: Vec<f64> = records.iter().map(|r| r.quota).collect();
    Ok(EvalReport {
        summary: QuotaSummary::from_quotas(&quotas),
        invalid: records.iter().filter(|r| r.invalid).count(),
        deadline_violations: records.iter().map(|r| r.deadline_misses as u64).sum(),
        records,
    })
}
