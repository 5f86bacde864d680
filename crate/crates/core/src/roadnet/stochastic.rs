use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::instance::{BeopInstance, Millis};

/// Relative standard deviation that puts 95% of travel-time draws within
/// ±10% of their expectation (`0.10 / z_{0.975}`).
pub const DEFAULT_REL_SIGMA: f64 = 0.10 / 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseParams {
    pub rel_sigma: f64,
    pub drop_prob: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            rel_sigma: DEFAULT_REL_SIGMA,
            drop_prob: 0.2,
        }
    }
}

/// One draw of the quantities revealed during operation.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Realization {
    pub realized_travel: Vec<Millis>,
    pub realized_demand: Vec<u32>,
}

impl Realization {
    /// The realization that equals the expectation.
    pub fn expected(inst: &BeopInstance) -> Self {
        Realization {
            realized_travel: inst.travel.clone(),
            realized_demand: inst.demand.clone(),
        }
    }
}

/// Multiplies every travel time by an independent `N(1, rel_sigma)` factor
/// (clamped at zero, rounded to whole milliseconds) and zeroes each node's
/// demand independently with probability `drop_prob`.
pub fn sample_stochastic_realization<R: Rng + ?Sized>(inst: &BeopInstance, noise: &NoiseParams, rng: &mut R) -> Realization {
    let factor = Normal::new(1.0, noise.rel_sigma.max(0.0)).expect("finite sigma");
    let realized_travel = inst
        .travel
        .iter()
        .map(|&t| {
            if t == 0 || noise.rel_sigma == 0.0 {
                return t;
            }
            let f: f64 = factor.sample(rng);
            libm::round((t as f64 * f).max(0.0)) as Millis
        })
        .collect();
    let realized_demand = inst
        .demand
        .iter()
        .enumerate()
        .map(|(v, &d)| {
            if v == 0 {
                return 0;
            }
            if rng.random_bool(noise.drop_prob.clamp(0.0, 1.0)) {
                0
            } else {
                d
            }
        })
        .collect();
    Realization {
        realized_travel,
        realized_demand,
    }
}
