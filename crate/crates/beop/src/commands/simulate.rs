use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use beop_core::mdp::{replay_plan, rollout_stochastic, Decode, MdpError};
use beop_core::policy::{pomo_evaluate, EdgeFeatures, LinearPolicy, PomoConfig, QuotaSummary};
use beop_core::rng::stream;
use beop_core::roadnet::{sample_stochastic_realization, NoiseParams, Realization, DEFAULT_REL_SIGMA};

use super::{pool, Completion};
use crate::error::{CliError, CliResult};
use crate::formats::{json_line, read_instance, read_params};
use crate::manifest::Run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SimDecode {
    Argmax,
    Sample,
}

/// Run the policy online under random travel times and demands, next to a
/// fixed plan replayed under the same draws.
#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    /// Relative standard deviation of each travel time.
    #[arg(long, default_value_t = DEFAULT_REL_SIGMA)]
    pub noise_sigma: f64,
    /// Probability that a node's demand turns out to be zero.
    #[arg(long, default_value_t = 0.2)]
    pub drop_prob: f64,
    /// Inflation of expected legs when masking online actions.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = SimDecode::Argmax)]
    pub decode: SimDecode,
    /// Multi-start width for the fixed plan.
    #[arg(long, default_value_t = 100)]
    pub pomo_starts: usize,
    /// Also write every realization as JSON lines.
    #[arg(long)]
    pub save_realizations: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Serialize)]
struct Record {
    realization: usize,
    quota: f64,
    reward: u64,
    invalid: bool,
    deadline_misses: u32,
    dropped_visits: u32,
    replay_quota: f64,
    replay_invalid: bool,
    replay_deadline_misses: u32,
}

#[derive(Serialize)]
struct Side {
    #[serde(flatten)]
    summary: QuotaSummary,
    invalid: usize,
    deadline_violations: u64,
}

impl Side {
    fn new(quotas: &[f64], invalid: usize, deadline_violations: u64) -> Self {
        Side {
            summary: QuotaSummary::from_quotas(quotas),
            invalid,
            deadline_violations,
        }
    }
}

/// Realization `i` and the online trajectory are drawn from the stream
/// `(seed, i)`; the fixed plan is replayed under the same realization.
pub fn simulate(args: &SimulateArgs) -> CliResult<Completion> {
    let inst = read_instance(&args.instance)?.instance;
    let params = read_params(&args.params)?;
    if inst.num_vehicles != 1 {
        return Err(CliError::input(MdpError::RequiresSingleVehicle));
    }
    if !(args.noise_sigma.is_finite() && args.noise_sigma >= 0.0)
        || !(0.0..=1.0).contains(&args.drop_prob)
        || !(args.margin.is_finite() && args.margin >= 0.0)
    {
        return Err(CliError::input("need --noise-sigma >= 0, --drop-prob in [0, 1] and --margin >= 0"));
    }
    if args.pomo_starts == 0 || args.realizations == 0 {
        return Err(CliError::input("--pomo-starts and --realizations must be positive"));
    }
    let mut run = Run::start(
        "simulate",
        args,
        Some(args.seed),
        &[("instance", &args.instance), ("params", &args.params)],
        &args.out,
    )?;
    let noise = NoiseParams {
        rel_sigma: args.noise_sigma,
        drop_prob: args.drop_prob,
    };
    let decode = match args.decode {
        SimDecode::Argmax => Decode::Greedy,
        SimDecode::Sample => Decode::Sample,
    };
    let plan = pomo_evaluate(
        &inst,
        &params,
        &PomoConfig {
            starts: args.pomo_starts,
            aug_scales: vec![1.0],
        },
    );
    let route = plan.solution.tours[0].nodes.clone();
    let features = EdgeFeatures::new(&inst);
    let total = inst.total_prize();
    let quota = |reward: u64| if total == 0 { 0.0 } else { reward as f64 / total as f64 };

    let results: Vec<Result<(Record, Realization), MdpError>> = pool(args.jobs)?.install(|| {
        (0..args.realizations)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(args.seed, &[i as u64]);
                let real = sample_stochastic_realization(&inst, &noise, &mut rng);
                let policy = LinearPolicy::new(&params, &features);
                let online = rollout_stochastic(&inst, &real, &policy, decode, args.margin, &mut rng)?;
                let fixed = replay_plan(&inst, &real, &route);
                let record = Record {
                    realization: i,
                    quota: quota(online.reward),
                    reward: online.reward,
                    invalid: online.invalid,
                    deadline_misses: online.deadline_misses,
                    dropped_visits: online.dropped_visits,
                    replay_quota: quota(fixed.reward),
                    replay_invalid: fixed.invalid,
                    replay_deadline_misses: fixed.deadline_misses,
                };
                Ok((record, real))
            })
            .collect()
    });
    let results: Vec<(Record, Realization)> = results
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Internal(e.into()))?;

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    for (r, _) in &results {
        csv_out.serialize(r).map_err(anyhow::Error::from)?;
    }
    let records = csv_out.into_inner().map_err(|e| CliError::Internal(anyhow::anyhow!("{e}")))?;
    let quotas: Vec<f64> = results.iter().map(|(r, _)| r.quota).collect();
    let replay: Vec<f64> = results.iter().map(|(r, _)| r.replay_quota).collect();
    let summary = serde_json::json!({
        "realizations": results.len(),
        "online": Side::new(
            &quotas,
            results.iter().filter(|(r, _)| r.invalid).count(),
            results.iter().map(|(r, _)| r.deadline_misses as u64).sum(),
        ),
        "replay": Side::new(
            &replay,
            results.iter().filter(|(r, _)| r.replay_invalid).count(),
            results.iter().map(|(r, _)| r.replay_deadline_misses as u64).sum(),
        ),
        "plan": route,
        "config_hash": run.hash(),
    });
    run.write("records.csv", records)?;
    run.write("summary.json", serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)? + "\n")?;
    if args.save_realizations {
        let mut text = String::new();
        for (i, (_, real)) in results.iter().enumerate() {
            text.push_str(&json_line(&serde_json::json!({"realization": i, "realized_travel": real.realized_travel, "realized_demand": real.realized_demand}))?);
        }
        run.write("realizations.jsonl", text)?;
    }
    run.record("mean_quota", summary["online"]["mean"].clone());
    run.record("invalid", summary["online"]["invalid"].clone());
    run.finish()?;
    Ok(Completion::Done)
}
