use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use beop_core::policy::{reinforce_train, PolicyParams, TrainConfig, TrainError};
use beop_core::roadnet::{NoiseParams, DEFAULT_REL_SIGMA};

use super::Completion;
use crate::error::{CliError, CliResult};
use crate::formats::{read_instance_dir, read_params, ParamsFile};
use crate::manifest::Run;

/// Fit policy parameters with REINFORCE.
#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_dir: PathBuf,
    #[arg(long)]
    pub val_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Sampled rollouts per training instance.
    #[arg(long, default_value_t = 8)]
    pub pomo_starts: usize,
    /// Multi-start width when scoring the validation set.
    #[arg(long, default_value_t = 20)]
    pub validation_starts: usize,
    /// Range of the per-instance travel-time augmentation factor.
    #[arg(long, default_value_t = 0.5)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub scale_max: f64,
    /// Train on the stochastic process (single-vehicle instances only).
    #[arg(long)]
    pub stochastic: bool,
    #[arg(long, default_value_t = DEFAULT_REL_SIGMA)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.2)]
    pub drop_prob: f64,
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    /// Starting parameters; all zeros when omitted.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Serialize)]
struct CurveRow {
    epoch: usize,
    validation_quota: f64,
    train_quota: f64,
    grad_norm: f64,
}

pub fn train(args: &TrainArgs) -> CliResult<Completion> {
    let train: Vec<_> = read_instance_dir(&args.train_dir)?.into_iter().map(|(_, i)| i).collect();
    let val: Vec<_> = read_instance_dir(&args.val_dir)?.into_iter().map(|(_, i)| i).collect();
    for (dir, set) in [(&args.train_dir, &train), (&args.val_dir, &val)] {
        if set.is_empty() {
            return Err(CliError::input(format!("no instances in {}", dir.display())));
        }
    }
    let init = match &args.init {
        Some(p) => read_params(p)?,
        None => PolicyParams::zeros(),
    };
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        pomo_starts: args.pomo_starts,
        scale_range: (args.scale_min, args.scale_max),
        seed: args.seed,
        validation_starts: args.validation_starts,
        stochastic: args.stochastic.then_some(NoiseParams {
            rel_sigma: args.noise_sigma,
            drop_prob: args.drop_prob,
        }),
        guard_margin: args.margin,
    };
    let mut inputs = vec![("train_dir", args.train_dir.as_path()), ("val_dir", args.val_dir.as_path())];
    if let Some(p) = &args.init {
        inputs.push(("init", p.as_path()));
    }
    let outcome = reinforce_train(&train, &val, &config, &init).map_err(|e| match e {
        TrainError::NonFiniteGradient { .. } | TrainError::Mdp(_) => CliError::Internal(e.into()),
        _ => CliError::Input(e.into()),
    })?;
    let mut run = Run::start("train", args, Some(args.seed), &inputs, &args.out)?;
    let file = ParamsFile {
        params: outcome.params.clone(),
        config_hash: Some(run.hash().to_string()),
    };
    run.write("params.json", serde_json::to_string_pretty(&file).map_err(anyhow::Error::from)? + "\n")?;
    let mut curve = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    // the header is written even when no epoch ran
    curve
        .write_record(["epoch", "validation_quota", "train_quota", "grad_norm"])
        .map_err(anyhow::Error::from)?;
    for r in &outcome.curve {
        curve
            .serialize(CurveRow {
                epoch: r.epoch,
                validation_quota: r.validation_quota,
                train_quota: r.train_quota,
                grad_norm: r.grad_norm,
            })
            .map_err(anyhow::Error::from)?;
    }
    let bytes = curve.into_inner().map_err(|e| CliError::Internal(anyhow::anyhow!("{e}")))?;
    run.write("curve.csv", bytes)?;
    run.record("best_epoch", outcome.best_epoch);
    run.record(
        "best_validation_quota",
        outcome
            .best_epoch
            .and_then(|b| outcome.curve.iter().find(|r| r.epoch == b))
            .map(|r| r.validation_quota),
    );
    run.finish()?;
    Ok(Completion::Done)
}
