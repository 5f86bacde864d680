use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use beop_core::exact::{exact_solve, BnbLimits, ExactResult};
use beop_core::greedy::greedy_solve;
use beop_core::instance::check_feasible;
use beop_core::mdp::{rollout, Decode};
use beop_core::policy::{pomo_evaluate, EdgeFeatures, LinearPolicy, PolicyParams, PomoConfig};
use beop_core::rng::stream;
use beop_core::{BeopInstance, Millis, Solution};

use super::{Completion, Overrides};
use crate::error::{CliError, CliResult};
use crate::formats::{check_instance, json_line, parse_millis, read_instance, read_params, routes_geojson, trace_solution, SolutionFile};
use crate::manifest::Run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Exact,
    Policy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Exact => "exact",
            Method::Policy => "policy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// Multi-start argmax decoding.
    Pomo,
    /// One trajectory drawn from the policy distribution (needs --seed).
    Sample,
}

/// Settings shared by every place that runs a solution method.
#[derive(Clone, Debug)]
pub struct MethodOptions {
    pub limits: BnbLimits,
    pub params: Option<PolicyParams>,
    pub pomo: PomoConfig,
    pub decode: DecodeMode,
    pub seed: Option<u64>,
}

pub struct Solved {
    pub solution: Solution,
    pub exact: Option<ExactResult>,
}

/// Runs one method on one instance.
pub fn solve_instance(inst: &BeopInstance, method: Method, opts: &MethodOptions) -> CliResult<Solved> {
    Ok(match method {
        Method::Greedy => Solved {
            solution: greedy_solve(inst),
            exact: None,
        },
        Method::Exact => {
            let res = exact_solve(inst, &opts.limits);
            Solved {
                solution: res.best.clone(),
                exact: Some(res),
            }
        }
        Method::Policy => {
            let params = opts
                .params
                .as_ref()
                .ok_or_else(|| CliError::input("the policy method needs --params"))?;
            let solution = match opts.decode {
                DecodeMode::Pomo => pomo_evaluate(inst, params, &opts.pomo).solution,
                DecodeMode::Sample => {
                    let seed = opts
                        .seed
                        .ok_or_else(|| CliError::input("sampled decoding needs --seed"))?;
                    let features = EdgeFeatures::new(inst);
                    let policy = LinearPolicy::new(params, &features);
                    rollout(inst, &policy, Decode::Sample, &mut stream(seed, &[]), None)
                        .map_err(|e| CliError::Internal(e.into()))?
                        .solution
                }
            };
            Solved { solution, exact: None }
        }
    })
}

/// Solve one instance file.
#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Replace the instance's fleet size.
    #[arg(long)]
    pub vehicles: Option<u32>,
    #[arg(long)]
    pub capacity: Option<u32>,
    /// Replace the horizon; deadlines are rescaled with it.
    #[arg(long, value_parser = parse_millis)]
    pub max_time: Option<Millis>,
    /// Exact: search nodes to expand after the first incumbent.
    #[arg(long)]
    pub node_budget: Option<u64>,
    /// Exact: wall-clock seconds after the first incumbent.
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Exact: maximum depot-to-depot segments per vehicle.
    #[arg(long)]
    pub subtours: Option<usize>,
    /// Policy: parameter JSON.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DecodeMode::Pomo)]
    pub decode: DecodeMode,
    #[arg(long, default_value_t = 100)]
    pub pomo_starts: usize,
    /// Feature time scales tried by multi-start decoding.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub aug_scales: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the decision-process trajectory as JSON lines.
    #[arg(long)]
    pub trace: bool,
}

impl SolveArgs {
    pub fn method_options(&self) -> CliResult<MethodOptions> {
        let params = match &self.params {
            Some(p) => Some(read_params(p)?),
            None => None,
        };
        method_options(
            self.node_budget,
            self.time_budget,
            self.subtours,
            params,
            self.pomo_starts,
            &self.aug_scales,
            self.decode,
            self.seed,
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub(super) fn method_options(
    node_budget: Option<u64>,
    time_budget: Option<f64>,
    subtours: Option<usize>,
    params: Option<PolicyParams>,
    pomo_starts: usize,
    aug_scales: &[f64],
    decode: DecodeMode,
    seed: Option<u64>,
) -> CliResult<MethodOptions> {
    if subtours == Some(0) {
        return Err(CliError::input("--subtours must be at least 1"));
    }
    if time_budget.is_some_and(|t| t.is_nan() || t < 0.0) {
        return Err(CliError::input("--time-budget must be non-negative"));
    }
    if pomo_starts == 0 || aug_scales.is_empty() || aug_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(CliError::input("--pomo-starts must be positive and --aug-scales finite and positive"));
    }
    let limits = BnbLimits {
        node_budget: node_budget.unwrap_or(u64::MAX),
        time_budget: time_budget.unwrap_or(f64::INFINITY),
        subtour_cap: subtours,
    };
    Ok(MethodOptions {
        limits,
        params,
        pomo: PomoConfig {
            starts: pomo_starts,
            aug_scales: aug_scales.to_vec(),
        },
        decode,
        seed,
    })
}

pub fn solve(args: &SolveArgs) -> CliResult<Completion> {
    let file = read_instance(&args.instance)?;
    let inst = Overrides {
        vehicles: args.vehicles,
        capacity: args.capacity,
        max_time: args.max_time,
    }
    .apply(&file.instance);
    check_instance(&inst).map_err(|e| CliError::input(format!("after overrides: {e}")))?;
    let opts = args.method_options()?;
    if args.method == Method::Policy && args.params.is_none() {
        return Err(CliError::input("the policy method needs --params"));
    }
    if args.method == Method::Policy && args.decode == DecodeMode::Sample && args.seed.is_none() {
        return Err(CliError::input("sampled decoding needs --seed"));
    }
    let mut inputs = vec![("instance", args.instance.as_path())];
    if let Some(p) = &args.params {
        inputs.push(("params", p.as_path()));
    }
    let mut run = Run::start("solve", args, args.seed, &inputs, &args.out)?;

    let solved = solve_instance(&inst, args.method, &opts)?;
    let report = check_feasible(&inst, &solved.solution);
    if !report.is_feasible() {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Internal(anyhow::anyhow!("solver returned an infeasible plan: {}", msgs.join("; "))));
    }
    let mut out = SolutionFile::new(&inst, &solved.solution, args.method.name());
    let mut completion = Completion::Done;
    if let Some(res) = &solved.exact {
        out.upper_bound = Some(res.upper_bound);
        out.proven_optimal = Some(res.proven_optimal);
        out.nodes_explored = Some(res.nodes_explored);
        if !res.proven_optimal {
            completion = Completion::Unproven;
        }
    }
    out.config_hash = Some(run.hash().to_string());
    run.write("solution.json", serde_json::to_string_pretty(&out).map_err(anyhow::Error::from)? + "\n")?;
    if let Some(geo) = routes_geojson(&inst, &solved.solution, run.hash()) {
        run.write("routes.geojson", serde_json::to_string_pretty(&geo).map_err(anyhow::Error::from)? + "\n")?;
    }
    if args.trace {
        let mut text = String::new();
        for rec in trace_solution(&inst, &solved.solution)? {
            text.push_str(&json_line(&rec)?);
        }
        run.write("trace.jsonl", text)?;
    }
    run.record("collected_prize", solved.solution.collected_prize);
    run.record("quota", solved.solution.quota);
    if let Some(res) = &solved.exact {
        run.record("proven_optimal", res.proven_optimal);
        run.record("upper_bound", res.upper_bound);
    }
    run.finish()?;
    Ok(completion)
}
