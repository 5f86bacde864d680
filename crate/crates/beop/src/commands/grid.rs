use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use beop_core::rng::stream;
use beop_core::roadnet::draw_deadlines;
use beop_core::{BeopInstance, Millis, Solution};

use super::solve::method_options;
use super::{pool, solve_instance, Completion, DecodeMode, Method, Overrides};
use crate::error::{CliError, CliResult};
use crate::formats::{check_instance, parse_millis, read_instance_dir, read_params};
use crate::manifest::Run;

/// Mean quotas over a directory of instances for every combination of
/// fleet size, capacity, horizon and time-window share.
#[derive(Args, Debug, Serialize)]
pub struct QuotaGridArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "greedy")]
    pub methods: Vec<Method>,
    /// Fleet sizes; instances keep their own when omitted.
    #[arg(long, value_delimiter = ',')]
    pub vehicles: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub capacity: Vec<u32>,
    #[arg(long, value_delimiter = ',', value_parser = parse_millis)]
    pub max_time: Vec<Millis>,
    /// Time-window shares; deadlines are redrawn per instance (needs --seed).
    #[arg(long, value_delimiter = ',')]
    pub tw_fraction: Vec<f64>,
    /// Distance fractions of the horizon for stratified quotas, e.g. `0.2,0.4,1`.
    #[arg(long, value_delimiter = ',')]
    pub strata: Vec<f64>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub pomo_starts: usize,
    #[arg(long)]
    pub node_budget: Option<u64>,
    #[arg(long)]
    pub time_budget: Option<f64>,
    #[arg(long)]
    pub subtours: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Quota among the nodes whose return time to the depot is at most
/// `fraction · T`, for each fraction. Return times beyond the horizon count
/// as `T`, so fraction `1` covers every node and equals the overall quota.
pub fn stratified_quota(inst: &BeopInstance, sol: &Solution, strata: &[f64]) -> Vec<f64> {
    let visited = sol.visited(inst.size());
    strata
        .iter()
        .map(|&f| {
            let (mut total, mut got) = (0u64, 0u64);
            for v in 1..inst.size() {
                let d = (inst.t(v, 0) as f64 / inst.max_time as f64).min(1.0);
                if d <= f {
                    total += inst.prize[v] as u64;
                    if visited.contains(v) {
                        got += inst.prize[v] as u64;
                    }
                }
            }
            if total == 0 {
                0.0
            } else {
                got as f64 / total as f64
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    overrides: Overrides,
    tw: Option<f64>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

fn show<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Outcome {
    quota: f64,
    prize: u64,
    proven: Option<bool>,
    strata: Vec<f64>,
}

pub fn quota_grid(args: &QuotaGridArgs) -> CliResult<Completion> {
    if args.methods.is_empty() {
        return Err(CliError::input("no methods given"));
    }
    if !args.tw_fraction.is_empty() && args.seed.is_none() {
        return Err(CliError::input("--tw-fraction redraws deadlines and needs --seed"));
    }
    if args.tw_fraction.iter().chain(&args.strata).any(|f| !(0.0..=1.0).contains(f)) {
        return Err(CliError::input("--tw-fraction and --strata values must lie in [0, 1]"));
    }
    if args.max_time.contains(&0) {
        return Err(CliError::input("--max-time must be positive"));
    }
    let params = match &args.params {
        Some(p) => Some(read_params(p)?),
        None if args.methods.contains(&Method::Policy) => {
            return Err(CliError::input("the policy method needs --params"));
        }
        None => None,
    };
    let opts = method_options(
        args.node_budget,
        args.time_budget,
        args.subtours,
        params,
        args.pomo_starts,
        &[1.0],
        DecodeMode::Pomo,
        None,
    )?;
    let instances = read_instance_dir(&args.instances)?;

    let mut cells = Vec::new();
    for k in axis(&args.vehicles) {
        for c in axis(&args.capacity) {
            for t in axis(&args.max_time) {
                for tw in axis(&args.tw_fraction) {
                    cells.push(Cell {
                        overrides: Overrides {
                            vehicles: k,
                            capacity: c,
                            max_time: t,
                        },
                        tw,
                    });
                }
            }
        }
    }
    if instances.is_empty() {
        return Err(CliError::input(format!(
            "empty cell: no instances in {}",
            args.instances.display()
        )));
    }

    let mut inputs = vec![("instances", args.instances.as_path())];
    if let Some(p) = &args.params {
        inputs.push(("params", p.as_path()));
    }
    let mut run = Run::start("quota-grid", args, args.seed, &inputs, &args.out)?;

    // Cell instances are built up front so that input errors surface before any solving.
    let mut jobs = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for (ii, (path, base)) in instances.iter().enumerate() {
            let mut inst = cell.overrides.apply(base);
            if let (Some(f), Some(seed)) = (cell.tw, args.seed) {
                let mut rng = stream(seed, &[ii as u64, f.to_bits()]);
                inst.deadline = draw_deadlines(inst.n, inst.max_time, f, &mut rng);
            }
            check_instance(&inst).map_err(|e| CliError::input(format!("{} in cell {ci}: {e}", path.display())))?;
            for &m in &args.methods {
                jobs.push((ci, ii, m, inst.clone()));
            }
        }
    }
    let outcomes: Vec<CliResult<Outcome>> = pool(args.jobs)?.install(|| {
        jobs.par_iter()
            .map(|(_, _, m, inst)| {
                let s = solve_instance(inst, *m, &opts)?;
                Ok(Outcome {
                    quota: s.solution.quota,
                    prize: s.solution.collected_prize,
                    proven: s.exact.map(|r| r.proven_optimal),
                    strata: stratified_quota(inst, &s.solution, &args.strata),
                })
            })
            .collect()
    });
    let outcomes: Vec<Outcome> = outcomes.into_iter().collect::<CliResult<_>>()?;

    let cell_cols = |cell: &Cell| {
        vec![
            show(cell.overrides.vehicles),
            show(cell.overrides.capacity),
            show(cell.overrides.max_time),
            show(cell.tw),
        ]
    };
    let strata_cols: Vec<String> = args.strata.iter().map(|f| format!("quota_within_{f}")).collect();

    let mut detail = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["vehicles", "capacity", "max_time_ms", "tw_fraction", "method", "instance", "collected_prize", "quota", "proven_optimal"]
        .map(String::from)
        .to_vec();
    header.extend(strata_cols.iter().cloned());
    detail.write_record(&header).map_err(anyhow::Error::from)?;
    for ((ci, ii, m, _), o) in jobs.iter().zip(&outcomes) {
        let name = instances[*ii].0.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let mut row = cell_cols(&cells[*ci]);
        row.extend([m.name().to_string(), name, o.prize.to_string(), o.quota.to_string(), show(o.proven)]);
        row.extend(o.strata.iter().map(|q| q.to_string()));
        detail.write_record(&row).map_err(anyhow::Error::from)?;
    }

    let mut table = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["vehicles", "capacity", "max_time_ms", "tw_fraction", "method", "instances", "mean_quota", "proven"]
        .map(String::from)
        .to_vec();
    header.extend(strata_cols.iter().map(|c| format!("mean_{c}")));
    table.write_record(&header).map_err(anyhow::Error::from)?;
    let mut unproven = false;
    for (ci, cell) in cells.iter().enumerate() {
        for &m in &args.methods {
            let group: Vec<&Outcome> = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((c, _, mm, _), _)| *c == ci && *mm == m)
                .map(|(_, o)| o)
                .collect();
            let n = group.len() as f64;
            let mean = group.iter().map(|o| o.quota).sum::<f64>() / n;
            let proven = (m == Method::Exact).then(|| group.iter().filter(|o| o.proven == Some(true)).count());
            unproven |= proven.is_some_and(|p| p < group.len());
            let mut row = cell_cols(cell);
            row.extend([m.name().to_string(), group.len().to_string(), mean.to_string(), show(proven)]);
            for s in 0..args.strata.len() {
                row.push((group.iter().map(|o| o.strata[s]).sum::<f64>() / n).to_string());
            }
            table.write_record(&row).map_err(anyhow::Error::from)?;
        }
    }
    let bytes = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| CliError::Internal(anyhow::anyhow!("{e}")));
    run.write("grid.csv", bytes(table)?)?;
    run.write("instances.csv", bytes(detail)?)?;
    run.record("cells", cells.len());
    run.record("instances", instances.len());
    run.finish()?;
    Ok(if unproven { Completion::Unproven } else { Completion::Done })
}
