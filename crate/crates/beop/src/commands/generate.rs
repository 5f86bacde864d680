use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use beop_core::rng::stream;
use beop_core::roadnet::{sample_hazard_instance, sample_instance, split_nodes, Adjacency, SamplingParams};

use super::{pool, Completion};
use crate::error::{CliResult, InputContext};
use crate::formats::{read_graph, InstanceFile, MillisSpan, Span};
use crate::manifest::Run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

/// Sample instances from a road graph.
#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Evacuation points per instance, depot excluded.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Fleet size, or an inclusive range `lo..hi` drawn per instance.
    #[arg(long, default_value = "2")]
    pub vehicles: Span<u32>,
    #[arg(long, default_value = "50")]
    pub capacity: Span<u32>,
    /// Horizon such as `30m`, `1.5h` or `30m..2h`; bare numbers are milliseconds.
    #[arg(long, default_value = "1h")]
    pub max_time: MillisSpan,
    /// Upper bound on the share of points with a deadline.
    #[arg(long, default_value_t = 0.3)]
    pub tw_fraction: f64,
    /// Inclusive demand range per point.
    #[arg(long, default_value = "1..10")]
    pub demand: Span<u32>,
    /// Cut a hazard zone out of the road network for every instance.
    #[arg(long)]
    pub hazard: bool,
    /// Sampled points that fall inside each hazard zone.
    #[arg(long, default_value_t = 3)]
    pub hazard_affected: usize,
    #[arg(long, default_value_t = 100)]
    pub hazard_attempts: u32,
    /// Restrict depot and points to one part of a 70/15/15 node split.
    #[arg(long, requires = "split_seed")]
    pub split: Option<SplitPart>,
    #[arg(long, requires = "split")]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn draw<R: Rng>(span: Span<u64>, rng: &mut R) -> u64 {
    if span.lo == span.hi {
        span.lo
    } else {
        rng.random_range(span.lo..=span.hi)
    }
}

/// Writes `inst_<seed>_<i>.json` for `i < count`. Instance `i` is drawn from
/// its own stream, so the files do not depend on `--jobs`.
pub fn generate(args: &GenerateArgs) -> CliResult<Completion> {
    let graph = read_graph(&args.graph)?;
    let mut run = Run::start("generate", args, Some(args.seed), &[("graph", &args.graph)], &args.out)?;
    let eligible: Vec<usize> = match (args.split, args.split_seed) {
        (Some(part), Some(s)) => {
            let split = split_nodes(graph.nodes.len(), &mut stream(s, &[]));
            match part {
                SplitPart::Train => split.train,
                SplitPart::Validation => split.validation,
                SplitPart::Test => split.test,
            }
        }
        _ => (0..graph.nodes.len()).collect(),
    };
    let adj = Adjacency::new(&graph);
    let hash = run.hash().to_string();
    let widen = |s: Span<u32>| Span {
        lo: s.lo as u64,
        hi: s.hi as u64,
    };
    let files: Vec<CliResult<String>> = pool(args.jobs)?.install(|| {
        (0..args.count)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(args.seed, &[i as u64]);
                let params = SamplingParams {
                    num_points: args.points,
                    num_vehicles: draw(widen(args.vehicles), &mut rng) as u32,
                    capacity: draw(widen(args.capacity), &mut rng) as u32,
                    max_time: draw(args.max_time.0, &mut rng),
                    tw_fraction: args.tw_fraction,
                    demand_range: (args.demand.lo, args.demand.hi),
                };
                let file = if args.hazard {
                    let h = sample_hazard_instance(
                        &graph,
                        &eligible,
                        &params,
                        args.hazard_affected,
                        args.hazard_attempts,
                        &mut rng,
                    )
                    .input(format!("instance {i}"))?;
                    InstanceFile {
                        instance: h.instance,
                        graph_nodes: Some(h.graph_nodes),
                        hazard: Some(h.record),
                        config_hash: Some(hash.clone()),
                    }
                } else {
                    let s = sample_instance(&graph, &adj, &eligible, &params, &mut rng).input(format!("instance {i}"))?;
                    InstanceFile {
                        instance: s.instance,
                        graph_nodes: Some(s.graph_nodes),
                        hazard: None,
                        config_hash: Some(hash.clone()),
                    }
                };
                Ok(serde_json::to_string(&file).map_err(anyhow::Error::from)? + "\n")
            })
            .collect()
    });
    for (i, text) in files.into_iter().enumerate() {
        run.write(&format!("inst_{}_{}.json", args.seed, i), text?)?;
    }
    run.record("instances", args.count);
    run.finish()?;
    Ok(Completion::Done)
}
