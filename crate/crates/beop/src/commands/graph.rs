use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use beop_core::rng::stream;
use beop_core::roadnet::{count_frequencies, grid_graph, GridSpec};

use super::Completion;
use crate::error::{CliError, CliResult, InputContext};
use crate::formats::{graph_to_text, read_graph};
use crate::manifest::Run;

pub const GRAPH_NAME: &str = "graph.txt";

/// Build a jittered grid road network.
#[derive(Args, Debug, Serialize)]
pub struct SynthGraphArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub rows: usize,
    #[arg(long, default_value_t = 12)]
    pub cols: usize,
    /// Grid spacing in degrees.
    #[arg(long, default_value_t = 0.004)]
    pub spacing: f64,
    /// Driving speed in meters per second.
    #[arg(long, default_value_t = 9.0)]
    pub speed: f64,
    #[arg(long, default_value_t = 0.2)]
    pub jitter: f64,
    #[arg(long, default_value_t = 50)]
    pub max_frequency: u64,
    #[arg(long, default_value_t = -122.51, allow_hyphen_values = true)]
    pub origin_lon: f64,
    #[arg(long, default_value_t = 37.71, allow_hyphen_values = true)]
    pub origin_lat: f64,
}

fn with_hash(text: String, hash: &str) -> String {
    format!("# config_hash: {hash}\n{text}")
}

pub fn synth_graph(args: &SynthGraphArgs) -> CliResult<Completion> {
    if args.rows == 0 || args.cols == 0 || args.rows * args.cols < 2 {
        return Err(CliError::input("the grid needs at least two nodes"));
    }
    if !(args.speed > 0.0 && args.spacing > 0.0 && (0.0..1.0).contains(&args.jitter)) {
        return Err(CliError::input("speed and spacing must be positive and jitter in [0, 1)"));
    }
    let spec = GridSpec {
        rows: args.rows,
        cols: args.cols,
        origin: [args.origin_lon, args.origin_lat],
        spacing_deg: args.spacing,
        speed_mps: args.speed,
        jitter: args.jitter,
        max_frequency: args.max_frequency.max(1),
    };
    let mut run = Run::start("synth-graph", args, Some(args.seed), &[], &args.out)?;
    let graph = grid_graph(&spec, &mut stream(args.seed, &[]));
    graph.validate().map_err(|e| CliError::Internal(e.into()))?;
    let text = with_hash(graph_to_text(&graph), run.hash());
    run.write(GRAPH_NAME, text)?;
    run.record("nodes", graph.nodes.len());
    run.record("edges", graph.edges.len());
    run.finish()?;
    Ok(Completion::Done)
}

/// Add observed pickup and drop-off locations to node frequencies.
#[derive(Args, Debug, Serialize)]
pub struct CountFrequenciesArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// CSV with a header. Every `<prefix>lon` column paired with a
    /// `<prefix>lat` column (for example `pickup_lon`, `pickup_lat`)
    /// contributes one point per row.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_points(path: &std::path::Path) -> anyhow::Result<Vec<[f64; 2]>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let pairs: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let prefix = h.strip_suffix("lon")?;
            let lat = headers.iter().position(|g| g.strip_suffix("lat") == Some(prefix))?;
            Some((i, lat))
        })
        .collect();
    if pairs.is_empty() {
        return Err(anyhow!("no matching `<prefix>lon` / `<prefix>lat` columns"));
    }
    let mut points = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        for &(lon, lat) in &pairs {
            let parse = |i: usize| -> anyhow::Result<f64> {
                rec.get(i)
                    .ok_or_else(|| anyhow!("row {}: missing column", row + 1))?
                    .trim()
                    .parse()
                    .map_err(|e| anyhow!("row {}: {e}", row + 1))
            };
            points.push([parse(lon)?, parse(lat)?]);
        }
    }
    Ok(points)
}

pub fn count_frequencies_cmd(args: &CountFrequenciesArgs) -> CliResult<Completion> {
    let mut graph = read_graph(&args.graph)?;
    let points = read_points(&args.points).input(format!("bad points CSV {}", args.points.display()))?;
    let mut run = Run::start(
        "count-frequencies",
        args,
        None,
        &[("graph", &args.graph), ("points", &args.points)],
        &args.out,
    )?;
    count_frequencies(&mut graph, &points);
    let text = with_hash(graph_to_text(&graph), run.hash());
    run.write(GRAPH_NAME, text)?;
    run.record("points", points.len());
    run.finish()?;
    Ok(Completion::Done)
}
