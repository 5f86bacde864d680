//! File formats: graph text, instance and solution JSON, GeoJSON routes,
//! trajectory traces and durations on the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use beop_core::instance::validate_instance;
use beop_core::mdp::{initial_state, step, MdpState, Transition};
use beop_core::policy::PolicyParams;
use beop_core::roadnet::{Edge, GraphNode, HazardRecord, RoadGraph};
use beop_core::{BeopInstance, Millis, Solution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, InputContext};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).input(format!("cannot read {}", path.display()))
}

/// Parses `NODES <N> EDGES <M>`, then `N` lines `id lon lat frequency`,
/// then `M` lines `from to travel_time_ms`. Blank lines and `#` comments
/// are skipped.
pub fn parse_graph(text: &str) -> anyhow::Result<RoadGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| anyhow!("empty graph file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match h.as_slice() {
        ["NODES", n, "EDGES", m] => (n.parse::<usize>()?, m.parse::<usize>()?),
        _ => bail!("header must read `NODES <N> EDGES <M>`, got `{header}`"),
    };
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, line) = lines.next().ok_or_else(|| anyhow!("expected {n} node lines"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            bail!("line {no}: expected `id lon lat frequency`");
        }
        nodes.push(GraphNode {
            id: f[0].parse().with_context(|| format!("line {no}: id"))?,
            lon: f[1].parse().with_context(|| format!("line {no}: lon"))?,
            lat: f[2].parse().with_context(|| format!("line {no}: lat"))?,
            frequency: f[3].parse().with_context(|| format!("line {no}: frequency"))?,
        });
    }
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (no, line) = lines.next().ok_or_else(|| anyhow!("expected {m} edge lines"))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            bail!("line {no}: expected `from to travel_time_ms`");
        }
        edges.push(Edge {
            from: f[0].parse().with_context(|| format!("line {no}: from"))?,
            to: f[1].parse().with_context(|| format!("line {no}: to"))?,
            travel_time: f[2].parse().with_context(|| format!("line {no}: travel time"))?,
        });
    }
    if let Some((no, _)) = lines.next() {
        bail!("line {no}: trailing content after {m} edges");
    }
    let graph = RoadGraph { nodes, edges };
    graph.validate()?;
    Ok(graph)
}

pub fn graph_to_text(graph: &RoadGraph) -> String {
    let mut out = format!("NODES {} EDGES {}\n", graph.nodes.len(), graph.edges.len());
    for v in &graph.nodes {
        let _ = writeln!(out, "{} {} {} {}", v.id, v.lon, v.lat, v.frequency);
    }
    for e in &graph.edges {
        let _ = writeln!(out, "{} {} {}", e.from, e.to, e.travel_time);
    }
    out
}

pub fn read_graph(path: &Path) -> CliResult<RoadGraph> {
    parse_graph(&read_text(path)?).input(format!("bad graph file {}", path.display()))
}

/// Instance JSON plus generation metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(flatten)]
    pub instance: BeopInstance,
    /// Road-network node id of each instance node, depot first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard: Option<HazardRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Reads and validates an instance. The metric flag must agree with the matrix.
pub fn read_instance(path: &Path) -> CliResult<InstanceFile> {
    let file: InstanceFile =
        serde_json::from_str(&read_text(path)?).input(format!("bad instance JSON {}", path.display()))?;
    check_instance(&file.instance).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(file)
}

pub fn check_instance(inst: &BeopInstance) -> Result<(), String> {
    let report = validate_instance(inst);
    if report.is_feasible() {
        Ok(())
    } else {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        Err(msgs.join("; "))
    }
}

/// Every `*.json` file in `dir`, sorted by file name.
pub fn instance_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).input(format!("cannot list {}", dir.display()))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|f| f != "manifest.json") {
            paths.push(p);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn read_instance_dir(dir: &Path) -> CliResult<Vec<(PathBuf, BeopInstance)>> {
    instance_paths(dir)?
        .into_iter()
        .map(|p| read_instance(&p).map(|f| (p, f.instance)))
        .collect()
}

/// Solution JSON: tours, prize and quota, plus statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub tours: Vec<Vec<usize>>,
    pub collected_prize: u64,
    pub quota: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tour_times_ms: Option<Vec<Millis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_bound: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proven_optimal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes_explored: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl SolutionFile {
    pub fn new(inst: &BeopInstance, sol: &Solution, method: &str) -> Self {
        SolutionFile {
            tours: sol.routes(),
            collected_prize: sol.collected_prize,
            quota: sol.quota,
            method: Some(method.to_string()),
            tour_times_ms: Some(sol.tours.iter().map(|t| t.time(inst)).collect()),
            upper_bound: None,
            proven_optimal: None,
            nodes_explored: None,
            config_hash: None,
        }
    }
}

/// Policy parameters with the producing run's hash.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(flatten)]
    pub params: PolicyParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

pub fn read_params(path: &Path) -> CliResult<PolicyParams> {
    let file: ParamsFile =
        serde_json::from_str(&read_text(path)?).input(format!("bad params JSON {}", path.display()))?;
    if !file.params.is_finite() {
        return Err(CliError::input(format!("{}: parameters must be finite with positive temperature", path.display())));
    }
    Ok(file.params)
}

/// One LineString feature per vehicle over the instance coordinates, or
/// `None` when the instance carries no coordinates.
pub fn routes_geojson(inst: &BeopInstance, sol: &Solution, config_hash: &str) -> Option<Value> {
    let coords = inst.coords.as_ref()?;
    let features: Vec<Value> = sol
        .tours
        .iter()
        .map(|t| {
            let line: Vec<[f64; 2]> = t.nodes.iter().map(|&v| coords[v]).collect();
            let prize: u64 = t.customers().map(|v| inst.prize[v] as u64).sum();
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": line},
                "properties": {
                    "vehicle": t.vehicle,
                    "nodes": t.nodes,
                    "time_ms": t.time(inst),
                    "prize": prize,
                },
            })
        })
        .collect();
    Some(json!({
        "type": "FeatureCollection",
        "config_hash": config_hash,
        "features": features,
    }))
}

/// One line of a trajectory trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub state: TraceState,
    pub action: usize,
    pub case: &'static str,
    pub elapsed_after: Millis,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceState {
    pub visited: Vec<usize>,
    pub current: usize,
    pub load: u32,
    pub elapsed: Millis,
    pub vehicles_left: u32,
    pub collected: u64,
}

impl From<&MdpState> for TraceState {
    fn from(s: &MdpState) -> Self {
        TraceState {
            visited: s.visited.iter().collect(),
            current: s.current,
            load: s.load,
            elapsed: s.elapsed,
            vehicles_left: s.vehicles_left,
            collected: s.collected,
        }
    }
}

fn case_name(t: Transition) -> &'static str {
    match t {
        Transition::Visit => "visit",
        Transition::DropOff => "drop_off",
        Transition::EndVehicle => "end_vehicle",
    }
}

/// Replays a solution through the decision process, one record per action.
pub fn trace_solution(inst: &BeopInstance, sol: &Solution) -> anyhow::Result<Vec<TraceRecord>> {
    let mut state = initial_state(inst);
    let mut out = Vec::new();
    let mut push = |state: &mut MdpState, action: usize| -> anyhow::Result<Transition> {
        let o = step(inst, state, action).with_context(|| format!("replaying action {action}"))?;
        out.push(TraceRecord {
            step: out.len(),
            state: TraceState::from(&*state),
            action,
            case: case_name(o.transition),
            elapsed_after: o.next.elapsed,
        });
        *state = o.next;
        Ok(o.transition)
    };
    for tour in &sol.tours {
        if state.is_terminal() {
            break;
        }
        let mut last = Transition::Visit;
        for &v in &tour.nodes[1..] {
            if state.is_terminal() {
                break;
            }
            last = push(&mut state, v)?;
        }
        if !state.is_terminal() && last != Transition::EndVehicle {
            push(&mut state, 0)?;
        }
    }
    Ok(out)
}

/// Duration in milliseconds: `500ms`, `90s`, `30m`, `1.5h`; a bare number is
/// milliseconds.
pub fn parse_millis(s: &str) -> Result<Millis, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("bad duration `{s}`"))?;
    let scale = match unit {
        "" | "ms" => 1.0,
        "s" => 1e3,
        "m" | "min" => 60e3,
        "h" => 3600e3,
        _ => return Err(format!("unknown duration unit `{unit}` in `{s}`")),
    };
    let ms = (value * scale).round();
    if !(ms.is_finite() && ms >= 0.0) {
        return Err(format!("bad duration `{s}`"));
    }
    Ok(ms as Millis)
}

/// Inclusive range written as `a` or `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Span<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Copy + PartialOrd + std::fmt::Debug> Span<T> {
    fn parse_with(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Self, String> {
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (item(a)?, item(b.trim_start_matches('='))?),
            None => {
                let v = item(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        Ok(Span { lo, hi })
    }
}

impl FromStr for Span<u32> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Span::parse_with(s, |x| x.trim().parse::<u32>().map_err(|e| format!("`{x}`: {e}")))
    }
}

/// Duration range, e.g. `30m..2h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MillisSpan(pub Span<Millis>);

impl FromStr for MillisSpan {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Span::parse_with(s, parse_millis).map(MillisSpan)
    }
}

/// Writes `value` as one line of compact JSON.
pub fn json_line(value: &impl Serialize) -> anyhow::Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}
