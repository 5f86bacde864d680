//! Command implementations. Each command reads its inputs, writes artifacts
//! plus one manifest into `--out`, and reports whether the run was complete.

mod generate;
mod graph;
mod grid;
mod milp;
mod simulate;
mod solve;
mod train;

pub use generate::{generate, GenerateArgs, SplitPart};
pub use graph::{count_frequencies_cmd, synth_graph, CountFrequenciesArgs, SynthGraphArgs};
pub use grid::{quota_grid, stratified_quota, QuotaGridArgs};
pub use milp::{export_milp, ExportMilpArgs};
pub use simulate::{simulate, SimulateArgs};
pub use solve::{solve, solve_instance, DecodeMode, Method, MethodOptions, SolveArgs, Solved};
pub use train::{train, TrainArgs};

use beop_core::{BeopInstance, Millis};

use crate::error::{CliError, CliResult};

/// How a command ended when it did not fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completion {
    Done,
    /// The exact search stopped on a budget before proving optimality.
    Unproven,
}

fn pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(e.into()))
}

/// Fleet, capacity and horizon settings laid over an instance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub vehicles: Option<u32>,
    pub capacity: Option<u32>,
    pub max_time: Option<Millis>,
}

impl Overrides {
    /// A new horizon rescales every deadline below the old horizon by the
    /// same factor; nodes without a window follow the horizon.
    pub fn apply(&self, inst: &BeopInstance) -> BeopInstance {
        let mut out = inst.clone();
        if let Some(k) = self.vehicles {
            out.num_vehicles = k;
        }
        if let Some(c) = self.capacity {
            out.capacity = c;
        }
        if let Some(t) = self.max_time {
            let old = inst.max_time as u128;
            for d in out.deadline.iter_mut() {
                *d = if *d >= inst.max_time {
                    t
                } else {
                    ((*d as u128 * t as u128 + old / 2) / old) as Millis
                };
            }
            out.max_time = t;
        }
        out
    }
}
