use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use beop_core::exact::{load_warm_start, MilpModel};
use beop_core::greedy::greedy_solve;
use beop_core::instance::check_feasible;
use beop_core::Solution;

use super::Completion;
use crate::error::{CliError, CliResult, InputContext};
use crate::formats::{read_instance, read_text, SolutionFile};
use crate::manifest::Run;

/// Write the mixed-integer model as an LP file, optionally with a MIP start.
#[derive(Args, Debug, Serialize)]
pub struct ExportMilpArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Depot-to-depot segments modelled per vehicle.
    #[arg(long, default_value_t = 2)]
    pub subtours: usize,
    /// Solution JSON to turn into a MIP start.
    #[arg(long, conflicts_with = "warm_start_greedy")]
    pub warm_start: Option<PathBuf>,
    /// Use the greedy plan as the MIP start.
    #[arg(long)]
    pub warm_start_greedy: bool,
}

pub fn export_milp(args: &ExportMilpArgs) -> CliResult<Completion> {
    let inst = read_instance(&args.instance)?.instance;
    let model = MilpModel::build(&inst, args.subtours).input("cannot build the model")?;
    let start: Option<Solution> = match (&args.warm_start, args.warm_start_greedy) {
        (Some(path), _) => {
            let file: SolutionFile = serde_json::from_str(&read_text(path)?)
                .input(format!("bad solution JSON {}", path.display()))?;
            let sol = Solution::from_routes(&inst, file.tours);
            let report = check_feasible(&inst, &sol);
            if !report.is_feasible() {
                let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
                return Err(CliError::input(format!("warm start is infeasible: {}", msgs.join("; "))));
            }
            Some(sol)
        }
        (None, true) => Some(greedy_solve(&inst)),
        (None, false) => None,
    };
    let mst = match &start {
        Some(sol) => Some(load_warm_start(&inst, sol, args.subtours).input("cannot use the warm start")?),
        None => None,
    };

    let mut inputs = vec![("instance", args.instance.as_path())];
    if let Some(p) = &args.warm_start {
        inputs.push(("warm_start", p.as_path()));
    }
    let mut run = Run::start("export-milp", args, None, &inputs, &args.out)?;
    let hash_line = format!("\\ config_hash: {}\n", run.hash());
    run.write("model.lp", hash_line + &model.to_lp())?;
    if let Some(mst) = mst {
        let (head, rest) = mst.split_once('\n').unwrap_or((&mst, ""));
        run.write("warm_start.mst", format!("{head}\n# config_hash: {}\n{rest}", run.hash()))?;
    }
    run.record("variables", model.vars.len());
    run.record("constraints", model.rows.len());
    if let Some(sol) = &start {
        run.record("warm_start_prize", sol.collected_prize);
    }
    run.finish()?;
    Ok(Completion::Done)
}
