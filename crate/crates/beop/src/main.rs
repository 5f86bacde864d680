use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beop::commands::{self, Completion};

/// Bus evacuation planning: instance generation, solvers, MILP export,
/// policy training and stochastic simulation.
#[derive(Parser)]
#[command(name = "beop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic grid road network.
    SynthGraph(commands::SynthGraphArgs),
    /// Add observed trip endpoints to node frequencies.
    CountFrequencies(commands::CountFrequenciesArgs),
    /// Sample instances from a road network.
    Generate(commands::GenerateArgs),
    /// Solve one instance with greedy, exact search or a policy.
    Solve(commands::SolveArgs),
    /// Write the MILP as an LP file, with an optional MIP start.
    ExportMilp(commands::ExportMilpArgs),
    /// Mean quotas over a grid of fleet, capacity, horizon and window settings.
    QuotaGrid(commands::QuotaGridArgs),
    /// Evaluate a policy under random travel times and demands.
    Simulate(commands::SimulateArgs),
    /// Train policy parameters.
    Train(commands::TrainArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SynthGraph(a) => commands::synth_graph(a),
        Command::CountFrequencies(a) => commands::count_frequencies_cmd(a),
        Command::Generate(a) => commands::generate(a),
        Command::Solve(a) => commands::solve(a),
        Command::ExportMilp(a) => commands::export_milp(a),
        Command::QuotaGrid(a) => commands::quota_grid(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Train(a) => commands::train(a),
    };
    match result {
        Ok(Completion::Done) => ExitCode::SUCCESS,
        Ok(Completion::Unproven) => {
            eprintln!("beop: search budget exhausted before optimality was proven");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("beop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
