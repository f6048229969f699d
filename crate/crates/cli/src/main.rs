//! `sparse-fdr`: classify data, evaluate risks and bounds, sweep grids, simulate.

mod args;
mod classify;
mod config;
mod grid;
mod output;
mod risk;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sparse-fdr", version, about = "FDR thresholding as sparse classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label observations with the FDR threshold
    Classify(classify::ClassifyArgs),
    /// Thresholds, risks and bounds of one model
    Risk(risk::RiskArgs),
    /// Relative excess risks over a (beta, C) grid
    Grid(grid::GridArgs),
    /// Monte Carlo risks and threshold profiles
    Simulate(simulate::SimulateArgs),
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => classify::run(a),
        Command::Risk(a) => risk::run(a),
        Command::Grid(a) => grid::run(a),
        Command::Simulate(a) => simulate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
