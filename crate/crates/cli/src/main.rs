//! `flowdmd`: model and forecast weekly origin-destination flows with
//! rank-truncated DMD.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "flowdmd",
    version,
    about = "Model and forecast weekly origin-destination flows with dynamic mode decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse weekly O-D flow CSVs into a snapshot-matrix file
    Ingest(commands::IngestArgs),
    /// Fit DMD models at one or more target ranks
    Fit(commands::FitArgs),
    /// Forecast forward from a fitted model
    Predict(commands::PredictArgs),
    /// Score a fitted model against held-out truth weeks
    Evaluate(commands::EvaluateArgs),
    /// Singular-value spectrum of a snapshot window
    Spectrum(commands::SpectrumArgs),
    /// Plot truth and forecast curves for one place pair
    Plot(commands::PlotArgs),
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Ingest(args) => commands::run_ingest(args),
        Command::Fit(args) => commands::run_fit(args),
        Command::Predict(args) => commands::run_predict(args),
        Command::Evaluate(args) => commands::run_evaluate(args),
        Command::Spectrum(args) => commands::run_spectrum(args),
        Command::Plot(args) => commands::run_plot(args),
    }
}
