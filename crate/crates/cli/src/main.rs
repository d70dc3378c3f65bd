//! `sprout`: batch front-end for the safety wrapper.
//!
//! Exit codes: 0 success, 1 internal fault, 2 bad input or usage.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonArgs;

#[derive(Parser)]
#[command(
    name = "sprout",
    version,
    about = "Safety wrapper experiments for black-box classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score held-out rows with every uncertainty measure and write the measures CSV.
    Measures(CommonArgs),
    /// Train an adjudicator bundle from one or more measures CSVs.
    TrainAdjudicator {
        #[command(flatten)]
        common: CommonArgs,
        /// Omit when the misclassification estimate reaches this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Evaluate the wrapped classifier on held-out rows.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Use the flag-revealing adjudicator that omits exactly the misclassifications.
        #[arg(long)]
        oracle: bool,
        /// Per-point trace CSV.
        #[arg(long)]
        trace: Option<std::path::PathBuf>,
    },
    /// Rank measures by their importance in a forest-backed bundle.
    Importance(CommonArgs),
    /// Write a synthetic Gaussian-blob dataset.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 4000)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        features: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 1.2)]
        separation: f64,
    },
}

/// A problem with the invocation or its inputs.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn is_input_error(e: &sprout_core::Error) -> bool {
    use sprout_core::Error as E;
    match e {
        E::Component { source, .. } => is_input_error(source),
        E::Divergence { .. } => false,
        _ => true,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<sprout_core::Error>() {
            return if is_input_error(e) { 2 } else { 1 };
        }
    }
    1
}

/// The error chain, skipping causes their parent message already spells out.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Measures(args) => commands::measures(&args),
        Command::TrainAdjudicator { common, threshold } => {
            commands::train_adjudicator(&common, threshold)
        }
        Command::Evaluate {
            common,
            oracle,
            trace,
        } => commands::evaluate(&common, oracle, trace.as_deref()),
        Command::Importance(args) => commands::importance(&args),
        Command::Synth {
            common,
            rows,
            features,
            classes,
            separation,
        } => commands::synth(&common, rows, features, classes, separation),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
