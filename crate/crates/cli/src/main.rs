//! `sparse-ldp`: sampling, empirical measures, rate evaluation, identity
//! checks and Gibbs conditioning from the command line.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 on an error, which is printed to stderr as JSON.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use commands::{empirical, extend, gibbs, rate, sample, verify};
use serde_json::json;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "sparse-ldp", version, about = "Large deviations of marked sparse random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    Sample(sample::SampleArgs),
    Empirical(empirical::EmpiricalArgs),
    Rate(rate::RateArgs),
    Verify(verify::VerifyArgs),
    Gibbs(gibbs::GibbsArgs),
    Extend(extend::ExtendArgs),
}

fn error_json(e: &anyhow::Error) -> serde_json::Value {
    match e.downcast_ref::<sparse_ldp::Error>() {
        Some(lib) => json!({ "error": lib, "message": lib.to_string() }),
        None => json!({ "error": { "kind": "usage" }, "message": format!("{e:#}") }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sample(a) => sample::run(a),
        Command::Empirical(a) => empirical::run(a),
        Command::Rate(a) => rate::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Gibbs(a) => gibbs::run(a),
        Command::Extend(a) => extend::run(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
