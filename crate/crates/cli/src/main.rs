// SPDX-License-Identifier: Apache-2.0
//! `nrpq`: answer nested path queries over knowledge bases and graphs.
//!
//! Exit status is 0 on success, 1 on a user error (unreadable file, parse
//! error, engine not applicable) and 2 when an internal check fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "nrpq", version, about = "Nested two-way regular path queries over ELHI-bottom knowledge bases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the certain answers of a query, or true/false if it is Boolean.
    Answer(AnswerArgs),
    /// Print `sat` or `unsat` for a knowledge base.
    CheckSat {
        #[arg(long)]
        kb: PathBuf,
    },
    /// Print the rewritten query set over the TBox of a knowledge base.
    Rewrite {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Print the TBox and plain query that replace nested tests.
    Translate {
        #[arg(long)]
        query: PathBuf,
        /// Keep fresh names away from this knowledge base's signature.
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Write hardness instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Evaluate a query over a closed-world graph.
    EvalGraph {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the Loop and FLoop tables of a query over a TBox, without
    /// pending tests.
    DumpLoops {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct AnswerArgs {
    #[arg(long)]
    pub kb: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, value_enum, default_value_t = Engine::Rewrite)]
    pub engine: Engine,
    /// Anonymous depth of the materialization used by the graph engine.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub json: bool,
    /// Evaluate rewritten queries on the thread pool.
    #[arg(long)]
    pub parallel: bool,
    /// Give up when rewriting yields more queries than this.
    #[arg(long, default_value_t = 100_000)]
    pub max_rewritings: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    /// Rewriting into queries over the individuals.
    Rewrite,
    /// Instance checks, one per pair; single path atoms only.
    Reduction,
    /// Direct evaluation over the ABox or a materialization.
    Graph,
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// A graph and a query deciding entailment of a Horn theory's goal.
    Horn {
        /// Theory file; a random theory is drawn from `--seed` without one.
        theory: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// A knowledge base and a Boolean query deciding acceptance of an
    /// alternating machine.
    Atm {
        /// Machine file; `--corpus NAME` picks a built-in machine instead.
        machine: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<String>,
        #[arg(long, value_enum, default_value_t = Flavor::DlLite)]
        flavor: Flavor,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    DlLite,
    El,
}

/// Why a command failed, which fixes the exit status.
#[derive(Debug)]
pub enum Failure {
    User(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::User(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::run(&cli.command, &mut out)));
    print!("{out}");
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::User(e))) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Internal(e))) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("internal error: the engine panicked");
            ExitCode::from(2)
        }
    }
}
