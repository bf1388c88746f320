//! `bernstein basis|operator|scan <spec.json> [--out DIR] [--grid N]`
//!
//! Exit codes: 0 success, 2 malformed problem file, 3 no operator exists,
//! 4 numerical failure, 1 output I/O failure.

mod commands;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use bernstein_core::Error;
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "bernstein", version, about = "Generalized Bernstein bases and operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Basis,
    Operator,
    Scan,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bernstein basis values (CSV) and coefficients (JSON).
    Basis(Args),
    /// Operator nodes, weights, residuals and chain diagnostics.
    Operator(Args),
    /// Counterexample scan over a range of right endpoints.
    Scan(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Problem file (JSON).
    spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Grid points for CSV output; overrides the problem file.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Spec(String),
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) if e.is_infeasible() => 3,
            CliError::Core(e) => match e {
                Error::ConjugationViolation { .. }
                | Error::InvalidSpectrum(_)
                | Error::InvalidInterval { .. }
                | Error::InvalidArgument(_)
                | Error::NotInSpace(_)
                | Error::NotInSpectrum { .. }
                | Error::OutOfRange { .. }
                | Error::DegreeTooLarge { .. }
                | Error::PreconditionFailed(_) => 2,
                _ => 4,
            },
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Spec(m) => ("spec", m.clone()),
            CliError::Io(m) => ("io", m.clone()),
            CliError::Core(e) => (e.kind(), e.to_string()),
        };
        let mut v = json!({ "error": { "kind": kind, "message": message } });
        if let CliError::Core(Error::Infeasible(report)) = self {
            v["error"]["report"] = serde_json::to_value(report.as_ref()).expect("serializable report");
        }
        v
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Basis(a) => (Kind::Basis, a),
        Command::Operator(a) => (Kind::Operator, a),
        Command::Scan(a) => (Kind::Scan, a),
    };
    let result = spec::ProblemSpec::load(&args.spec).and_then(|mut problem| {
        if let Some(g) = args.grid {
            problem.grid = Some(g);
        }
        std::fs::create_dir_all(&args.out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;
        match kind {
            Kind::Basis => commands::basis(&problem, &args.out),
            Kind::Operator => commands::operator(&problem, &args.out),
            Kind::Scan => commands::scan(&problem, &args.out),
        }
    });
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", serde_json::to_string_pretty(&e.to_json()).expect("serializable error"));
            ExitCode::from(e.exit_code())
        }
    }
}
