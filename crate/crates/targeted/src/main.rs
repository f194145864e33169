use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use targeted::{Command, Invocation};

#[derive(Parser)]
#[command(name = "targeted", version, about = "Targeted learning roadmap: validate, diagnose, estimate, sensitivity, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the data against the declared columns and adjustment set.
    Validate(Common),
    /// Positivity tables and the crude dose table.
    Diagnose(Common),
    /// Super learner nuisance fits, TMLE and propensity diagnostics.
    Estimate(Common),
    /// Causal-gap sensitivity curve, from an inline estimate or a prior report.
    Sensitivity(Common),
    /// Monte-Carlo replication study against a known data-generating process.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json, metadata.json and CSV tables.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replication studies.
    #[arg(long, env = "TARGETED_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Diagnose(a) => (Command::Diagnose, a),
        Cmd::Estimate(a) => (Command::Estimate, a),
        Cmd::Sensitivity(a) => (Command::Sensitivity, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
    };
    let code = targeted::run(&Invocation {
        command,
        config: args.config,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    });
    ExitCode::from(code as u8)
}
