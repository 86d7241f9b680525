use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use copyless_cli::{cmd_check, cmd_explore, cmd_lint, cmd_run, RunConfig, EXIT_USAGE};
use copyless_core::interp::Bounds;
use copyless_core::verifier::VerifierOptions;

#[derive(Parser)]
#[command(name = "copyless", version, about = "Verify and run copyless message-passing programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lint contracts, check footprints and verify every function.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        verifier: VerifierFlags,
    },
    /// Lint the contracts only.
    Lint {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        verifier: VerifierFlags,
    },
    /// Execute once under a seeded random scheduler and print the trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        bounds: BoundFlags,
    },
    /// Enumerate all interleavings; print each outcome with a witness trace.
    Explore {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bounds: BoundFlags,
        /// Distinct configurations to visit before giving up.
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
    },
}

#[derive(Args)]
struct Common {
    /// A `.cmp` source file.
    path: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifierFlags {
    /// Require endpoints transferred in footprints to be in a sending state.
    #[arg(long)]
    singsharp_send_state: bool,
    /// Treat mixed choice and one-directional final cycles as errors.
    #[arg(long)]
    strict_contracts: bool,
}

#[derive(Args)]
struct BoundFlags {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Iterations after which a loop is cut off.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    loop_bound: u32,
}

impl BoundFlags {
    fn bounds(&self) -> Bounds {
        Bounds { max_steps: self.max_steps as usize, loop_bound: Some(self.loop_bound), ..Bounds::default() }
    }
}

impl VerifierFlags {
    fn options(&self) -> VerifierOptions {
        VerifierOptions {
            singsharp_send_state: self.singsharp_send_state,
            strict_contracts: self.strict_contracts,
            ..VerifierOptions::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let mut cfg = RunConfig::default();
    let (report, json) = match &cli.command {
        Cmd::Check { common, verifier } => {
            cfg.verifier = verifier.options();
            (cmd_check(&common.path, &cfg), common.json)
        }
        Cmd::Lint { common, verifier } => {
            cfg.verifier = verifier.options();
            (cmd_lint(&common.path, &cfg), common.json)
        }
        Cmd::Run { common, seed, bounds } => {
            cfg.seed = *seed;
            cfg.bounds = bounds.bounds();
            (cmd_run(&common.path, &cfg), common.json)
        }
        Cmd::Explore { common, bounds, max_states } => {
            cfg.bounds = Bounds { max_states: *max_states as usize, ..bounds.bounds() };
            (cmd_explore(&common.path, &cfg), common.json)
        }
    };
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    ExitCode::from(report.exit_code() as u8)
}
