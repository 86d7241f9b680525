//! The `copyless` command line: check, lint, run and explore `.cmp` programs.
//!
//! Every command produces a [`CliReport`]; its exit code depends only on the
//! report body (see [`CliReport::exit_code`]).

use std::fmt::Write as _;
use std::path::Path;

use copyless_core::contracts::{lint, LintReport};
use copyless_core::interp::{self, Bounds, ExploreReport, Outcome, RunReport};
use copyless_core::lang::{load, LoadError, ResolvedProgram};
use copyless_core::verifier::{lint_config, verify_program, Report, Verdict, VerifierOptions};
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_RUNTIME_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Check,
    Lint,
    Run,
    Explore,
}

/// Settings shared by all commands. `seed` only matters to `run`.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub verifier: VerifierOptions,
    pub bounds: Bounds,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Load { path: String, source: LoadError },
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col: Option<u32>,
}

impl From<&InputError> for ErrorReport {
    fn from(e: &InputError) -> Self {
        let loc = match e {
            InputError::Load { source, .. } => source.location(),
            InputError::Read { .. } => None,
        };
        ErrorReport { message: e.to_string(), line: loc.map(|l| l.0), col: loc.map(|l| l.1) }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Body {
    Check(Report),
    Lint { contracts: Vec<LintReport> },
    Run(RunReport),
    Explore(ExploreReport),
    Error(ErrorReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct CliReport {
    pub file: String,
    pub command: Command,
    pub exit_code: i32,
    #[serde(flatten)]
    pub body: Body,
}

impl CliReport {
    fn new(file: &Path, command: Command, body: Body) -> Self {
        let exit_code = exit_code(&body);
        CliReport { file: file.display().to_string(), command, exit_code, body }
    }

    pub fn exit_code(&self) -> i32 {
        self.exit_code
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.body {
            Body::Check(r) => check_text(&mut out, r),
            Body::Lint { contracts } => lint_text(&mut out, contracts),
            Body::Run(r) => run_text(&mut out, r),
            Body::Explore(r) => explore_text(&mut out, r),
            Body::Error(e) => {
                let _ = writeln!(out, "error: {}", e.message);
            }
        }
        out
    }
}

/// 0 when everything passed, 1 for a verification or lint failure, 2 when a
/// run reached an error outcome, 3 when the input could not be loaded.
pub fn exit_code(body: &Body) -> i32 {
    let bad = |o: &Outcome| !o.kind().is_benign();
    match body {
        Body::Check(r) if !r.accepted() => EXIT_REJECTED,
        Body::Lint { contracts } if !contracts.iter().all(LintReport::passed) => EXIT_REJECTED,
        Body::Run(r) if bad(&r.outcome) => EXIT_RUNTIME_ERROR,
        Body::Explore(r) if r.kinds().iter().any(|k| !k.is_benign()) => EXIT_RUNTIME_ERROR,
        Body::Error(_) => EXIT_USAGE,
        _ => EXIT_OK,
    }
}

pub fn load_file(path: &Path) -> Result<ResolvedProgram, InputError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Read { path: shown.clone(), source })?;
    load(&text).map_err(|source| InputError::Load { path: shown, source })
}

fn with_program(path: &Path, command: Command, f: impl FnOnce(&ResolvedProgram) -> Body) -> CliReport {
    let body = match load_file(path) {
        Ok(prog) => f(&prog),
        Err(e) => Body::Error((&e).into()),
    };
    CliReport::new(path, command, body)
}

pub fn cmd_check(path: &Path, cfg: &RunConfig) -> CliReport {
    with_program(path, Command::Check, |p| Body::Check(verify_program(p, &cfg.verifier)))
}

pub fn cmd_lint(path: &Path, cfg: &RunConfig) -> CliReport {
    with_program(path, Command::Lint, |p| {
        let lc = lint_config(p, &cfg.verifier);
        Body::Lint { contracts: p.contracts.values().map(|c| lint(c, &lc)).collect() }
    })
}

pub fn cmd_run(path: &Path, cfg: &RunConfig) -> CliReport {
    with_program(path, Command::Run, |p| Body::Run(interp::run(p, cfg.seed, &cfg.bounds)))
}

pub fn cmd_explore(path: &Path, cfg: &RunConfig) -> CliReport {
    with_program(path, Command::Explore, |p| Body::Explore(interp::explore(p, &cfg.bounds)))
}

fn lint_text(out: &mut String, contracts: &[LintReport]) {
    for r in contracts {
        let status = if r.passed() { "ok" } else { "FAILED" };
        let _ = writeln!(out, "contract {}: {status}", r.contract);
        for f in &r.findings {
            let _ = writeln!(out, "  {:?} [{:?}] {}", f.severity, f.check, f.message);
        }
    }
}

fn check_text(out: &mut String, r: &Report) {
    lint_text(out, &r.contracts);
    for f in &r.footprints {
        let _ = writeln!(out, "footprint {} at {}: {}", f.tag, f.site, f.message);
    }
    for f in &r.functions {
        match &f.verdict {
            Verdict::Accepted => {
                let _ = writeln!(out, "function {}: accepted", f.name);
            }
            Verdict::Rejected(rej) => {
                let _ = writeln!(out, "function {}: REJECTED at {}: {} ({})", f.name, rej.site, rej.reason, rej.message);
                let _ = writeln!(out, "  heap: {}", rej.heap);
            }
        }
        for w in &f.warnings {
            let _ = writeln!(out, "  warning at {}: {:?} {}", w.site, w.kind, w.message);
        }
    }
    let _ = writeln!(out, "{}", if r.accepted() { "verified" } else { "not verified" });
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::FinishedClean => "FinishedClean".into(),
        Outcome::FinishedLeak { addresses } => format!("FinishedLeak (addresses {addresses:?})"),
        Outcome::Error(f) => format!("{:?} in thread {} at {}: {}", f.kind, f.thread, f.site, f.message),
        Outcome::Deadlock { blocked } => format!("Deadlock (blocked threads {blocked:?})"),
        Outcome::Truncated => "Truncated".into(),
    }
}

fn run_text(out: &mut String, r: &RunReport) {
    for line in &r.trace {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "outcome: {}", outcome_text(&r.outcome));
    if r.step_limit {
        let _ = writeln!(out, "(step limit reached)");
    }
}

fn explore_text(out: &mut String, r: &ExploreReport) {
    let kinds: Vec<String> = r.kinds().iter().map(|k| k.to_string()).collect();
    let _ = writeln!(out, "outcomes: {{{}}}", kinds.join(", "));
    let _ = writeln!(out, "states: {}{}", r.states, if r.complete { "" } else { " (budget exhausted)" });
    for (kind, w) in &r.outcomes {
        let _ = writeln!(out, "\nwitness for {kind}: {}", outcome_text(&w.outcome));
        for line in &w.trace {
            let _ = writeln!(out, "  {line}");
        }
    }
}
