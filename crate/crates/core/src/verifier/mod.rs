//! Forward symbolic execution of annotated functions.

mod exec;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::contracts::{lint, LintConfig, LintReport, Severity};
use crate::lang::{ResolvedProgram, Site};
use crate::logic::{check_precise, expand, Atom, Fresh, Term};

pub use exec::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Reason {
    OwnershipMissing,
    PermissionViolation,
    ContractViolation,
    EntailmentFailure,
    NonExhaustiveSwitch,
    ClosePrecondition,
    SpawnLeak,
    PostMismatch,
    /// A variable assigned in one parallel branch is used by a sibling.
    VariableConflict,
    /// An annotation could not be expanded (e.g. a permission outside (0, 1]).
    BadAnnotation,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    pub line: u32,
    pub col: u32,
}

impl From<Site> for Location {
    fn from(s: Site) -> Self {
        Location { line: s.line, col: s.col }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub site: Location,
    pub reason: Reason,
    pub message: String,
    /// The symbolic heap at the failing point.
    pub heap: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub site: Location,
    pub kind: WarningKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WarningKind {
    UnsatAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected(Rejection),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Rejected(r) => Some(r),
            Verdict::Accepted => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionReport {
    pub name: String,
    pub verdict: Verdict,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FootprintIssue {
    pub tag: String,
    pub site: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub contracts: Vec<LintReport>,
    pub footprints: Vec<FootprintIssue>,
    pub functions: Vec<FunctionReport>,
}

impl Report {
    pub fn accepted(&self) -> bool {
        self.contracts.iter().all(LintReport::passed)
            && self.footprints.is_empty()
            && self.functions.iter().all(|f| f.verdict.is_accepted())
    }

    pub fn function(&self, name: &str) -> Option<&FunctionReport> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// The first rejection, in declaration order.
    pub fn first_rejection(&self) -> Option<(&str, &Rejection)> {
        self.functions.iter().find_map(|f| f.verdict.rejection().map(|r| (f.name.as_str(), r)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifierOptions {
    /// Force error severity for every contract check, ignoring file pragmas.
    pub strict_contracts: bool,
    /// Require endpoints inside footprints to be in a sending state.
    pub singsharp_send_state: bool,
    /// Carve the footprint out before stepping the contract on send. Only
    /// for demonstrating that the default order matters.
    pub footprint_before_step: bool,
    /// Skip ownership and permission checks on cell operations. Only for
    /// mutation tests of the soundness cross-check.
    pub lax_heap_ops: bool,
}

pub fn lint_config(prog: &ResolvedProgram, opts: &VerifierOptions) -> LintConfig {
    if opts.strict_contracts {
        LintConfig { mixed_choice: Severity::Error, cycle: Severity::Error }
    } else {
        prog.lint
    }
}

pub fn verify_program(prog: &ResolvedProgram, opts: &VerifierOptions) -> Report {
    let cfg = lint_config(prog, opts);
    let contracts = prog.contracts.values().map(|c| lint(c, &cfg)).collect();
    let footprints = check_footprints(prog, opts);
    let functions = prog
        .source
        .functions
        .iter()
        .map(|f| verify_function(prog, &f.name, opts))
        .collect();
    Report { contracts, footprints, functions }
}

/// Precision of every footprint, plus the optional sending-state lint.
pub fn check_footprints(prog: &ResolvedProgram, opts: &VerifierOptions) -> Vec<FootprintIssue> {
    let mut issues = Vec::new();
    for m in &prog.source.messages {
        let mut env: BTreeMap<String, Term> = BTreeMap::new();
        for name in m.params.iter().chain(&prog.source.globals).chain(std::iter::once(&"src".to_string())) {
            env.insert(name.clone(), Term::var(name));
        }
        let roots: BTreeSet<Term> = env.values().cloned().collect();
        let mut fresh = Fresh::new();
        let fp = match expand(&prog.source.predicates, &m.footprint, &env, &mut fresh) {
            Ok(fp) => fp,
            Err(e) => {
                issues.push(FootprintIssue { tag: m.tag.clone(), site: m.site.into(), message: e.to_string() });
                continue;
            }
        };
        if !check_precise(&fp, &roots) {
            issues.push(FootprintIssue {
                tag: m.tag.clone(),
                site: m.site.into(),
                message: format!("footprint of `{}` is not precise: {fp}", m.tag),
            });
        }
        if opts.singsharp_send_state {
            for atom in &fp.atoms {
                if let Atom::Endpoint { contract, state, .. } = atom {
                    let sending = prog
                        .contract(&contract.name, contract.dual)
                        .is_some_and(|c| c.is_sending_state(state));
                    if !sending {
                        issues.push(FootprintIssue {
                            tag: m.tag.clone(),
                            site: m.site.into(),
                            message: format!(
                                "footprint of `{}` transfers an endpoint in non-sending state {contract}<{state}>",
                                m.tag
                            ),
                        });
                    }
                }
            }
        }
    }
    issues
}

pub fn verify_function(prog: &ResolvedProgram, name: &str, opts: &VerifierOptions) -> FunctionReport {
    let mut ex = exec::Exec::new(prog, opts);
    let verdict = match ex.function_framed(name, &crate::logic::SymHeap::emp()) {
        Ok(()) => Verdict::Accepted,
        Err(r) => Verdict::Rejected(r),
    };
    FunctionReport { name: name.to_string(), verdict, warnings: ex.warnings }
}

/// Verifies `name` with `frame` starred onto both its pre- and postcondition.
pub fn verify_function_framed(
    prog: &ResolvedProgram,
    name: &str,
    frame: &crate::logic::SymHeap,
    opts: &VerifierOptions,
) -> FunctionReport {
    let mut ex = exec::Exec::new(prog, opts);
    let verdict = match ex.function_framed(name, frame) {
        Ok(()) => Verdict::Accepted,
        Err(r) => Verdict::Rejected(r),
    };
    FunctionReport { name: name.to_string(), verdict, warnings: ex.warnings }
}
