//! Static verification and concrete execution of annotated copyless
//! message-passing programs.
//!
//! [`lang::load`] parses and resolves a `.cmp` source; [`verify_program`]
//! runs the symbolic verifier over it and [`interp::run`] /
//! [`interp::explore`] execute it on a concrete heap.

pub mod contracts;
pub mod interp;
pub mod lang;
pub mod logic;
pub mod verifier;

pub use contracts::{lint, Contract, Direction, LintConfig, LintReport, Severity};
pub use interp::{check_soundness, explore, run, Bounds, ExploreReport, Outcome, OutcomeKind, RunReport};
pub use lang::{load, LoadError, ResolvedProgram};
pub use logic::{entails, normalize, subtract, Atom, Perm, SymHeap, Term};
pub use verifier::{verify_program, Reason, Report, Verdict, VerifierOptions};
