//! Shared helpers for the criterion benchmarks in `benches/`.

use std::path::PathBuf;

use copyless_core::{load, ResolvedProgram};

/// The programs the verifier accepts; each is also explored exhaustively.
pub const VERIFIED: [&str; 8] = [
    "example_2_2",
    "cell_or_nocell",
    "multi_readers",
    "two_producers",
    "internal_choice",
    "client_server",
    "lock",
    "seller_buyers",
];

pub fn corpus_program(name: &str) -> ResolvedProgram {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.cmp"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}
