mod common;

use copyless_core::interp::{check_soundness, explore, run, Bounds, OutcomeKind};
use copyless_core::lang::load;
use copyless_core::verifier::{verify_program, Reason, VerifierOptions};
use proptest::prelude::*;

const INTERESTING: [&str; 6] =
    ["example_1_1.cmp", "p0.cmp", "p1.cmp", "leaky_1_1.cmp", "cell_or_nocell.cmp", "lock.cmp"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_run_outcome_is_explored(seed in any::<u64>(), which in 0..INTERESTING.len()) {
        let prog = load(&common::corpus_file(INTERESTING[which])).unwrap();
        let bounds = Bounds::default();
        let r = run(&prog, seed, &bounds);
        let all = explore(&prog, &bounds);
        prop_assert!(all.complete);
        prop_assert!(all.kinds().contains(&r.outcome.kind()), "{:?} not in {:?}", r.outcome, all.kinds());
    }
}

/// Turning the `cell` footprint into `emp` lets `put` keep and dispose a cell
/// it has also sent. Only a verifier that skips heap-operation checks accepts
/// the result, and exploration then exposes the bug.
#[test]
fn lax_verifier_is_caught_by_the_cross_check() {
    let text = common::corpus_file("cell_or_nocell.cmp")
        .replace("message cell(y) [y |-> (_, _)];", "message cell(y) [emp];")
        .replace("send(cell, e, x);", "send(cell, e, x);\n    dispose(x);");
    let prog = load(&text).unwrap();

    let strict = verify_program(&prog, &VerifierOptions::default());
    let (func, rej) = strict.first_rejection().expect("strict verifier rejects the mutant");
    assert_eq!((func, rej.reason), ("get", Reason::OwnershipMissing), "{}", rej.message);

    let lax = verify_program(&prog, &VerifierOptions { lax_heap_ops: true, ..Default::default() });
    assert!(lax.accepted(), "{:?}", lax.first_rejection());

    let s = check_soundness(&prog, &Bounds::default());
    assert!(!s.passed);
    assert!(s.violations.contains(&OutcomeKind::MemoryViolation), "{:?}", s.violations);
}
