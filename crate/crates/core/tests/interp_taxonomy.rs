mod common;

use std::collections::BTreeSet;

use copyless_core::interp::{explore, run, Bounds, Outcome, OutcomeKind};
use copyless_core::lang::load;

fn kinds(name: &str) -> BTreeSet<OutcomeKind> {
    let prog = load(&common::corpus_file(name)).unwrap();
    let r = explore(&prog, &Bounds::default());
    assert!(r.complete, "{name}: budget exhausted");
    r.kinds()
}

#[test]
fn p0_both_deadlocks_and_meets_an_unspecified_reception() {
    assert_eq!(kinds("p0.cmp"), [OutcomeKind::UnspecifiedReception, OutcomeKind::Deadlock].into());
}

#[test]
fn p1_only_deadlocks() {
    assert_eq!(kinds("p1.cmp"), [OutcomeKind::Deadlock].into());
}

#[test]
fn endpoint_transfer_always_finishes_clean() {
    assert_eq!(kinds("example_1_1.cmp"), [OutcomeKind::FinishedClean].into());
}

#[test]
fn dropping_get_leaks() {
    let prog = load(&common::corpus_file("leaky_1_1.cmp")).unwrap();
    for seed in 0..20 {
        let r = run(&prog, seed, &Bounds::default());
        match r.outcome {
            Outcome::FinishedLeak { addresses } => assert_eq!(addresses.len(), 2),
            other => panic!("seed {seed}: {other:?}"),
        }
    }
}

#[test]
fn concurrent_writes_race() {
    let text = "main() [emp] { x = new(); [emp] { x.1 = 1; } || [emp] { x.1 = 2; } dispose(x); } [emp]";
    let prog = load(text).unwrap();
    assert!(explore(&prog, &Bounds::default()).kinds().contains(&OutcomeKind::DataRace));
}

#[test]
fn runs_are_deterministic() {
    for name in ["cell_or_nocell.cmp", "two_producers.cmp", "lock.cmp"] {
        let prog = load(&common::corpus_file(name)).unwrap();
        for seed in [1, 7, 42] {
            let a = run(&prog, seed, &Bounds::default());
            let b = run(&prog, seed, &Bounds::default());
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }
}
