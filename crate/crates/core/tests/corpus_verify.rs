mod common;

use copyless_core::lang::load;
use copyless_core::verifier::{verify_program, Reason, VerifierOptions};

fn check(name: &str) -> copyless_core::verifier::Report {
    let prog = load(&common::corpus_file(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    verify_program(&prog, &VerifierOptions::default())
}

#[test]
fn positive_corpus_is_accepted() {
    for name in common::POSITIVE {
        let r = check(name);
        for f in &r.functions {
            if let Some(rej) = f.verdict.rejection() {
                panic!("{name}: `{}` rejected at {}: {:?} {}\n  heap: {}", f.name, rej.site, rej.reason, rej.message, rej.heap);
            }
        }
        assert!(r.footprints.is_empty(), "{name}: {:?}", r.footprints);
        assert!(r.accepted(), "{name}: {:?}", r.contracts);
    }
}

#[test]
fn negative_corpus_is_rejected_for_the_right_reason() {
    for (name, func, reason) in [
        ("invalid_sec3.cmp", "put", Reason::PermissionViolation),
        ("close_mismatch.cmp", "main", Reason::ClosePrecondition),
        ("missing_nocell.cmp", "get", Reason::NonExhaustiveSwitch),
    ] {
        let r = check(name);
        let rej = r.function(func).and_then(|f| f.verdict.rejection()).unwrap_or_else(|| panic!("{name}: {func} accepted"));
        assert_eq!(rej.reason, reason, "{name}: {}", rej.message);
    }
}

#[test]
fn footprint_before_step_changes_a_verdict() {
    // The reflexive close in `get` sends `f` inside its own message, in the
    // state reached after the send.
    let prog = load(&common::corpus_file("cell_or_nocell.cmp")).unwrap();
    let normal = verify_program(&prog, &VerifierOptions::default());
    let flipped = verify_program(&prog, &VerifierOptions { footprint_before_step: true, ..Default::default() });
    assert!(normal.accepted());
    let rej = flipped.function("get").and_then(|f| f.verdict.rejection()).expect("get rejected");
    assert_eq!(rej.reason, Reason::EntailmentFailure);
}

#[test]
fn frame_is_preserved_for_every_accepted_function() {
    use copyless_core::logic::{heap_of, normalize};
    use copyless_core::verifier::verify_function_framed;
    let frame = heap_of("framecell |-> (1, 2)").unwrap();
    for name in common::POSITIVE {
        let prog = load(&common::corpus_file(name)).unwrap();
        for f in &prog.source.functions {
            let r = verify_function_framed(&prog, &f.name, &normalize(&frame), &VerifierOptions::default());
            assert!(r.verdict.is_accepted(), "{name}/{}: {:?}", f.name, r.verdict);
        }
    }
}

fn rejected_after(name: &str, from: &str, to: &str) -> Option<Reason> {
    let text = common::corpus_file(name);
    assert!(text.contains(from), "{name}: `{from}` not found");
    let prog = load(&text.replacen(from, to, 1)).unwrap();
    let r = verify_program(&prog, &VerifierOptions::default());
    r.first_rejection().map(|(_, rej)| rej.reason)
}

#[test]
fn mutated_programs_are_rejected() {
    assert_eq!(rejected_after("lock.cmp", "  send(token, b);\n", "  skip;\n"), Some(Reason::PostMismatch));
    assert_eq!(rejected_after("example_2_2.cmp", "close(x, f);", "skip;"), Some(Reason::PostMismatch));
    assert_eq!(rejected_after("multi_readers.cmp", "z = x.1;", "x.1 = 8;"), Some(Reason::PermissionViolation));
    assert_eq!(
        rejected_after("two_producers.cmp", "message cell(x) [x |-> (_, _) * src ~>[1/2] (C<1>, _)];", "message cell(x) [x |-> (_, _)];"),
        Some(Reason::PostMismatch)
    );
    assert_eq!(
        rejected_after("seller_buyers.cmp", "  close(e, f);\n", "  skip;\n"),
        Some(Reason::PostMismatch)
    );
    assert!(rejected_after("internal_choice.cmp", "case receive(notoken, f):\n      close(e, f);", "case receive(notoken, f):\n      skip;").is_some());
}
