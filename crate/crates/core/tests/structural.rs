mod common;

use std::collections::BTreeSet;

use copyless_core::contracts::{simple_cycles, Direction};
use copyless_core::lang::{load, parse, render, resolve};
use copyless_core::logic::{heap_of, normalize};
use copyless_core::verifier::{verify_function, Reason, VerifierOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cycle_oracle(c: &copyless_core::contracts::Contract) -> BTreeSet<String> {
    let mut bad = BTreeSet::new();
    for cycle in simple_cycles(c) {
        let dirs: BTreeSet<Direction> = cycle.iter().map(|e| e.1).collect();
        if dirs.len() == 1 {
            bad.extend(cycle.iter().map(|e| e.0.clone()).filter(|q| c.is_final(q)));
        }
    }
    bad
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dual_is_an_involution(seed in any::<u64>()) {
        let c = common::gen_contract(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let d = c.dual();
        prop_assert_eq!(d.dual(), c.clone());
        for ((q, dir, m), to) in &c.delta {
            prop_assert_eq!(d.successor(q, dir.flip(), m).unwrap(), Some(to.as_str()));
        }
    }

    #[test]
    fn cycle_check_matches_simple_cycles(seed in any::<u64>()) {
        let c = common::gen_contract(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let got: BTreeSet<String> = c.check_cycle_condition().into_iter().collect();
        prop_assert_eq!(got, cycle_oracle(&c));
    }

    #[test]
    fn choices_are_the_receivable_tags(seed in any::<u64>()) {
        let c = common::gen_contract(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        for q in &c.states {
            let want: BTreeSet<String> =
                c.outgoing(q).filter(|(d, _, _)| *d == Direction::Recv).map(|(_, m, _)| m.to_string()).collect();
            prop_assert_eq!(c.choices(q).unwrap(), want);
        }
    }

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>()) {
        let (a, b) = common::gen_pair(&mut ChaCha8Rng::seed_from_u64(seed));
        for text in [a, b] {
            let once = normalize(&heap_of(&text).unwrap());
            prop_assert_eq!(normalize(&once), once.clone(), "{}", text);
        }
    }

    /// A send at permission below one is rejected exactly when it moves the state.
    #[test]
    fn fractional_send_only_on_self_loops(num in 1i64..=4, moves in any::<bool>()) {
        let perm = if num == 4 { "1".to_string() } else { format!("{num}/4") };
        let target = if moves { 2 } else { 1 };
        let text = format!(
            "global e;\n\
             contract K {{ initial 1; final {{1, 2}}; 1 -!a-> {target}; }}\n\
             message a [emp];\n\
             main() [emp] {{ skip; }} [emp]\n\
             f() [e ~>[{perm}] (K<1>, _)] {{ send(a, e); }} [e ~>[{perm}] (K<{target}>, _)]\n"
        );
        let prog = load(&text).unwrap();
        let r = verify_function(&prog, "f", &VerifierOptions::default());
        let should_fail = num < 4 && moves;
        match r.verdict.rejection() {
            Some(rej) => {
                prop_assert!(should_fail, "unexpected rejection: {}", rej.message);
                prop_assert_eq!(rej.reason, Reason::PermissionViolation);
            }
            None => prop_assert!(!should_fail, "accepted a state change at {}", perm),
        }
    }
}

#[test]
fn corpus_round_trips_through_render() {
    for path in common::corpus_files() {
        let text = std::fs::read_to_string(&path).unwrap();
        let name = path.display();
        let ast = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = render(&ast);
        let again = parse(&printed).unwrap_or_else(|e| panic!("{name}: reparse: {e}\n{printed}"));
        assert_eq!(render(&again), printed, "{name}");
        assert_eq!(strip_sites(&format!("{again:?}")), strip_sites(&format!("{ast:?}")), "{name}");
        assert_eq!(resolve(&ast).is_ok(), resolve(&again).is_ok(), "{name}");
    }
}

/// Debug output with every `Site { .. }` removed.
fn strip_sites(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find("Site {") {
        out.push_str(&rest[..i]);
        let j = rest[i..].find('}').unwrap();
        rest = &rest[i + j + 1..];
    }
    out.push_str(rest);
    out
}
