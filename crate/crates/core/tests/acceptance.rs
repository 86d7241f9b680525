//! The seven acceptance criteria, one PASS/FAIL line each.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use copyless_core::contracts::{lint, simple_cycles, Check, Contract, Direction, LintConfig};
use copyless_core::interp::{check_soundness, explore, run, Bounds, Outcome, OutcomeKind};
use copyless_core::lang::{load, parse, render, ResolvedProgram};
use copyless_core::logic::models::{oracle_entails, Universe};
use copyless_core::logic::{entails, heap_of, normalize, subtract};
use copyless_core::verifier::{verify_program, Reason, VerifierOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Checked = Result<String, String>;

fn prog(name: &str) -> ResolvedProgram {
    load(&common::corpus_file(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn positive_corpus() -> Checked {
    let mut accepted = 0;
    for name in common::POSITIVE {
        let r = verify_program(&prog(name), &VerifierOptions::default());
        if let Some((f, rej)) = r.first_rejection() {
            return Err(format!("{name}: `{f}` rejected at {}: {:?}", rej.site, rej.reason));
        }
        ensure(r.accepted(), || format!("{name}: contract or footprint check failed"))?;
        accepted += 1;
    }
    Ok(format!("{accepted}/{} accepted", common::POSITIVE.len()))
}

fn negative_corpus() -> Checked {
    let cases = [
        ("invalid_sec3.cmp", "put", Reason::PermissionViolation, Some("send")),
        ("close_mismatch.cmp", "main", Reason::ClosePrecondition, None),
        ("missing_nocell.cmp", "get", Reason::NonExhaustiveSwitch, None),
    ];
    for (name, func, reason, at) in cases {
        let text = common::corpus_file(name);
        let r = verify_program(&prog(name), &VerifierOptions::default());
        let rej = r
            .function(func)
            .and_then(|f| f.verdict.rejection())
            .ok_or_else(|| format!("{name}: `{func}` accepted"))?;
        ensure(rej.reason == reason, || format!("{name}: got {:?}, want {reason:?}", rej.reason))?;
        if let Some(cmd) = at {
            let line = text.lines().nth(rej.site.line as usize - 1).unwrap_or("");
            ensure(line.trim_start().starts_with(cmd), || format!("{name}: located at `{}`", line.trim()))?;
        }
    }
    Ok("3/3 rejected with the expected reasons".into())
}

fn contract_lint() -> Checked {
    let strict = LintConfig::strict();
    let wanted = [
        ("example_2_2.cmp", "C1"),
        ("cell_or_nocell.cmp", "C2"),
        ("two_producers.cmp", "C"),
        ("client_server.cmp", "Service"),
        ("seller_buyers.cmp", "SB"),
    ];
    for (file, name) in wanted {
        let c = prog(file).contracts.get(name).cloned().ok_or_else(|| format!("{file}: no contract {name}"))?;
        let report = lint(&c, &strict);
        ensure(report.findings.is_empty(), || format!("{name}: {:?}", report.findings))?;
    }
    let t = |q: &str, d, m: &str, r: &str| (q.to_string(), d, m.to_string(), r.to_string());
    let mixed = Contract::new(
        "Mixed",
        "1",
        &["2"],
        [t("1", Direction::Send, "a", "2"), t("1", Direction::Recv, "b", "2")],
    )
    .unwrap();
    let send_cycle = Contract::new(
        "SendCycle",
        "1",
        &["1"],
        [t("1", Direction::Send, "a", "2"), t("2", Direction::Send, "b", "1")],
    )
    .unwrap();
    for (c, check) in [(mixed, Check::MixedChoice), (send_cycle, Check::CycleCondition)] {
        let checks: Vec<Check> = lint(&c, &strict).findings.iter().map(|f| f.check).collect();
        ensure(checks == [check], || format!("{}: findings {checks:?}, want [{check:?}]", c.name))?;
    }
    Ok("5 contracts clean; mixed state and send-only final cycle flagged".into())
}

fn interpreter_taxonomy() -> Checked {
    let bounds = Bounds::default();
    let cases = [
        ("p0.cmp", vec![OutcomeKind::UnspecifiedReception, OutcomeKind::Deadlock]),
        ("p1.cmp", vec![OutcomeKind::Deadlock]),
        ("example_1_1.cmp", vec![OutcomeKind::FinishedClean]),
    ];
    for (name, want) in cases {
        let r = explore(&prog(name), &bounds);
        let want: BTreeSet<OutcomeKind> = want.into_iter().collect();
        ensure(r.complete && r.kinds() == want, || format!("{name}: {:?}, want {want:?}", r.kinds()))?;
    }
    let leaky = prog("leaky_1_1.cmp");
    for seed in 0..10 {
        let r = run(&leaky, seed, &bounds);
        ensure(matches!(r.outcome, Outcome::FinishedLeak { .. }), || format!("leaky seed {seed}: {:?}", r.outcome))?;
    }
    Ok("explore sets and leak outcome match exactly".into())
}

fn soundness() -> Checked {
    let bounds = Bounds { loop_bound: Some(2), max_states: 1_000_000, ..Bounds::default() };
    let mut states = 0;
    for name in common::POSITIVE {
        let s = check_soundness(&prog(name), &bounds);
        ensure(s.exploration.complete, || format!("{name}: state budget exhausted"))?;
        ensure(s.passed, || format!("{name}: {:?}", s.violations))?;
        states += s.exploration.states;
    }
    Ok(format!("{} programs, {states} states, only benign outcomes", common::POSITIVE.len()))
}

fn entailment_oracle() -> Checked {
    const PAIRS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let u = Universe::new(1..=4, 0..=2);
    let mut disagreements = 0;
    let mut first = None;
    for _ in 0..PAIRS {
        let (a, b) = common::gen_pair(&mut rng);
        let (h1, h2) = (heap_of(&a).unwrap(), heap_of(&b).unwrap());
        let got = entails(&h1, &h2);
        let want = oracle_entails(&h1, &h2, &u).map_err(|e| e.to_string())?;
        if got != want {
            disagreements += 1;
            first.get_or_insert(format!("{a} |- {b}: entails={got} oracle={want}"));
        }
        let (n1, n2) = (normalize(&h1), normalize(&h2));
        if n1.unsat || n2.unsat {
            continue;
        }
        if let Some(m) = subtract(&n1, &n2) {
            let taken: num_rational::BigRational = m.taken.iter().map(|t| t.perm().value().clone()).sum();
            ensure(n1.total_perm() == m.frame.total_perm() + &taken && taken == n2.total_perm(), || {
                format!("{a} - {b}: permissions not conserved")
            })?;
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements, e.g. {}", first.unwrap()))?;
    Ok(format!("{PAIRS} pairs agree; permissions conserved"))
}

fn structural() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for i in 0..100 {
        let c = common::gen_contract(&mut rng, 6);
        ensure(c.dual().dual() == c, || format!("contract {i}: dual is not an involution"))?;
        let got: BTreeSet<String> = c.check_cycle_condition().into_iter().collect();
        let mut want = BTreeSet::new();
        for cycle in simple_cycles(&c) {
            if cycle.iter().map(|e| e.1).collect::<BTreeSet<_>>().len() == 1 {
                want.extend(cycle.iter().map(|e| e.0.clone()).filter(|q| c.is_final(q)));
            }
        }
        ensure(got == want, || format!("contract {i}: cycle check {got:?}, oracle {want:?}"))?;
    }
    let files = common::corpus_files();
    for path in &files {
        let ast = parse(&std::fs::read_to_string(path).unwrap()).map_err(|e| e.to_string())?;
        let printed = render(&ast);
        let again = parse(&printed).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(render(&again) == printed, || format!("{}: render is not a fixed point", path.display()))?;
    }
    for name in common::POSITIVE {
        let p = prog(name);
        for seed in [0, 1, 7, 1234] {
            let a = format!("{:?}", run(&p, seed, &Bounds::default()));
            let b = format!("{:?}", run(&p, seed, &Bounds::default()));
            ensure(a == b, || format!("{name}: seed {seed} is not reproducible"))?;
        }
    }
    Ok(format!("100 contracts; {} files round-trip; runs reproducible", files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Checked); 7] = [
        ("positive verification corpus", positive_corpus),
        ("negative verification corpus", negative_corpus),
        ("contract lint", contract_lint),
        ("interpreter taxonomy", interpreter_taxonomy),
        ("soundness cross-check", soundness),
        ("entailment oracle equivalence", entailment_oracle),
        ("structural properties", structural),
    ];
    let mut failed = Vec::new();
    for (i, (title, check)) in criteria.into_iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {}: PASS  {title}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {title}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
