mod common;

use copyless_core::interp::{check_soundness, Bounds};
use copyless_core::lang::load;

#[test]
fn accepted_programs_only_finish_clean_deadlock_or_truncate() {
    for name in common::POSITIVE {
        let prog = load(&common::corpus_file(name)).unwrap();
        let r = check_soundness(&prog, &Bounds::default());
        println!("{name}: {:?} in {} states", r.exploration.kinds(), r.exploration.states);
        assert!(r.exploration.complete, "{name}: state budget exhausted");
        for k in &r.violations {
            let w = &r.exploration.outcomes[k];
            panic!("{name}: {k}: {:?}\n{}", w.outcome, w.trace.join("\n"));
        }
    }
}
