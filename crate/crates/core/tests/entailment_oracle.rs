mod common;

use copyless_core::logic::models::{oracle_entails, Universe};
use copyless_core::logic::{entails, heap_of, normalize, subtract};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn universe() -> Universe {
    Universe::new(1..=4, 0..=2)
}

#[test]
fn entails_agrees_with_models_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let u = universe();
    let mut disagreements = Vec::new();
    let (mut yes, mut no) = (0, 0);
    for _ in 0..2_000 {
        let (a, b) = common::gen_pair(&mut rng);
        let (h1, h2) = (heap_of(&a).unwrap(), heap_of(&b).unwrap());
        let got = entails(&h1, &h2);
        let want = oracle_entails(&h1, &h2, &u).unwrap();
        if got { yes += 1 } else { no += 1 }
        if got != want {
            disagreements.push(format!("{a}  |-  {b}: entails={got} oracle={want}"));
        }
    }
    assert!(disagreements.is_empty(), "{} disagreements:\n{}", disagreements.len(), disagreements[..disagreements.len().min(15)].join("\n"));
    assert!(yes > 100 && no > 100, "degenerate sample: {yes} true / {no} false");
}

#[test]
fn subtraction_conserves_permissions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2_000 {
        let (a, b) = common::gen_pair(&mut rng);
        let (h1, h2) = (normalize(&heap_of(&a).unwrap()), normalize(&heap_of(&b).unwrap()));
        if h1.unsat || h2.unsat {
            continue;
        }
        if let Some(m) = subtract(&h1, &h2) {
            let taken: num_rational::BigRational =
                m.taken.iter().map(|t| t.perm().value().clone()).sum();
            assert_eq!(h1.total_perm(), m.frame.total_perm() + &taken, "{a} - {b}");
            assert_eq!(taken, h2.total_perm(), "{a} - {b}");
        }
    }
}
