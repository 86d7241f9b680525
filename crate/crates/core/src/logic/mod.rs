//! Assertion logic: symbolic heaps with fractional permissions and the
//! decision procedures over them.

mod expand;
mod heap;
pub mod models;
mod normalize;
mod perm;
mod precise;
mod subtract;

pub use expand::{expand, ExpandError};
pub use heap::{Atom, ContractRef, Fresh, SymHeap, Term};
pub use normalize::{implies_eq, implies_neq, normalize};
pub use perm::{Perm, PermError};
pub use precise::check_precise;
pub use subtract::{
    entails, for_each_arrangement, subtract, subtract_with_budget, Match, Subtraction,
    ARRANGEMENT_LIMIT, DEFAULT_BUDGET,
};

use std::collections::BTreeMap;

/// Parses and expands a macro-free assertion, keeping free names as rigid
/// variables. Handy in tests and examples.
pub fn heap_of(text: &str) -> Result<SymHeap, Box<dyn std::error::Error>> {
    let a = crate::lang::parse_assertion(text)?;
    let mut fresh = Fresh::new();
    Ok(expand(&[], &a, &BTreeMap::new(), &mut fresh)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn h(s: &str) -> SymHeap {
        heap_of(s).unwrap()
    }

    #[test]
    fn halves_recombine() {
        let n = normalize(&h("x |->[1/2] (_, 7) * x |->[1/2] (_, 7)"));
        assert_eq!(n.atoms.len(), 1);
        assert!(n.atoms[0].perm().is_one());
    }

    #[test]
    fn overfull_and_state_clash_are_unsat() {
        assert!(normalize(&h("x |->[0.6] (_, _) * x |->[0.6] (_, _)")).unsat);
        assert!(normalize(&h("e ~>[1/2] (C<1>, f) * e ~>[1/2] (C<2>, f)")).unsat);
    }

    #[test]
    fn involution_deduces_peer() {
        let n = normalize(&h("f ~> (~C<2>, e) * x ~> (C<2>, f)"));
        assert!(implies_eq(&n, &Term::var("e"), &Term::var("x")));
        assert!(entails(
            &h("f ~> (~C<2>, e) * x ~> (C<2>, f)"),
            &h("f ~> (~C<2>, x) * x ~> (C<2>, f)")
        ));
    }

    #[test]
    fn subtract_half_endpoint() {
        let m = subtract(&h("e ~> (C<1>, f) * f ~> (~C<1>, e)"), &h("e ~>[1/2] (C<1>, f)")).unwrap();
        let want = normalize(&h("e ~>[1/2] (C<1>, f) * f ~> (~C<1>, e)"));
        assert_eq!(m.frame.atoms, want.atoms);
    }

    #[test]
    fn subtract_basics() {
        let any = h("x |-> (1, y) * y ~> (C<1>, z)");
        let m = subtract(&any, &SymHeap::emp()).unwrap();
        assert_eq!(m.frame.atoms, normalize(&any).atoms);
        assert!(subtract(&h("x |->[1/2] (_, _)"), &h("x |-> (_, _)")).is_none());
    }

    #[test]
    fn subtract_instantiates_existential_peer() {
        let m = subtract(
            &h("f ~> (~C<1>, e) * e ~> (C<1>, f)"),
            &h("exists g. g ~> (~C<1>, e)"),
        )
        .unwrap();
        assert_eq!(m.theta.values().next(), Some(&Term::var("f")));
        assert_eq!(m.frame.atoms.len(), 1);
        assert_eq!(m.frame.atoms[0].addr(), &Term::var("e"));
    }

    #[test]
    fn entails_trivia() {
        assert!(entails(&SymHeap::emp(), &SymHeap::emp()));
        assert!(!entails(&h("x |-> (_, _)"), &SymHeap::emp()));
        assert!(entails(&SymHeap::unsat(), &h("x |-> (_, _)")));
    }

    #[test]
    fn precision_examples() {
        let roots = |names: &[&str]| -> BTreeSet<Term> { names.iter().map(|n| Term::var(n)).collect() };
        assert!(check_precise(&h("src == x * x ~> (C1<2>, _)"), &roots(&["x", "src"])));
        assert!(check_precise(&h("exists g. g ~> (~C<1>, src)"), &roots(&["src"])));
        assert!(!check_precise(&h("exists y. y |-> (_, _)"), &roots(&["src"])));
    }

    #[test]
    fn models_examples() {
        let u = models::Universe::new([1, 2], [7]);
        assert_eq!(models::models(&SymHeap::emp(), &u).unwrap().len(), 1);
        let ms = models::models(&h("x |-> (_, 7)"), &u).unwrap();
        assert!(ms.iter().all(|m| m.heap.len() == 1));
        let xs: BTreeSet<i64> = ms.iter().map(|m| m.store["x"]).collect();
        assert_eq!(xs, [1, 2].into());
        let big = models::Universe::new(1..=40, 0..40);
        assert!(models::models(&h("x |-> (_, _) * y |-> (_, _)"), &big).is_err());
    }
}
