use std::collections::BTreeSet;

use super::heap::{Atom, SymHeap, Term};

/// Sufficient syntactic condition for precision: the atoms can be ordered so
/// that each one's address is determined by `roots`, by pure equalities, or by
/// the fields and peers of earlier atoms. An endpoint whose peer is determined
/// is itself determined, since peering is injective.
pub fn check_precise(f: &SymHeap, roots: &BTreeSet<Term>) -> bool {
    let mut known: BTreeSet<Term> = roots.clone();
    let is_known = |known: &BTreeSet<Term>, t: &Term| matches!(t, Term::Int(_)) || known.contains(t);
    let mut pending: Vec<&Atom> = f.atoms.iter().collect();
    loop {
        let mut progress = false;
        for (a, b) in &f.eqs {
            match (is_known(&known, a), is_known(&known, b)) {
                (true, false) => progress |= known.insert(b.clone()),
                (false, true) => progress |= known.insert(a.clone()),
                _ => {}
            }
        }
        let mut i = 0;
        while i < pending.len() {
            let atom = pending[i];
            let placeable = is_known(&known, atom.addr())
                || matches!(atom, Atom::Endpoint { peer, .. } if is_known(&known, peer));
            if placeable {
                for t in atom.terms() {
                    known.insert(t.clone());
                }
                pending.remove(i);
                progress = true;
            } else {
                i += 1;
            }
        }
        if pending.is_empty() {
            return true;
        }
        if !progress {
            return false;
        }
    }
}
