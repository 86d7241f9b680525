//! Footprint subtraction (frame inference) and entailment.

use std::collections::{BTreeMap, BTreeSet};

use super::heap::{Atom, SymHeap, Term};
use super::normalize::{implies_eq, implies_neq, normalize};

pub const DEFAULT_BUDGET: usize = 10_000;

/// Result of carving `G` out of `H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    /// What remains of `H`: its pure part plus unmatched atoms and residues.
    pub frame: SymHeap,
    /// Instantiation of `G`'s existentials by terms of `H`.
    pub theta: BTreeMap<String, Term>,
    /// The pieces of `H` that were taken, with the permissions taken.
    pub taken: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subtraction {
    Found(Match),
    NotFound,
    /// The search budget ran out before a verdict.
    Unknown,
}

impl Subtraction {
    pub fn found(self) -> Option<Match> {
        match self {
            Subtraction::Found(m) => Some(m),
            _ => None,
        }
    }
}

/// `subtract(H, G)` with the default budget; `None` on failure or exhaustion.
pub fn subtract(h: &SymHeap, g: &SymHeap) -> Option<Match> {
    subtract_with_budget(h, g, DEFAULT_BUDGET).found()
}

pub fn subtract_with_budget(h: &SymHeap, g: &SymHeap, budget: usize) -> Subtraction {
    let h = normalize(h);
    if h.unsat {
        // Anything can be carved out of the inconsistent heap.
        return Subtraction::Found(Match {
            frame: SymHeap::unsat(),
            theta: BTreeMap::new(),
            taken: vec![],
        });
    }
    let g = normalize(g);
    if g.unsat {
        return Subtraction::NotFound;
    }
    let mut s = Search { h: &h, g: &g, steps: 0, budget, exhausted: false };
    let result = s.go(g.atoms.clone(), h.atoms.clone(), BTreeMap::new(), vec![]);
    match result {
        Some((rest, theta, taken)) => {
            let mut frame = h.clone();
            frame.atoms = rest;
            for t in &taken {
                if let Atom::Endpoint { addr, peer, .. } = t {
                    frame.peers.push((addr.clone(), peer.clone()));
                }
            }
            Subtraction::Found(Match { frame: normalize(&frame), theta, taken })
        }
        None if s.exhausted => Subtraction::Unknown,
        None => Subtraction::NotFound,
    }
}

type Theta = BTreeMap<String, Term>;
type Found = (Vec<Atom>, Theta, Vec<Atom>);

struct Search<'a> {
    h: &'a SymHeap,
    g: &'a SymHeap,
    steps: usize,
    budget: usize,
    exhausted: bool,
}

/// A `G` term seen through the current instantiation.
enum Resolved {
    Known(Term),
    Unbound(String),
}

impl Search<'_> {
    fn resolve(&self, t: &Term, theta: &Theta) -> Resolved {
        match t {
            Term::Var(v) if self.g.exists.contains(v) => match theta.get(v) {
                Some(b) => Resolved::Known(b.clone()),
                None => Resolved::Unbound(v.clone()),
            },
            _ => Resolved::Known(self.h.rep(t)),
        }
    }

    fn unify(&self, gt: &Term, ht: &Term, theta: &mut Theta) -> bool {
        match self.resolve(gt, theta) {
            Resolved::Known(k) => k == *ht,
            Resolved::Unbound(v) => {
                theta.insert(v, ht.clone());
                true
            }
        }
    }

    /// Tries to match `g` against `h` (same address), returning the extended
    /// instantiation.
    fn match_atom(&self, g: &Atom, h: &Atom, theta: &Theta) -> Option<Theta> {
        if g.perm() > h.perm() {
            return None;
        }
        let mut th = theta.clone();
        let ok = match (g, h) {
            (Atom::Cell { addr: ga, fields: gf, .. }, Atom::Cell { addr: ha, fields: hf, .. }) => {
                self.unify(ga, ha, &mut th)
                    && self.unify(&gf[0], &hf[0], &mut th)
                    && self.unify(&gf[1], &hf[1], &mut th)
            }
            (
                Atom::Endpoint { addr: ga, contract: gc, state: gs, peer: gp, .. },
                Atom::Endpoint { addr: ha, contract: hc, state: hs, peer: hp, .. },
            ) => {
                gc == hc
                    && gs == hs
                    && self.unify(ga, ha, &mut th)
                    && self.unify(gp, hp, &mut th)
            }
            _ => false,
        };
        ok.then_some(th)
    }

    fn determined(&self, t: &Term, theta: &Theta) -> bool {
        matches!(self.resolve(t, theta), Resolved::Known(_))
    }

    fn go(&mut self, goals: Vec<Atom>, have: Vec<Atom>, theta: Theta, taken: Vec<Atom>) -> Option<Found> {
        self.steps += 1;
        if self.steps > self.budget {
            self.exhausted = true;
            return None;
        }
        if goals.is_empty() {
            let theta = self.check_pure(theta)?;
            return Some((have, theta, taken));
        }
        // Most constrained goal first: determined address, then determined peer.
        let score = |a: &Atom| -> usize {
            if self.determined(a.addr(), &theta) {
                0
            } else if matches!(a, Atom::Endpoint { peer, .. } if self.determined(peer, &theta)) {
                1
            } else {
                2
            }
        };
        let gi = (0..goals.len()).min_by_key(|&i| score(&goals[i])).unwrap();
        let goal = &goals[gi];
        let mut rest_goals = goals.clone();
        rest_goals.remove(gi);
        for hi in 0..have.len() {
            let Some(th) = self.match_atom(goal, &have[hi], &theta) else { continue };
            let mut rest = have.clone();
            let h_atom = rest.remove(hi);
            if let Some(res) = h_atom.perm().residue(goal.perm()) {
                rest.insert(hi, h_atom.with_perm(res));
            }
            let mut tk = taken.clone();
            tk.push(h_atom.with_perm(goal.perm().clone()));
            if let Some(found) = self.go(rest_goals.clone(), rest, th, tk) {
                return Some(found);
            }
            if self.exhausted {
                return None;
            }
        }
        None
    }

    fn check_pure(&self, mut theta: Theta) -> Option<Theta> {
        for (a, b) in &self.g.eqs {
            match (self.resolve(a, &theta), self.resolve(b, &theta)) {
                (Resolved::Known(x), Resolved::Known(y)) => {
                    if !implies_eq(self.h, &x, &y) {
                        return None;
                    }
                }
                (Resolved::Unbound(v), Resolved::Known(t)) | (Resolved::Known(t), Resolved::Unbound(v)) => {
                    theta.insert(v, t);
                }
                (Resolved::Unbound(v), Resolved::Unbound(w)) => {
                    if v != w {
                        theta.insert(v, Term::Var(w));
                    }
                }
            }
        }
        for (a, b) in &self.g.neqs {
            if let (Resolved::Known(x), Resolved::Known(y)) =
                (self.resolve(a, &theta), self.resolve(b, &theta))
            {
                if !implies_neq(self.h, &x, &y) {
                    return None;
                }
            }
        }
        for (a, b) in &self.g.peers {
            if let (Resolved::Known(x), Resolved::Known(y)) =
                (self.resolve(a, &theta), self.resolve(b, &theta))
            {
                let known = self.h.peers.contains(&(x.clone(), y.clone()))
                    || self.h.atoms.iter().any(
                        |at| matches!(at, Atom::Endpoint { addr, peer, .. } if *addr == x && *peer == y),
                    );
                if !known {
                    return None;
                }
            }
        }
        Some(theta)
    }
}

/// Upper bound on the number of terms the entailment case split ranges over.
pub const ARRANGEMENT_LIMIT: usize = 8;

/// `H1 |- H2`: in every aliasing arrangement of the relevant terms, `H2` can
/// be carved out of `H1` leaving no spatial frame.
pub fn entails(h1: &SymHeap, h2: &SymHeap) -> bool {
    let n1 = normalize(h1);
    if n1.unsat {
        return true;
    }
    let n2 = normalize(h2);
    if n2.unsat {
        return false;
    }
    // A match on the unsplit heap holds in every arrangement.
    if closes(&n1, &n2) {
        return true;
    }
    let terms = split_terms(&n1, &n2);
    if terms.len() > ARRANGEMENT_LIMIT {
        return false;
    }
    let mut all = true;
    for_each_arrangement(&n1, &terms, &mut |h| {
        if !closes(h, &n2) {
            all = false;
        }
        all
    });
    all
}

fn closes(h: &SymHeap, g: &SymHeap) -> bool {
    match subtract(h, g) {
        Some(m) => m.frame.unsat || m.frame.atoms.is_empty(),
        None => false,
    }
}

/// Terms whose aliasing can change the outcome of a subtraction: addresses
/// and peers of `n1`, and every non-existential term of `n2`.
fn split_terms(n1: &SymHeap, n2: &SymHeap) -> Vec<Term> {
    let mut set = BTreeSet::new();
    for a in &n1.atoms {
        set.insert(a.addr().clone());
        if let Atom::Endpoint { peer, .. } = a {
            set.insert(peer.clone());
        }
    }
    for (a, b) in &n1.peers {
        set.insert(a.clone());
        set.insert(b.clone());
    }
    let mut rigid = |t: &Term| {
        if !n2.is_existential(t) {
            set.insert(n1.rep(t));
        }
    };
    for a in &n2.atoms {
        a.terms().into_iter().for_each(&mut rigid);
    }
    for (a, b) in n2.eqs.iter().chain(&n2.neqs) {
        rigid(a);
        rigid(b);
    }
    set.into_iter().collect()
}

/// Calls `f` with `h` strengthened by each consistent partition of `terms`
/// (equal within a block, distinct across blocks). Stops when `f` returns false.
pub fn for_each_arrangement(h: &SymHeap, terms: &[Term], f: &mut dyn FnMut(&SymHeap) -> bool) {
    let n = terms.len();
    let mut apart = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            apart[i][j] = i != j && implies_neq(h, &terms[i], &terms[j]);
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    arrange(0, h, terms, &apart, &mut blocks, f);
}

fn arrange(
    i: usize,
    h: &SymHeap,
    terms: &[Term],
    apart: &[Vec<bool>],
    blocks: &mut Vec<Vec<usize>>,
    f: &mut dyn FnMut(&SymHeap) -> bool,
) -> bool {
    if i == terms.len() {
        let mut g = h.clone();
        for b in blocks.iter() {
            for &k in &b[1..] {
                g.eqs.push((terms[b[0]].clone(), terms[k].clone()));
            }
        }
        for x in 0..blocks.len() {
            for y in x + 1..blocks.len() {
                g.neqs.push((terms[blocks[x][0]].clone(), terms[blocks[y][0]].clone()));
            }
        }
        let g = normalize(&g);
        return g.unsat || f(&g);
    }
    for bi in 0..blocks.len() {
        if blocks[bi].iter().any(|&k| apart[i][k]) {
            continue;
        }
        blocks[bi].push(i);
        let go_on = arrange(i + 1, h, terms, apart, blocks, f);
        blocks[bi].pop();
        if !go_on {
            return false;
        }
    }
    blocks.push(vec![i]);
    let go_on = arrange(i + 1, h, terms, apart, blocks, f);
    blocks.pop();
    go_on
}
