//! Normalization: congruence of equalities, merging of atoms that share an
//! address, and saturation under the peer involution.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::heap::{Atom, SymHeap, Term};

/// Union-find over terms. Uniting two distinct integer literals marks a clash.
#[derive(Debug, Default, Clone)]
pub(crate) struct UnionFind {
    ids: HashMap<Term, usize>,
    terms: Vec<Term>,
    parent: Vec<usize>,
    pub clash: bool,
}

impl UnionFind {
    pub fn id(&mut self, t: &Term) -> usize {
        if let Some(&i) = self.ids.get(t) {
            return i;
        }
        let i = self.terms.len();
        self.ids.insert(t.clone(), i);
        self.terms.push(t.clone());
        self.parent.push(i);
        i
    }

    pub fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut j = i;
        while self.parent[j] != r {
            let next = self.parent[j];
            self.parent[j] = r;
            j = next;
        }
        r
    }

    pub fn root_of(&mut self, t: &Term) -> usize {
        let i = self.id(t);
        self.find(i)
    }

    /// Returns whether the classes were distinct.
    pub fn union(&mut self, a: &Term, b: &Term) -> bool {
        let (ra, rb) = (self.root_of(a), self.root_of(b));
        if ra == rb {
            return false;
        }
        if let (Some(Term::Int(x)), Some(Term::Int(y))) = (self.int_of(ra), self.int_of(rb)) {
            if x != y {
                self.clash = true;
            }
        }
        // Keep an integer member reachable from the root.
        if matches!(self.terms[rb], Term::Int(_)) {
            self.parent[ra] = rb;
        } else {
            self.parent[rb] = ra;
        }
        true
    }

    fn int_of(&self, root: usize) -> Option<Term> {
        match &self.terms[root] {
            t @ Term::Int(_) => Some(t.clone()),
            _ => None,
        }
    }


    pub fn classes(&mut self) -> BTreeMap<usize, Vec<Term>> {
        let mut out: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
        for i in 0..self.terms.len() {
            let r = self.find(i);
            out.entry(r).or_default().push(self.terms[i].clone());
        }
        out
    }
}

/// Addresses are positive integers.
fn bad_address(t: &Term) -> bool {
    matches!(t, Term::Int(n) if *n <= 0)
}

pub fn normalize(h: &SymHeap) -> SymHeap {
    if h.unsat {
        return SymHeap::unsat();
    }
    let mut uf = UnionFind::default();
    for (a, b) in &h.eqs {
        uf.union(a, b);
    }
    for t in h.vars() {
        uf.id(&Term::Var(t));
    }

    let mut atoms = h.atoms.clone();
    loop {
        if uf.clash {
            return SymHeap::unsat();
        }
        let mut changed = false;

        // Merge atoms whose addresses coincide.
        let mut by_addr: BTreeMap<usize, Atom> = BTreeMap::new();
        let mut order: Vec<usize> = Vec::new();
        for a in &atoms {
            let r = uf.root_of(a.addr());
            match by_addr.remove(&r) {
                None => {
                    order.push(r);
                    by_addr.insert(r, a.clone());
                }
                Some(prev) => {
                    let merged = match (prev, a) {
                        (
                            Atom::Cell { addr, perm: p1, fields: f1 },
                            Atom::Cell { perm: p2, fields: f2, .. },
                        ) => {
                            uf.union(&f1[0], &f2[0]);
                            uf.union(&f1[1], &f2[1]);
                            Atom::Cell { addr, perm: &p1 + p2, fields: f1 }
                        }
                        (
                            Atom::Endpoint { addr, perm: p1, contract: c1, state: s1, peer: q1 },
                            Atom::Endpoint { perm: p2, contract: c2, state: s2, peer: q2, .. },
                        ) => {
                            if c1 != *c2 || s1 != *s2 {
                                return SymHeap::unsat();
                            }
                            uf.union(&q1, q2);
                            Atom::Endpoint { addr, perm: &p1 + p2, contract: c1, state: s1, peer: q1 }
                        }
                        _ => return SymHeap::unsat(),
                    };
                    if !merged.perm().is_valid() {
                        return SymHeap::unsat();
                    }
                    changed = true;
                    by_addr.insert(r, merged);
                }
            }
        }
        atoms = order.iter().map(|r| by_addr.remove(r).unwrap()).collect();

        // Peer involution: functional, injective, symmetric.
        let mut facts: Vec<(Term, Term)> = h.peers.clone();
        for a in &atoms {
            if let Atom::Endpoint { addr, peer, .. } = a {
                facts.push((addr.clone(), peer.clone()));
            }
        }
        let mut by_src: HashMap<usize, Term> = HashMap::new();
        let mut by_dst: HashMap<usize, Term> = HashMap::new();
        for (a, b) in &facts {
            let (ra, rb) = (uf.root_of(a), uf.root_of(b));
            match by_src.get(&ra).cloned() {
                Some(prev) => changed |= uf.union(&prev, b),
                None => {
                    by_src.insert(ra, b.clone());
                }
            }
            match by_dst.get(&rb).cloned() {
                Some(prev) => changed |= uf.union(&prev, a),
                None => {
                    by_dst.insert(rb, a.clone());
                }
            }
        }
        for (a, b) in &facts {
            let rb = uf.root_of(b);
            if let Some(back) = by_src.get(&rb).cloned() {
                changed |= uf.union(&back, a);
            }
        }
        if !changed {
            break;
        }
    }
    if uf.clash {
        return SymHeap::unsat();
    }

    // Choose representatives: integers, then free variables, then existentials.
    let classes = uf.classes();
    let mut rep_of: HashMap<Term, Term> = HashMap::new();
    let mut eqs = Vec::new();
    for members in classes.values() {
        let rank = |t: &Term| match t {
            Term::Int(_) => 0,
            Term::Var(v) if !h.exists.contains(v) => 1,
            Term::Var(_) => 2,
        };
        let rep = members.iter().min_by(|a, b| rank(a).cmp(&rank(b)).then(a.cmp(b))).unwrap();
        for m in members {
            rep_of.insert(m.clone(), rep.clone());
            if m != rep && rank(m) == 1 {
                eqs.push((m.clone(), rep.clone()));
            }
        }
    }
    let r = |t: &Term| rep_of.get(t).cloned().unwrap_or_else(|| t.clone());

    let atoms: Vec<Atom> = atoms.iter().map(|a| a.map_terms(&mut |t| r(t))).collect();
    let mut cells = BTreeSet::new();
    let mut endpoints = BTreeMap::new();
    for a in &atoms {
        if bad_address(a.addr()) {
            return SymHeap::unsat();
        }
        match a {
            Atom::Cell { addr, .. } => {
                cells.insert(addr.clone());
            }
            Atom::Endpoint { addr, contract, .. } => {
                endpoints.insert(addr.clone(), contract.clone());
            }
        }
    }
    let mut peers: Vec<(Term, Term)> = Vec::new();
    let mut all_facts: Vec<(Term, Term)> = h.peers.iter().map(|(a, b)| (r(a), r(b))).collect();
    for a in &atoms {
        if let Atom::Endpoint { addr, contract, peer, .. } = a {
            all_facts.push((addr.clone(), peer.clone()));
            if let Some(other) = endpoints.get(peer) {
                if *other != contract.flipped() {
                    return SymHeap::unsat();
                }
            }
        }
    }
    for (a, b) in &all_facts {
        if a == b || bad_address(a) || bad_address(b) || cells.contains(b) || cells.contains(a) {
            return SymHeap::unsat();
        }
    }
    for (a, b) in h.peers.iter().map(|(a, b)| (r(a), r(b))) {
        let covered = atoms.iter().any(|at| matches!(at, Atom::Endpoint { addr, peer, .. } if *addr == a && *peer == b));
        if !covered {
            peers.push((a, b));
        }
    }

    let mut neqs = Vec::new();
    for (a, b) in &h.neqs {
        let (a, b) = (r(a), r(b));
        if a == b {
            return SymHeap::unsat();
        }
        if matches!((&a, &b), (Term::Int(_), Term::Int(_))) {
            continue;
        }
        neqs.push(if a <= b { (a, b) } else { (b, a) });
    }

    eqs.sort();
    eqs.dedup();
    neqs.sort();
    neqs.dedup();
    peers.sort();
    peers.dedup();
    let mut atoms = atoms;
    atoms.sort();
    let mut out = SymHeap { exists: BTreeSet::new(), eqs, neqs, peers, atoms, unsat: false };
    let used = out.vars();
    out.exists = h.exists.iter().filter(|e| used.contains(*e)).cloned().collect();
    out
}

/// Whether a normalized heap forces `a != b`: distinct literals, a recorded
/// disequality, or two atoms that cannot share an address.
pub fn implies_neq(h: &SymHeap, a: &Term, b: &Term) -> bool {
    if h.unsat {
        return true;
    }
    let (a, b) = (h.rep(a), h.rep(b));
    if a == b {
        return false;
    }
    if matches!((&a, &b), (Term::Int(_), Term::Int(_))) {
        return true;
    }
    if h.neqs.iter().any(|(x, y)| (*x == a && *y == b) || (*x == b && *y == a)) {
        return true;
    }
    let at = |t: &Term| h.atoms.iter().find(|x| x.addr() == t);
    let is_addr_fact = |t: &Term| {
        h.peers.iter().any(|(x, y)| x == t || y == t)
            || h.atoms.iter().any(|x| matches!(x, Atom::Endpoint { peer, .. } if peer == t))
    };
    match (at(&a), at(&b)) {
        (Some(x), Some(y)) => {
            x.is_endpoint() != y.is_endpoint()
                || !(x.perm() + y.perm()).is_valid()
                || match (x, y) {
                    (
                        Atom::Endpoint { contract: c1, state: s1, .. },
                        Atom::Endpoint { contract: c2, state: s2, .. },
                    ) => c1 != c2 || s1 != s2,
                    _ => false,
                }
        }
        (Some(x), None) => {
            matches!(b, Term::Int(n) if n <= 0) || (!x.is_endpoint() && is_addr_fact(&b))
        }
        (None, Some(y)) => {
            matches!(a, Term::Int(n) if n <= 0) || (!y.is_endpoint() && is_addr_fact(&a))
        }
        (None, None) => false,
    }
}

/// Whether a normalized heap forces `a == b`.
pub fn implies_eq(h: &SymHeap, a: &Term, b: &Term) -> bool {
    h.unsat || h.rep(a) == h.rep(b)
}
