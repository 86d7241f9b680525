use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::perm::Perm;

/// A logical term. Variables are either free (program values, rigid) or
/// listed in the enclosing heap's existentials.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Int(i64),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Int(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Int(n) => write!(f, "{n}"),
        }
    }
}

/// A contract as referenced from an endpoint atom: a declared name, possibly dualized.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContractRef {
    pub name: String,
    pub dual: bool,
}

impl ContractRef {
    pub fn new(name: &str, dual: bool) -> Self {
        ContractRef { name: name.to_string(), dual }
    }

    pub fn flipped(&self) -> Self {
        ContractRef { name: self.name.clone(), dual: !self.dual }
    }
}

impl fmt::Display for ContractRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dual {
            f.write_str("~")?;
        }
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Cell { addr: Term, perm: Perm, fields: [Term; 2] },
    Endpoint { addr: Term, perm: Perm, contract: ContractRef, state: String, peer: Term },
}

impl Atom {
    pub fn addr(&self) -> &Term {
        match self {
            Atom::Cell { addr, .. } | Atom::Endpoint { addr, .. } => addr,
        }
    }

    pub fn perm(&self) -> &Perm {
        match self {
            Atom::Cell { perm, .. } | Atom::Endpoint { perm, .. } => perm,
        }
    }

    pub fn with_perm(&self, p: Perm) -> Atom {
        let mut a = self.clone();
        match &mut a {
            Atom::Cell { perm, .. } | Atom::Endpoint { perm, .. } => *perm = p,
        }
        a
    }

    pub fn is_endpoint(&self) -> bool {
        matches!(self, Atom::Endpoint { .. })
    }

    /// All terms, address first.
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Cell { addr, fields, .. } => vec![addr, &fields[0], &fields[1]],
            Atom::Endpoint { addr, peer, .. } => vec![addr, peer],
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Atom {
        match self {
            Atom::Cell { addr, perm, fields } => Atom::Cell {
                addr: f(addr),
                perm: perm.clone(),
                fields: [f(&fields[0]), f(&fields[1])],
            },
            Atom::Endpoint { addr, perm, contract, state, peer } => Atom::Endpoint {
                addr: f(addr),
                perm: perm.clone(),
                contract: contract.clone(),
                state: state.clone(),
                peer: f(peer),
            },
        }
    }
}

fn perm_suffix(p: &Perm) -> String {
    if p.is_one() {
        String::new()
    } else {
        format!("[{p}]")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Cell { addr, perm, fields } => {
                write!(f, "{addr} |->{} ({}, {})", perm_suffix(perm), fields[0], fields[1])
            }
            Atom::Endpoint { addr, perm, contract, state, peer } => {
                write!(f, "{addr} ~>{} ({contract}<{state}>, {peer})", perm_suffix(perm))
            }
        }
    }
}

/// A symbolic heap: `exists X. pure * atoms`, or the inconsistent heap.
///
/// `peers` records known peer links `(a, b)` of endpoints that may no longer
/// be owned; addresses are never reused, so such links stay true forever.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SymHeap {
    pub exists: BTreeSet<String>,
    pub eqs: Vec<(Term, Term)>,
    pub neqs: Vec<(Term, Term)>,
    pub peers: Vec<(Term, Term)>,
    pub atoms: Vec<Atom>,
    pub unsat: bool,
}

impl SymHeap {
    pub fn emp() -> Self {
        SymHeap::default()
    }

    pub fn unsat() -> Self {
        SymHeap { unsat: true, ..SymHeap::default() }
    }

    pub fn atom(a: Atom) -> Self {
        SymHeap { atoms: vec![a], ..SymHeap::default() }
    }

    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    /// Separating conjunction. Existential names must already be disjoint.
    pub fn star(&self, other: &SymHeap) -> SymHeap {
        if self.unsat || other.unsat {
            return SymHeap::unsat();
        }
        let mut h = self.clone();
        h.exists.extend(other.exists.iter().cloned());
        h.eqs.extend(other.eqs.iter().cloned());
        h.neqs.extend(other.neqs.iter().cloned());
        h.peers.extend(other.peers.iter().cloned());
        h.atoms.extend(other.atoms.iter().cloned());
        h
    }

    /// Only the pure part, keeping existentials that it mentions.
    pub fn pure_part(&self) -> SymHeap {
        let mut h = SymHeap {
            exists: BTreeSet::new(),
            eqs: self.eqs.clone(),
            neqs: self.neqs.clone(),
            peers: self.peers.clone(),
            atoms: vec![],
            unsat: self.unsat,
        };
        let mentioned = h.vars();
        h.exists = self.exists.iter().filter(|e| mentioned.contains(*e)).cloned().collect();
        h
    }

    /// Representative of `t` according to the equalities of a normalized heap.
    pub fn rep(&self, t: &Term) -> Term {
        self.eqs.iter().find(|(a, _)| a == t).map(|(_, r)| r.clone()).unwrap_or_else(|| t.clone())
    }

    /// Every variable name occurring anywhere in the heap.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        };
        for (a, b) in self.eqs.iter().chain(&self.neqs).chain(&self.peers) {
            add(a);
            add(b);
        }
        for atom in &self.atoms {
            atom.terms().into_iter().for_each(&mut add);
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.vars().into_iter().filter(|v| !self.exists.contains(v)).collect()
    }

    pub fn is_existential(&self, t: &Term) -> bool {
        matches!(t, Term::Var(v) if self.exists.contains(v))
    }

    /// Applies a term substitution everywhere (existential set untouched).
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> SymHeap {
        let mut pair = |(a, b): &(Term, Term)| (f(a), f(b));
        let eqs = self.eqs.iter().map(&mut pair).collect();
        let neqs = self.neqs.iter().map(&mut pair).collect();
        let peers = self.peers.iter().map(&mut pair).collect();
        SymHeap {
            exists: self.exists.clone(),
            eqs,
            neqs,
            peers,
            atoms: self.atoms.iter().map(|a| a.map_terms(f)).collect(),
            unsat: self.unsat,
        }
    }

    pub fn subst(&self, map: &BTreeMap<String, Term>) -> SymHeap {
        let mut h = self.map_terms(&mut |t| match t {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        });
        h.exists.retain(|e| !map.contains_key(e));
        h
    }

    /// Renames every existential to a fresh name.
    pub fn freshen(&self, fresh: &mut Fresh) -> SymHeap {
        let map: BTreeMap<String, Term> =
            self.exists.iter().map(|e| (e.clone(), fresh.term())).collect();
        let mut h = self.subst(&map);
        h.exists = map.values().filter_map(|t| t.as_var().map(String::from)).collect();
        h
    }

    /// Sum of all atom permissions.
    pub fn total_perm(&self) -> num_rational::BigRational {
        self.atoms.iter().map(|a| a.perm().value().clone()).sum()
    }
}

impl fmt::Display for SymHeap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unsat {
            return f.write_str("false");
        }
        if !self.exists.is_empty() {
            let names: Vec<&str> = self.exists.iter().map(String::as_str).collect();
            write!(f, "exists {}. ", names.join(", "))?;
        }
        let mut parts: Vec<String> = Vec::new();
        parts.extend(self.eqs.iter().map(|(a, b)| format!("{a} == {b}")));
        parts.extend(self.neqs.iter().map(|(a, b)| format!("{a} != {b}")));
        parts.extend(self.peers.iter().map(|(a, b)| format!("peer({a}) == {b}")));
        parts.extend(self.atoms.iter().map(|a| a.to_string()));
        if parts.is_empty() {
            f.write_str("emp")
        } else {
            f.write_str(&parts.join(" * "))
        }
    }
}

/// Source of fresh logical variable names (`?0`, `?1`, ...), which cannot
/// clash with identifiers in source text.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    next: u64,
}

impl Fresh {
    pub fn new() -> Self {
        Fresh::default()
    }

    pub fn starting_at(next: u64) -> Self {
        Fresh { next }
    }

    pub fn name(&mut self) -> String {
        let n = self.next;
        self.next += 1;
        format!("?{n}")
    }

    pub fn term(&mut self) -> Term {
        Term::Var(self.name())
    }
}
