//! Brute-force concrete semantics of symbolic heaps, used as a test oracle.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::heap::{Atom, ContractRef, SymHeap, Term};
use super::perm::Perm;

pub const MAX_CANDIDATES: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("universe too large: {0} candidate valuations")]
    TooLarge(u128),
}

/// Finite universe: allocatable addresses and plain values. Variables range
/// over the union of both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub addrs: Vec<i64>,
    pub values: Vec<i64>,
}

impl Universe {
    pub fn new(addrs: impl IntoIterator<Item = i64>, values: impl IntoIterator<Item = i64>) -> Self {
        Universe { addrs: addrs.into_iter().collect(), values: values.into_iter().collect() }
    }

    pub fn domain(&self) -> Vec<i64> {
        let set: BTreeSet<i64> = self.addrs.iter().chain(&self.values).copied().collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Obj {
    Cell(i64, i64),
    Endpoint { contract: ContractRef, state: String, peer: i64 },
}

pub type ConcreteHeap = BTreeMap<i64, (Obj, Perm)>;
pub type Store = BTreeMap<String, i64>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Model {
    pub store: Store,
    pub heap: ConcreteHeap,
}

/// Peering is an injective involution without self-loops, never targets a
/// cell, and links dual contracts.
pub fn well_formed(heap: &ConcreteHeap, u: &Universe) -> bool {
    let mut targets = BTreeSet::new();
    for (&a, (obj, _)) in heap {
        if !u.addrs.contains(&a) {
            return false;
        }
        if let Obj::Endpoint { contract, peer, .. } = obj {
            if *peer == a || !u.addrs.contains(peer) || !targets.insert(*peer) {
                return false;
            }
            match heap.get(peer) {
                Some((Obj::Cell(..), _)) => return false,
                Some((Obj::Endpoint { contract: c2, peer: back, .. }, _)) => {
                    if *back != a || *c2 != contract.flipped() {
                        return false;
                    }
                }
                None => {}
            }
        }
    }
    true
}

fn value(t: &Term, val: &BTreeMap<&str, i64>) -> Option<i64> {
    match t {
        Term::Int(n) => Some(*n),
        Term::Var(v) => val.get(v.as_str()).copied(),
    }
}

/// Builds the heap denoted by `h` under a total valuation, if consistent.
fn build(h: &SymHeap, val: &BTreeMap<&str, i64>, u: &Universe) -> Option<ConcreteHeap> {
    for (a, b) in &h.eqs {
        if value(a, val)? != value(b, val)? {
            return None;
        }
    }
    for (a, b) in &h.neqs {
        if value(a, val)? == value(b, val)? {
            return None;
        }
    }
    let mut heap: ConcreteHeap = BTreeMap::new();
    for atom in &h.atoms {
        let addr = value(atom.addr(), val)?;
        if !u.addrs.contains(&addr) {
            return None;
        }
        let obj = match atom {
            Atom::Cell { fields, .. } => Obj::Cell(value(&fields[0], val)?, value(&fields[1], val)?),
            Atom::Endpoint { contract, state, peer, .. } => Obj::Endpoint {
                contract: contract.clone(),
                state: state.clone(),
                peer: value(peer, val)?,
            },
        };
        match heap.get_mut(&addr) {
            None => {
                heap.insert(addr, (obj, atom.perm().clone()));
            }
            Some((prev, p)) => {
                if *prev != obj {
                    return None;
                }
                let sum = &*p + atom.perm();
                if !sum.is_valid() {
                    return None;
                }
                *p = sum;
            }
        }
    }
    for (a, b) in &h.peers {
        let (a, b) = (value(a, val)?, value(b, val)?);
        if let Some((obj, _)) = heap.get(&a) {
            match obj {
                Obj::Endpoint { peer, .. } if *peer == b => {}
                _ => return None,
            }
        }
    }
    well_formed(&heap, u).then_some(heap)
}

fn guard(n_vars: usize, domain: usize) -> Result<(), ModelError> {
    let candidates = (domain as u128).checked_pow(n_vars as u32).unwrap_or(u128::MAX);
    if candidates > MAX_CANDIDATES {
        return Err(ModelError::TooLarge(candidates));
    }
    Ok(())
}

/// Every `(store, heap)` satisfying `h`, with stores over `h`'s free
/// variables plus `extra_free`.
pub fn models_with(h: &SymHeap, u: &Universe, extra_free: &BTreeSet<String>) -> Result<Vec<Model>, ModelError> {
    if h.unsat {
        return Ok(vec![]);
    }
    let mut free: BTreeSet<String> = h.free_vars();
    free.extend(extra_free.iter().cloned());
    let exists: Vec<&str> =
        h.exists.iter().filter(|e| !free.contains(*e)).map(String::as_str).collect();
    let names: Vec<&str> = free.iter().map(String::as_str).chain(exists.iter().copied()).collect();
    let domain = u.domain();
    guard(names.len(), domain.len())?;
    let mut out = BTreeSet::new();
    let mut val: BTreeMap<&str, i64> = BTreeMap::new();
    enumerate(&names, 0, &domain, &mut val, &mut |val| {
        if let Some(heap) = build(h, val, u) {
            let store = free.iter().map(|f| (f.clone(), val[f.as_str()])).collect();
            out.insert(Model { store, heap });
        }
    });
    Ok(out.into_iter().collect())
}

pub fn models(h: &SymHeap, u: &Universe) -> Result<Vec<Model>, ModelError> {
    models_with(h, u, &BTreeSet::new())
}

fn enumerate<'a>(
    names: &[&'a str],
    i: usize,
    domain: &[i64],
    val: &mut BTreeMap<&'a str, i64>,
    f: &mut dyn FnMut(&BTreeMap<&'a str, i64>),
) {
    if i == names.len() {
        f(val);
        return;
    }
    for &d in domain {
        val.insert(names[i], d);
        enumerate(names, i + 1, domain, val, f);
    }
    val.remove(names[i]);
}

/// Whether `(store, heap)` satisfies `h` for some valuation of its existentials.
pub fn satisfies(h: &SymHeap, store: &Store, heap: &ConcreteHeap, u: &Universe) -> Result<bool, ModelError> {
    if h.unsat {
        return Ok(false);
    }
    let exists: Vec<&str> = h
        .exists
        .iter()
        .filter(|e| !store.contains_key(*e))
        .map(String::as_str)
        .collect();
    let domain = u.domain();
    guard(exists.len(), domain.len())?;
    let mut val: BTreeMap<&str, i64> = store.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut found = false;
    enumerate(&exists, 0, &domain, &mut val, &mut |val| {
        if !found {
            if let Some(built) = build(h, val, u) {
                found = built == *heap;
            }
        }
    });
    Ok(found)
}

/// Semantic entailment over a finite universe: every model of `h1` is a
/// model of `h2` under the same store.
pub fn oracle_entails(h1: &SymHeap, h2: &SymHeap, u: &Universe) -> Result<bool, ModelError> {
    let extra = h2.free_vars();
    for m in models_with(h1, u, &extra)? {
        if !satisfies(h2, &m.store, &m.heap, u)? {
            return Ok(false);
        }
    }
    Ok(true)
}
