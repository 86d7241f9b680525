//! Translation of source assertions into symbolic heaps, unfolding macros.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::heap::{Atom, ContractRef, Fresh, SymHeap, Term};
use super::perm::Perm;
use crate::lang::{ATerm, Assertion, PermExpr, PredicateDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("permission parameter `{0}` is unbound")]
    UnboundPermission(String),
    #[error("permission {0} outside (0, 1]")]
    BadPermission(BigRational),
    #[error("macro expansion too deep (recursive predicate `{0}`?)")]
    TooDeep(String),
}

/// Expands `a` into a heap. Free variables are looked up in `env`; names not
/// found there stay as rigid variables of the same name. Existentials and
/// wildcards become fresh names.
pub fn expand(
    defs: &[PredicateDecl],
    a: &Assertion,
    env: &BTreeMap<String, Term>,
    fresh: &mut Fresh,
) -> Result<SymHeap, ExpandError> {
    let mut out = SymHeap::emp();
    let mut cx = Cx { defs, fresh, out: &mut out, depth: 0 };
    cx.go(a, env, &BTreeMap::new())?;
    Ok(out)
}

struct Cx<'a, 'b> {
    defs: &'a [PredicateDecl],
    fresh: &'b mut Fresh,
    out: &'b mut SymHeap,
    depth: usize,
}

impl Cx<'_, '_> {
    fn term(&mut self, t: &ATerm, env: &BTreeMap<String, Term>) -> Term {
        match t {
            ATerm::Var(v) => env.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())),
            ATerm::Int(n) => Term::Int(*n),
            ATerm::Wildcard => {
                let name = self.fresh.name();
                self.out.exists.insert(name.clone());
                Term::Var(name)
            }
        }
    }

    fn perm(&self, p: &PermExpr, perms: &BTreeMap<String, BigRational>) -> Result<Perm, ExpandError> {
        let value = match p {
            PermExpr::Lit(r) => r.clone(),
            PermExpr::Param { name, divisor } => {
                let base = perms
                    .get(name)
                    .ok_or_else(|| ExpandError::UnboundPermission(name.clone()))?;
                base / BigRational::from_integer(BigInt::from(*divisor))
            }
        };
        Perm::new(value).map_err(|e| ExpandError::BadPermission(e.0))
    }

    fn go(
        &mut self,
        a: &Assertion,
        env: &BTreeMap<String, Term>,
        perms: &BTreeMap<String, BigRational>,
    ) -> Result<(), ExpandError> {
        match a {
            Assertion::Emp => {}
            Assertion::Star(parts) => {
                for p in parts {
                    self.go(p, env, perms)?;
                }
            }
            Assertion::Exists(vars, body) => {
                let mut inner = env.clone();
                for v in vars {
                    let name = self.fresh.name();
                    self.out.exists.insert(name.clone());
                    inner.insert(v.clone(), Term::Var(name));
                }
                self.go(body, &inner, perms)?;
            }
            Assertion::Cell { addr, perm, fields } => {
                let atom = Atom::Cell {
                    addr: self.term(addr, env),
                    perm: self.perm(perm, perms)?,
                    fields: [self.term(&fields[0], env), self.term(&fields[1], env)],
                };
                self.out.atoms.push(atom);
            }
            Assertion::Endpoint { addr, perm, contract, dual, state, peer } => {
                let atom = Atom::Endpoint {
                    addr: self.term(addr, env),
                    perm: self.perm(perm, perms)?,
                    contract: ContractRef::new(contract, *dual),
                    state: state.clone(),
                    peer: self.term(peer, env),
                };
                self.out.atoms.push(atom);
            }
            Assertion::Eq(x, y) => {
                let pair = (self.term(x, env), self.term(y, env));
                self.out.eqs.push(pair);
            }
            Assertion::Ne(x, y) => {
                let pair = (self.term(x, env), self.term(y, env));
                self.out.neqs.push(pair);
            }
            Assertion::Pred { name, perms: ps, args } => {
                let def = self
                    .defs
                    .iter()
                    .find(|d| &d.name == name)
                    .ok_or_else(|| ExpandError::UnknownPredicate(name.clone()))?;
                if def.params.len() != args.len() || def.perm_params.len() != ps.len() {
                    return Err(ExpandError::Arity {
                        name: name.clone(),
                        expected: def.params.len() + def.perm_params.len(),
                        found: args.len() + ps.len(),
                    });
                }
                if self.depth > 64 {
                    return Err(ExpandError::TooDeep(name.clone()));
                }
                // Globals and other free names of the body pass through unchanged.
                let mut inner: BTreeMap<String, Term> = BTreeMap::new();
                for (p, t) in def.params.iter().zip(args) {
                    let v = self.term(t, env);
                    inner.insert(p.clone(), v);
                }
                for (k, v) in env {
                    if !def.params.contains(k) && !inner.contains_key(k) {
                        inner.insert(k.clone(), v.clone());
                    }
                }
                let mut inner_perms = BTreeMap::new();
                for (p, e) in def.perm_params.iter().zip(ps) {
                    inner_perms.insert(p.clone(), self.perm(e, perms)?.value().clone());
                }
                self.depth += 1;
                self.go(&def.body, &inner, &inner_perms)?;
                self.depth -= 1;
            }
        }
        Ok(())
    }
}
