use std::collections::{BTreeMap, BTreeSet};

use super::{Reason, Rejection, VerifierOptions, Warning, WarningKind};
use crate::contracts::{Contract, Direction};
use crate::lang::{Assertion, BinOp, Command, CommandKind, Expr, ResolvedProgram, Site};
use crate::logic::{entails, expand, normalize, subtract, Atom, ContractRef, Fresh, SymHeap, Term};

/// One disjunct of the symbolic state: a heap and the values of program variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub heap: SymHeap,
    pub env: BTreeMap<String, Term>,
}

type Res<T> = Result<T, Rejection>;

pub(super) struct Exec<'a> {
    prog: &'a ResolvedProgram,
    opts: &'a VerifierOptions,
    fresh: Fresh,
    pub warnings: Vec<Warning>,
}

fn reject(site: Site, reason: Reason, message: impl Into<String>, heap: &SymHeap) -> Rejection {
    Rejection { site: site.into(), reason, message: message.into(), heap: heap.to_string() }
}

impl<'a> Exec<'a> {
    pub fn new(prog: &'a ResolvedProgram, opts: &'a VerifierOptions) -> Self {
        Exec { prog, opts, fresh: Fresh::new(), warnings: Vec::new() }
    }

    fn expand(&mut self, a: &Assertion, env: &BTreeMap<String, Term>, site: Site) -> Res<SymHeap> {
        expand(&self.prog.source.predicates, a, env, &mut self.fresh)
            .map_err(|e| reject(site, Reason::BadAnnotation, e.to_string(), &SymHeap::emp()))
    }

    fn fresh_existential(&mut self, h: &mut SymHeap) -> Term {
        let t = self.fresh.term();
        if let Term::Var(v) = &t {
            h.exists.insert(v.clone());
        }
        t
    }

    /// Normalizes, dropping inconsistent disjuncts with a warning.
    fn settle(&mut self, mut s: State, site: Site, what: &str) -> Option<State> {
        // Values held by program variables are named, so they must survive
        // normalization.
        for t in s.env.values() {
            if let Term::Var(v) = t {
                s.heap.exists.remove(v);
            }
        }
        s.heap = normalize(&s.heap);
        if s.heap.unsat {
            self.warnings.push(Warning {
                site: site.into(),
                kind: WarningKind::UnsatAnnotation,
                message: format!("state became inconsistent after {what}; the path is unreachable"),
            });
            None
        } else {
            Some(s)
        }
    }

    pub fn function_framed(&mut self, name: &str, frame: &SymHeap) -> Res<()> {
        let f = self.prog.function(name).expect("resolved function");
        let info = &self.prog.functions[name];
        let mut env = BTreeMap::new();
        for v in f.params.iter().chain(&self.prog.source.globals) {
            env.insert(v.clone(), Term::var(v));
        }
        for l in &info.locals {
            env.insert(l.clone(), self.fresh.term());
        }
        let pre = self.expand(&f.pre, &env, f.site)?.star(frame);
        let start = State { heap: pre, env };
        let Some(start) = self.settle(start, f.site, "assuming the precondition") else {
            return Ok(());
        };
        let finals = self.exec(&f.body, vec![start])?;
        for s in finals {
            let mut post_env: BTreeMap<String, Term> = BTreeMap::new();
            for p in &f.params {
                post_env.insert(p.clone(), Term::var(p));
            }
            for g in &self.prog.source.globals {
                post_env.insert(g.clone(), s.env[g].clone());
            }
            if let Some(r) = s.env.get("ret") {
                post_env.insert("ret".into(), r.clone());
            }
            let post = self.expand(&f.post, &post_env, f.site)?.star(frame);
            if !entails(&s.heap, &post) {
                return Err(reject(
                    f.site,
                    Reason::PostMismatch,
                    format!("final state of `{name}` does not match its postcondition {}", normalize(&post)),
                    &s.heap,
                ));
            }
        }
        Ok(())
    }

    pub fn exec(&mut self, c: &Command, states: Vec<State>) -> Res<Vec<State>> {
        match &c.kind {
            CommandKind::Seq(cmds) => {
                let mut cur = states;
                for c in cmds {
                    cur = self.exec(c, cur)?;
                }
                Ok(cur)
            }
            _ => {
                let mut out = Vec::new();
                for s in states {
                    out.extend(self.step(c, s)?);
                }
                Ok(out)
            }
        }
    }

    fn eval(&mut self, e: &Expr, env: &BTreeMap<String, Term>) -> Term {
        match e {
            Expr::Var(v) => env.get(v).cloned().unwrap_or_else(|| Term::var(v)),
            Expr::Int(n) => Term::Int(*n),
            Expr::Nondet => self.fresh.term(),
            Expr::Bin(op, a, b) => match (self.eval(a, env), self.eval(b, env)) {
                (Term::Int(x), Term::Int(y)) => {
                    let r = match op {
                        BinOp::Add => x.checked_add(y),
                        BinOp::Sub => x.checked_sub(y),
                        BinOp::Mul => x.checked_mul(y),
                    };
                    r.map(Term::Int).unwrap_or_else(|| self.fresh.term())
                }
                _ => self.fresh.term(),
            },
        }
    }

    fn lookup(&self, env: &BTreeMap<String, Term>, h: &SymHeap, v: &str) -> Term {
        h.rep(&env.get(v).cloned().unwrap_or_else(|| Term::var(v)))
    }

    fn contract_of(&self, r: &ContractRef) -> Contract {
        self.prog.contract(&r.name, r.dual).expect("resolved contract")
    }

    /// Every term that denotes an allocated or once-allocated address.
    fn address_terms(h: &SymHeap) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for a in &h.atoms {
            out.insert(a.addr().clone());
            if let Atom::Endpoint { peer, .. } = a {
                out.insert(peer.clone());
            }
        }
        for (a, b) in &h.peers {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        out
    }

    fn allocate(&mut self, h: &mut SymHeap) -> Term {
        let others = Self::address_terms(h);
        let x = self.fresh.term();
        for o in others {
            h.neqs.push((x.clone(), o));
        }
        x
    }

    /// Applies the `(d, m)` transition to the endpoint atom at `e`.
    fn contract_step(&self, h: &mut SymHeap, e: &Term, d: Direction, m: &str, site: Site) -> Res<()> {
        let idx = h.atoms.iter().position(|a| a.is_endpoint() && a.addr() == e).ok_or_else(|| {
            reject(site, Reason::OwnershipMissing, format!("no endpoint atom for {e}"), h)
        })?;
        let Atom::Endpoint { perm, contract, state, .. } = &h.atoms[idx] else { unreachable!() };
        let c = self.contract_of(contract);
        let next = c
            .successor(state, d, m)
            .expect("state checked at resolution")
            .ok_or_else(|| {
                reject(
                    site,
                    Reason::ContractViolation,
                    format!("contract {contract} has no {d}{m} transition from state {state}"),
                    h,
                )
            })?
            .to_string();
        if next != *state && !perm.is_one() {
            return Err(reject(
                site,
                Reason::PermissionViolation,
                format!(
                    "{d}{m} moves {contract} from state {state} to {next} but only permission {perm} is held"
                ),
                h,
            ));
        }
        if let Atom::Endpoint { state, .. } = &mut h.atoms[idx] {
            *state = next;
        }
        Ok(())
    }

    fn footprint_env(
        &self,
        tag: &str,
        src: Term,
        args: Vec<Term>,
        env: &BTreeMap<String, Term>,
    ) -> (Assertion, BTreeMap<String, Term>) {
        let m = self.prog.message(tag).expect("resolved tag");
        let mut fenv = BTreeMap::new();
        for g in &self.prog.source.globals {
            fenv.insert(g.clone(), env[g].clone());
        }
        for (p, a) in m.params.iter().zip(args) {
            fenv.insert(p.clone(), a);
        }
        fenv.insert("src".into(), src);
        (m.footprint.clone(), fenv)
    }

    fn send(&mut self, s: State, tag: &str, endpoint: &str, args: &[Expr], site: Site) -> Res<State> {
        let mut h = s.heap;
        let e = self.lookup(&s.env, &h, endpoint);
        let vals: Vec<Term> = args.iter().map(|a| self.eval(a, &s.env)).collect();
        let (fp, fenv) = self.footprint_env(tag, e.clone(), vals, &s.env);
        let fp = self.expand(&fp, &fenv, site)?;
        let carve = |h: &SymHeap| {
            subtract(h, &fp).map(|m| m.frame).ok_or_else(|| {
                reject(
                    site,
                    Reason::EntailmentFailure,
                    format!("cannot transfer the footprint of `{tag}`: {}", normalize(&fp)),
                    h,
                )
            })
        };
        if self.opts.footprint_before_step {
            h = carve(&h)?;
            self.contract_step(&mut h, &e, Direction::Send, tag, site)?;
        } else {
            self.contract_step(&mut h, &e, Direction::Send, tag, site)?;
            h = carve(&h)?;
        }
        Ok(State { heap: h, env: s.env })
    }

    fn receive(&mut self, s: State, binders: &[String], tag: &str, endpoint: &str, site: Site) -> Res<Option<State>> {
        let e = self.lookup(&s.env, &s.heap, endpoint);
        let src = self.fresh.term();
        let vals: Vec<Term> = binders.iter().map(|_| self.fresh.term()).collect();
        let (fp, fenv) = self.footprint_env(tag, src.clone(), vals.clone(), &s.env);
        let fp = self.expand(&fp, &fenv, site)?;
        let joined = State { heap: s.heap.star(&fp), env: s.env };
        let Some(mut st) = self.settle(joined, site, &format!("receiving `{tag}`")) else {
            return Ok(None);
        };
        let e = st.heap.rep(&e);
        let peer = st
            .heap
            .atoms
            .iter()
            .find_map(|a| match a {
                Atom::Endpoint { addr, peer, .. } if *addr == e => Some(peer.clone()),
                _ => None,
            })
            .ok_or_else(|| {
                reject(site, Reason::OwnershipMissing, format!("no endpoint atom for `{endpoint}`"), &st.heap)
            })?;
        st.heap.eqs.push((src, peer));
        let Some(mut st) = self.settle(st, site, &format!("receiving `{tag}`")) else {
            return Ok(None);
        };
        let e = st.heap.rep(&e);
        self.contract_step(&mut st.heap, &e, Direction::Recv, tag, site)?;
        for (b, v) in binders.iter().zip(vals) {
            st.env.insert(b.clone(), v);
        }
        Ok(Some(st))
    }

    fn cell_index(h: &SymHeap, x: &Term) -> Option<usize> {
        h.atoms.iter().position(|a| !a.is_endpoint() && a.addr() == x)
    }

    fn step(&mut self, c: &Command, s: State) -> Res<Vec<State>> {
        let site = c.site;
        let lax = self.opts.lax_heap_ops;
        let next = match &c.kind {
            CommandKind::Skip => s,
            CommandKind::Assign { var, expr } => {
                let t = self.eval(expr, &s.env);
                let mut s = s;
                s.env.insert(var.clone(), t);
                s
            }
            CommandKind::New { var } => {
                let mut s = s;
                let x = self.allocate(&mut s.heap);
                let f0 = self.fresh_existential(&mut s.heap);
                let f1 = self.fresh_existential(&mut s.heap);
                s.heap.atoms.push(Atom::Cell { addr: x.clone(), perm: crate::logic::Perm::one(), fields: [f0, f1] });
                s.env.insert(var.clone(), x);
                s
            }
            CommandKind::Dispose { var } => {
                let mut s = s;
                let x = self.lookup(&s.env, &s.heap, var);
                match Self::cell_index(&s.heap, &x) {
                    Some(i) if s.heap.atoms[i].perm().is_one() || lax => {
                        s.heap.atoms.remove(i);
                    }
                    Some(i) => {
                        return Err(reject(
                            site,
                            Reason::PermissionViolation,
                            format!("dispose({var}) needs permission 1, holds {}", s.heap.atoms[i].perm()),
                            &s.heap,
                        ))
                    }
                    None if lax => {}
                    None => {
                        return Err(reject(site, Reason::OwnershipMissing, format!("dispose({var}): no cell owned"), &s.heap))
                    }
                }
                s
            }
            CommandKind::Read { var, ptr, field } => {
                let mut s = s;
                let x = self.lookup(&s.env, &s.heap, ptr);
                let v = match Self::cell_index(&s.heap, &x) {
                    Some(i) => match &s.heap.atoms[i] {
                        Atom::Cell { fields, .. } => fields[*field as usize].clone(),
                        _ => unreachable!(),
                    },
                    None if lax => self.fresh.term(),
                    None => {
                        return Err(reject(site, Reason::OwnershipMissing, format!("read of {ptr}.{field}: no cell owned"), &s.heap))
                    }
                };
                s.env.insert(var.clone(), v);
                s
            }
            CommandKind::Write { ptr, field, expr } => {
                let mut s = s;
                let x = self.lookup(&s.env, &s.heap, ptr);
                let v = self.eval(expr, &s.env);
                match Self::cell_index(&s.heap, &x) {
                    Some(i) if s.heap.atoms[i].perm().is_one() || lax => {
                        if let Atom::Cell { fields, .. } = &mut s.heap.atoms[i] {
                            fields[*field as usize] = v;
                        }
                    }
                    Some(i) => {
                        return Err(reject(
                            site,
                            Reason::PermissionViolation,
                            format!("write to {ptr}.{field} needs permission 1, holds {}", s.heap.atoms[i].perm()),
                            &s.heap,
                        ))
                    }
                    None if lax => {}
                    None => {
                        return Err(reject(site, Reason::OwnershipMissing, format!("write to {ptr}.{field}: no cell owned"), &s.heap))
                    }
                }
                s
            }
            CommandKind::Open { left, right, contract } => {
                let mut s = s;
                let c = &self.prog.contracts[contract];
                let e = self.allocate(&mut s.heap);
                let f = self.allocate(&mut s.heap);
                s.heap.neqs.push((e.clone(), f.clone()));
                s.heap.atoms.push(Atom::Endpoint {
                    addr: e.clone(),
                    perm: crate::logic::Perm::one(),
                    contract: ContractRef::new(contract, false),
                    state: c.init.clone(),
                    peer: f.clone(),
                });
                s.heap.atoms.push(Atom::Endpoint {
                    addr: f.clone(),
                    perm: crate::logic::Perm::one(),
                    contract: ContractRef::new(contract, true),
                    state: c.init.clone(),
                    peer: e.clone(),
                });
                s.env.insert(left.clone(), e);
                s.env.insert(right.clone(), f);
                s
            }
            CommandKind::Close { left, right } => self.close(s, left, right, site)?,
            CommandKind::Send { tag, endpoint, args } => self.send(s, tag, endpoint, args, site)?,
            CommandKind::Receive { binders, tag, endpoint } => {
                match self.receive(s, binders, tag, endpoint, site)? {
                    Some(s) => s,
                    None => return Ok(vec![]),
                }
            }
            CommandKind::Switch { cases } => return self.switch(s, cases, site),
            CommandKind::Seq(_) => return self.exec(c, vec![s]),
            CommandKind::Par(branches) => return self.par(s, branches, site),
            CommandKind::While { invariant, body, .. } => return self.while_loop(s, invariant, body, site),
            CommandKind::If { then_branch, else_branch, .. } => {
                let mut out = self.exec(then_branch, vec![s.clone()])?;
                out.extend(self.exec(else_branch, vec![s])?);
                return Ok(out);
            }
            CommandKind::Local { vars, body } => {
                let mut s = s;
                let saved: Vec<(String, Option<Term>)> =
                    vars.iter().map(|v| (v.clone(), s.env.get(v).cloned())).collect();
                for v in vars {
                    let t = self.fresh.term();
                    s.env.insert(v.clone(), t);
                }
                let mut out = self.exec(body, vec![s])?;
                for st in &mut out {
                    for (v, old) in &saved {
                        match old {
                            Some(t) => st.env.insert(v.clone(), t.clone()),
                            None => st.env.remove(v),
                        };
                    }
                }
                return Ok(out);
            }
            CommandKind::Call { func, args, result } => self.call(s, func, args, result.as_deref(), site)?,
            CommandKind::Spawn { func, args } => self.spawn(s, func, args, site)?,
            CommandKind::Return(e) => {
                let mut s = s;
                let t = self.eval(e, &s.env);
                s.env.insert("ret".into(), t);
                s
            }
        };
        Ok(self.settle(next, site, "this command").into_iter().collect())
    }

    fn close(&mut self, s: State, left: &str, right: &str, site: Site) -> Res<State> {
        let mut s = s;
        let e = self.lookup(&s.env, &s.heap, left);
        let f = self.lookup(&s.env, &s.heap, right);
        let find = |h: &SymHeap, x: &Term| h.atoms.iter().position(|a| a.is_endpoint() && a.addr() == x);
        let (Some(ie), Some(jf)) = (find(&s.heap, &e), find(&s.heap, &f)) else {
            return Err(reject(
                site,
                Reason::OwnershipMissing,
                format!("close({left}, {right}): both endpoints must be owned"),
                &s.heap,
            ));
        };
        let (
            Atom::Endpoint { perm: pe, contract: ce, state: qe, peer: fe, .. },
            Atom::Endpoint { perm: pf, contract: cf, state: qf, peer: ef, .. },
        ) = (&s.heap.atoms[ie], &s.heap.atoms[jf])
        else {
            unreachable!()
        };
        let problem = if *fe != f || *ef != e {
            Some(format!("{left} and {right} are not known to be peers"))
        } else if !pe.is_one() || !pf.is_one() {
            Some(format!("close needs full permissions, holds {pe} and {pf}"))
        } else if *cf != ce.flipped() {
            Some(format!("contracts {ce} and {cf} are not dual"))
        } else if qe != qf {
            Some(format!("endpoints are in different states {qe} and {qf}"))
        } else if !self.contract_of(ce).is_final(qe) {
            Some(format!("state {qe} of {ce} is not final"))
        } else {
            None
        };
        if let Some(msg) = problem {
            return Err(reject(site, Reason::ClosePrecondition, msg, &s.heap));
        }
        let (a, b) = if ie > jf { (ie, jf) } else { (jf, ie) };
        s.heap.atoms.remove(a);
        s.heap.atoms.remove(b);
        s.heap.peers.push((e.clone(), f.clone()));
        s.heap.peers.push((f, e));
        Ok(s)
    }

    fn switch(&mut self, s: State, cases: &[crate::lang::SwitchCase], site: Site) -> Res<Vec<State>> {
        let mut groups: Vec<(&str, Vec<&crate::lang::SwitchCase>)> = Vec::new();
        for c in cases {
            match groups.iter_mut().find(|(e, _)| *e == c.endpoint) {
                Some((_, g)) => g.push(c),
                None => groups.push((&c.endpoint, vec![c])),
            }
        }
        let mut out = Vec::new();
        for (endpoint, group) in groups {
            let e = self.lookup(&s.env, &s.heap, endpoint);
            let (contract, state) = s
                .heap
                .atoms
                .iter()
                .find_map(|a| match a {
                    Atom::Endpoint { addr, contract, state, .. } if *addr == e => {
                        Some((contract.clone(), state.clone()))
                    }
                    _ => None,
                })
                .ok_or_else(|| {
                    reject(site, Reason::OwnershipMissing, format!("switch scans `{endpoint}` without owning it"), &s.heap)
                })?;
            let c = self.contract_of(&contract);
            let choices = c.choices(&state).expect("known state");
            let tags: BTreeSet<String> = group.iter().map(|c| c.tag.clone()).collect();
            let missing: Vec<&String> = choices.difference(&tags).collect();
            if !missing.is_empty() {
                return Err(reject(
                    site,
                    Reason::NonExhaustiveSwitch,
                    format!(
                        "switch on `{endpoint}` at {contract}<{state}> misses case(s) {}",
                        missing.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(", ")
                    ),
                    &s.heap,
                ));
            }
            for case in group {
                if !choices.contains(&case.tag) {
                    continue;
                }
                if let Some(st) = self.receive(s.clone(), &case.binders, &case.tag, endpoint, case.site)? {
                    out.extend(self.exec(&case.body, vec![st])?);
                }
            }
        }
        Ok(out)
    }

    /// Variables a command may assign, including globals assigned by callees.
    fn writes(&self, c: &Command) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = c.assigned_vars().into_iter().collect();
        c.walk(&mut |x| match &x.kind {
            CommandKind::Call { func, .. } | CommandKind::Spawn { func, .. } => {
                out.extend(self.prog.functions[func].modifies.iter().cloned());
            }
            _ => {}
        });
        out
    }

    fn par(&mut self, s: State, branches: &[crate::lang::ParBranch], site: Site) -> Res<Vec<State>> {
        let writes: Vec<BTreeSet<String>> = branches.iter().map(|b| self.writes(&b.body)).collect();
        let reads: Vec<BTreeSet<String>> = branches
            .iter()
            .map(|b| {
                let mut r: BTreeSet<String> = b.body.mentioned_vars().into_iter().collect();
                r.extend(self.writes(&b.body));
                r
            })
            .collect();
        for i in 0..branches.len() {
            for j in 0..branches.len() {
                if i != j {
                    if let Some(v) = writes[i].intersection(&reads[j]).next() {
                        return Err(reject(
                            site,
                            Reason::VariableConflict,
                            format!("`{v}` is assigned in parallel branch {} and used in branch {}", i + 1, j + 1),
                            &s.heap,
                        ));
                    }
                }
            }
        }
        let mut pres = Vec::new();
        for b in branches {
            pres.push(self.expand(&b.pre, &s.env, site)?);
        }
        let whole = pres.iter().fold(SymHeap::emp(), |acc, p| acc.star(p));
        let m = subtract(&s.heap, &whole).ok_or_else(|| {
            reject(
                site,
                Reason::EntailmentFailure,
                format!("cannot split the state into the branch preconditions {}", normalize(&whole)),
                &s.heap,
            )
        })?;
        let pure = s.heap.pure_part();
        let mut results: Vec<Vec<State>> = Vec::new();
        for (b, pre) in branches.iter().zip(&pres) {
            let start = State { heap: pre.subst(&m.theta).star(&pure), env: s.env.clone() };
            let Some(start) = self.settle(start, site, "splitting into branches") else {
                return Ok(vec![]);
            };
            results.push(self.exec(&b.body, vec![start])?);
        }
        // Join: one combined state per choice of branch outcome.
        let mut joined = vec![State { heap: m.frame.clone(), env: s.env.clone() }];
        for (i, outs) in results.iter().enumerate() {
            let mut next = Vec::new();
            for acc in &joined {
                for o in outs {
                    let mut env = acc.env.clone();
                    for v in &writes[i] {
                        if let Some(t) = o.env.get(v) {
                            env.insert(v.clone(), t.clone());
                        }
                    }
                    next.push(State { heap: acc.heap.star(&o.heap), env });
                }
            }
            joined = next;
        }
        Ok(joined.into_iter().filter_map(|st| self.settle(st, site, "joining branches")).collect())
    }

    fn havoc(&mut self, env: &BTreeMap<String, Term>, vars: &BTreeSet<String>) -> BTreeMap<String, Term> {
        let mut env = env.clone();
        for v in vars {
            if env.contains_key(v) {
                let t = self.fresh.term();
                env.insert(v.clone(), t);
            }
        }
        env
    }

    fn while_loop(&mut self, s: State, invariant: &Assertion, body: &Command, site: Site) -> Res<Vec<State>> {
        let j = self.expand(invariant, &s.env, site)?;
        let m = subtract(&s.heap, &j).ok_or_else(|| {
            reject(
                site,
                Reason::EntailmentFailure,
                format!("loop invariant {} does not hold on entry", normalize(&j)),
                &s.heap,
            )
        })?;
        let modified = self.writes(body);
        let env = self.havoc(&s.env, &modified);
        let j_in = self.expand(invariant, &env, site)?;
        let pure = s.heap.pure_part();
        let start = State { heap: j_in.star(&pure), env: env.clone() };
        if let Some(start) = self.settle(start, site, "assuming the loop invariant") {
            for end in self.exec(body, vec![start])? {
                let j_out = self.expand(invariant, &end.env, site)?;
                if !entails(&end.heap, &j_out) {
                    return Err(reject(
                        site,
                        Reason::EntailmentFailure,
                        format!("loop body does not preserve the invariant {}", normalize(&j_out)),
                        &end.heap,
                    ));
                }
            }
        }
        let j_after = self.expand(invariant, &env, site)?;
        let after = State { heap: m.frame.star(&j_after), env };
        Ok(self.settle(after, site, "leaving the loop").into_iter().collect())
    }

    fn callee_pre(&mut self, s: &State, func: &str, args: &[Expr], site: Site) -> Res<(BTreeMap<String, Term>, SymHeap)> {
        let f = self.prog.function(func).expect("resolved callee");
        let mut cenv = BTreeMap::new();
        for g in &self.prog.source.globals {
            cenv.insert(g.clone(), s.env[g].clone());
        }
        for (p, a) in f.params.iter().zip(args) {
            let t = self.eval(a, &s.env);
            cenv.insert(p.clone(), t);
        }
        let pre = self.expand(&f.pre, &cenv, site)?;
        Ok((cenv, pre))
    }

    fn call(&mut self, s: State, func: &str, args: &[Expr], result: Option<&str>, site: Site) -> Res<State> {
        let (cenv, pre) = self.callee_pre(&s, func, args, site)?;
        let m = subtract(&s.heap, &pre).ok_or_else(|| {
            reject(
                site,
                Reason::EntailmentFailure,
                format!("precondition of `{func}` not satisfied: {}", normalize(&pre)),
                &s.heap,
            )
        })?;
        let modifies: BTreeSet<String> = self.prog.functions[func].modifies.iter().cloned().collect();
        let env = self.havoc(&s.env, &modifies);
        let mut post_env = cenv;
        for g in &self.prog.source.globals {
            post_env.insert(g.clone(), env[g].clone());
        }
        let ret = self.fresh.term();
        post_env.insert("ret".into(), ret.clone());
        let f = self.prog.function(func).expect("resolved callee");
        let post = self.expand(&f.post, &post_env, site)?;
        let mut env = env;
        if let Some(r) = result {
            env.insert(r.to_string(), ret);
        }
        Ok(State { heap: m.frame.star(&post), env })
    }

    fn spawn(&mut self, s: State, func: &str, args: &[Expr], site: Site) -> Res<State> {
        let (cenv, pre) = self.callee_pre(&s, func, args, site)?;
        let m = subtract(&s.heap, &pre).ok_or_else(|| {
            reject(
                site,
                Reason::EntailmentFailure,
                format!("precondition of spawned `{func}` not satisfied: {}", normalize(&pre)),
                &s.heap,
            )
        })?;
        let f = self.prog.function(func).expect("resolved callee");
        let mut post_env = cenv;
        post_env.insert("ret".into(), self.fresh.term());
        let post = normalize(&self.expand(&f.post, &post_env, site)?);
        if !post.atoms.is_empty() {
            return Err(reject(
                site,
                Reason::SpawnLeak,
                format!("spawned `{func}` ends owning {post}; nothing can collect it"),
                &s.heap,
            ));
        }
        let modifies: BTreeSet<String> = self.prog.functions[func].modifies.iter().cloned().collect();
        let env = self.havoc(&s.env, &modifies);
        Ok(State { heap: m.frame, env })
    }
}
