//! Name resolution and static well-formedness checks.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::parser::is_reserved;
use super::ResolveError;
use crate::contracts::{Contract, Direction, LintConfig, Severity};

/// A program whose names all resolve, with the derived tables the verifier
/// and interpreter consult.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedProgram {
    pub source: SourceProgram,
    pub contracts: BTreeMap<String, Contract>,
    pub functions: BTreeMap<String, FunctionInfo>,
    /// Contract lint severities after applying file pragmas.
    pub lint: LintConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FunctionInfo {
    /// Implicitly declared locals: assigned in the body, neither a parameter
    /// nor a global, and not inside a `local` block.
    pub locals: Vec<String>,
    /// Globals the function or anything it calls or spawns may assign.
    pub modifies: Vec<String>,
}

impl ResolvedProgram {
    pub fn contract(&self, name: &str, dual: bool) -> Option<Contract> {
        let c = self.contracts.get(name)?;
        Some(if dual { c.dual() } else { c.clone() })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.source.function(name)
    }

    pub fn message(&self, tag: &str) -> Option<&MessageDecl> {
        self.source.message(tag)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.source.predicates.iter().find(|p| p.name == name)
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.source.globals.iter().any(|g| g == name)
    }
}

pub fn resolve(prog: &SourceProgram) -> Result<ResolvedProgram, ResolveError> {
    if prog.function(prog.entry()).is_none() {
        return Err(ResolveError::MissingMain);
    }
    let mut lint = LintConfig::default();
    for p in &prog.pragmas {
        let sev = match p.value.as_str() {
            "warn" => Severity::Warn,
            "error" => Severity::Error,
            _ => return Err(bad_pragma(p)),
        };
        match p.key.as_str() {
            "mixed_choice" => lint.mixed_choice = sev,
            "cycle" => lint.cycle = sev,
            _ => return Err(bad_pragma(p)),
        }
    }
    let mut contracts = BTreeMap::new();
    for c in &prog.contracts {
        let transitions = c.transitions.iter().map(|t| {
            let d = if t.send { Direction::Send } else { Direction::Recv };
            (t.from.clone(), d, t.tag.clone(), t.to.clone())
        });
        let finals: Vec<&str> = c.finals.iter().map(String::as_str).collect();
        let built = Contract::new(&c.name, &c.initial, &finals, transitions)
            .map_err(|source| ResolveError::BadContract { site: c.site, source })?;
        contracts.insert(c.name.clone(), built);
    }
    let r = Resolver { prog, contracts: &contracts };

    for g in &prog.globals {
        r.check_name(g, Site::default())?;
    }
    r.check_predicates()?;
    for m in &prog.messages {
        for p in &m.params {
            r.check_name(p, m.site)?;
        }
        let mut scope: Vec<String> = m.params.clone();
        scope.push("src".into());
        scope.extend(prog.globals.iter().cloned());
        r.assertion(&m.footprint, &scope, &[], m.site)?;
    }

    let mut functions = BTreeMap::new();
    for f in &prog.functions {
        for p in &f.params {
            r.check_name(p, f.site)?;
        }
        let mut base: Vec<String> = f.params.clone();
        base.extend(prog.globals.iter().cloned());
        r.assertion(&f.pre, &base, &[], f.site)?;
        let mut post_scope = base.clone();
        if f.returns {
            post_scope.push("ret".into());
        }
        r.assertion(&f.post, &post_scope, &[], f.site)?;

        let locals: Vec<String> =
            f.body.assigned_vars().into_iter().filter(|v| !base.contains(v)).collect();
        for l in &locals {
            r.check_name(l, f.site)?;
        }
        let mut scope = base;
        scope.extend(locals.iter().cloned());
        r.command(&f.body, &mut scope)?;
        check_return_position(&f.body, true)?;
        functions.insert(f.name.clone(), FunctionInfo { locals, modifies: vec![] });
    }
    compute_modifies(prog, &mut functions);
    Ok(ResolvedProgram { source: prog.clone(), contracts, functions, lint })
}

fn bad_pragma(p: &Pragma) -> ResolveError {
    ResolveError::BadPragma { site: p.site, key: p.key.clone(), value: p.value.clone() }
}

/// `return` may only appear as the final top-level statement (a trailing
/// `local` block counts as top level).
fn check_return_position(body: &Command, top: bool) -> Result<(), ResolveError> {
    let mut result = Ok(());
    match &body.kind {
        CommandKind::Seq(cmds) if top => {
            for (i, c) in cmds.iter().enumerate() {
                let last = i + 1 == cmds.len();
                match &c.kind {
                    CommandKind::Return(_) if last => {}
                    CommandKind::Local { body, .. } if last => check_return_position(body, true)?,
                    _ => check_return_position(c, false)?,
                }
            }
        }
        _ => body.walk(&mut |c| {
            if result.is_ok() && matches!(c.kind, CommandKind::Return(_)) {
                result = Err(ResolveError::MisplacedReturn { site: c.site });
            }
        }),
    }
    result
}

/// Transitive closure of global assignments over the call graph.
fn compute_modifies(prog: &SourceProgram, functions: &mut BTreeMap<String, FunctionInfo>) {
    let mut direct: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut callees: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for f in &prog.functions {
        let set: BTreeSet<String> = f
            .body
            .assigned_vars()
            .into_iter()
            .filter(|v| prog.globals.contains(v) && !f.params.contains(v))
            .collect();
        direct.insert(&f.name, set);
        let mut cs = BTreeSet::new();
        f.body.walk(&mut |c| match &c.kind {
            CommandKind::Call { func, .. } | CommandKind::Spawn { func, .. } => {
                cs.insert(func.clone());
            }
            _ => {}
        });
        callees.insert(&f.name, cs);
    }
    loop {
        let mut changed = false;
        for f in &prog.functions {
            let mut add = BTreeSet::new();
            for g in &callees[f.name.as_str()] {
                add.extend(direct[g.as_str()].iter().cloned());
            }
            let mine = direct.get_mut(f.name.as_str()).unwrap();
            for a in add {
                changed |= mine.insert(a);
            }
        }
        if !changed {
            break;
        }
    }
    for (name, info) in functions.iter_mut() {
        info.modifies = direct[name.as_str()].iter().cloned().collect();
    }
}

struct Resolver<'a> {
    prog: &'a SourceProgram,
    contracts: &'a BTreeMap<String, Contract>,
}

impl Resolver<'_> {
    fn check_name(&self, name: &str, site: Site) -> Result<(), ResolveError> {
        if is_reserved(name) || name == "ret" || name == "src" {
            Err(ResolveError::ReservedName { site, name: name.to_string() })
        } else {
            Ok(())
        }
    }

    fn check_predicates(&self) -> Result<(), ResolveError> {
        for p in &self.prog.predicates {
            let mut scope = p.params.clone();
            scope.extend(self.prog.globals.iter().cloned());
            self.assertion(&p.body, &scope, &p.perm_params, p.site)?;
        }
        // Cycle detection over the "mentions" relation.
        fn mentions(a: &Assertion, out: &mut Vec<String>) {
            match a {
                Assertion::Star(parts) => parts.iter().for_each(|p| mentions(p, out)),
                Assertion::Exists(_, b) => mentions(b, out),
                Assertion::Pred { name, .. } => out.push(name.clone()),
                _ => {}
            }
        }
        let graph: BTreeMap<&str, Vec<String>> = self
            .prog
            .predicates
            .iter()
            .map(|p| {
                let mut out = vec![];
                mentions(&p.body, &mut out);
                (p.name.as_str(), out)
            })
            .collect();
        for p in &self.prog.predicates {
            let mut stack = graph[p.name.as_str()].clone();
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                if n == p.name {
                    return Err(ResolveError::RecursivePredicate { site: p.site, name: n });
                }
                if seen.insert(n.clone()) {
                    stack.extend(graph.get(n.as_str()).into_iter().flatten().cloned());
                }
            }
        }
        Ok(())
    }

    fn term(&self, t: &ATerm, scope: &[String], site: Site) -> Result<(), ResolveError> {
        match t {
            ATerm::Var(v) if !scope.contains(v) => {
                Err(ResolveError::UnboundVariable { site, name: v.clone() })
            }
            _ => Ok(()),
        }
    }

    fn perm(&self, p: &PermExpr, perms: &[String], site: Site) -> Result<(), ResolveError> {
        match p {
            PermExpr::Param { name, .. } if !perms.contains(name) => {
                Err(ResolveError::UnboundPermission { site, name: name.clone() })
            }
            _ => Ok(()),
        }
    }

    fn contract_state(&self, name: &str, state: &str, site: Site) -> Result<(), ResolveError> {
        let c = self
            .contracts
            .get(name)
            .ok_or_else(|| ResolveError::UnknownContract { site, name: name.to_string() })?;
        if !c.states.contains(state) {
            return Err(ResolveError::UnknownState {
                site,
                contract: name.to_string(),
                state: state.to_string(),
            });
        }
        Ok(())
    }

    fn assertion(
        &self,
        a: &Assertion,
        scope: &[String],
        perms: &[String],
        site: Site,
    ) -> Result<(), ResolveError> {
        match a {
            Assertion::Emp => Ok(()),
            Assertion::Star(parts) => {
                parts.iter().try_for_each(|p| self.assertion(p, scope, perms, site))
            }
            Assertion::Exists(vars, body) => {
                for v in vars {
                    self.check_name(v, site)?;
                }
                let mut inner = scope.to_vec();
                inner.extend(vars.iter().cloned());
                self.assertion(body, &inner, perms, site)
            }
            Assertion::Cell { addr, perm, fields } => {
                self.perm(perm, perms, site)?;
                self.term(addr, scope, site)?;
                fields.iter().try_for_each(|f| self.term(f, scope, site))
            }
            Assertion::Endpoint { addr, perm, contract, state, peer, .. } => {
                self.perm(perm, perms, site)?;
                self.contract_state(contract, state, site)?;
                self.term(addr, scope, site)?;
                self.term(peer, scope, site)
            }
            Assertion::Pred { name, perms: ps, args } => {
                let def = self
                    .prog
                    .predicates
                    .iter()
                    .find(|p| &p.name == name)
                    .ok_or_else(|| ResolveError::UnknownPredicate { site, name: name.clone() })?;
                if def.params.len() != args.len() || def.perm_params.len() != ps.len() {
                    return Err(ResolveError::ArityMismatch {
                        site,
                        name: name.clone(),
                        expected: def.params.len() + def.perm_params.len(),
                        found: args.len() + ps.len(),
                    });
                }
                ps.iter().try_for_each(|p| self.perm(p, perms, site))?;
                args.iter().try_for_each(|t| self.term(t, scope, site))
            }
            Assertion::Eq(x, y) | Assertion::Ne(x, y) => {
                self.term(x, scope, site)?;
                self.term(y, scope, site)
            }
        }
    }

    fn var(&self, v: &str, scope: &[String], site: Site) -> Result<(), ResolveError> {
        if scope.iter().any(|s| s == v) {
            Ok(())
        } else {
            Err(ResolveError::UnboundVariable { site, name: v.to_string() })
        }
    }

    fn expr(&self, e: &Expr, scope: &[String], site: Site) -> Result<(), ResolveError> {
        let mut vs = Vec::new();
        e.vars(&mut vs);
        vs.iter().try_for_each(|v| self.var(v, scope, site))
    }

    fn tag(&self, tag: &str, arity: usize, site: Site) -> Result<(), ResolveError> {
        let m = self
            .prog
            .message(tag)
            .ok_or_else(|| ResolveError::UnknownTag { site, tag: tag.to_string() })?;
        if m.params.len() != arity {
            return Err(ResolveError::ArityMismatch {
                site,
                name: tag.to_string(),
                expected: m.params.len(),
                found: arity,
            });
        }
        Ok(())
    }

    fn callee(&self, func: &str, arity: usize, site: Site) -> Result<&FunctionDecl, ResolveError> {
        let f = self
            .prog
            .function(func)
            .ok_or_else(|| ResolveError::UnknownFunction { site, name: func.to_string() })?;
        if f.params.len() != arity {
            return Err(ResolveError::ArityMismatch {
                site,
                name: func.to_string(),
                expected: f.params.len(),
                found: arity,
            });
        }
        Ok(f)
    }

    fn command(&self, c: &Command, scope: &mut Vec<String>) -> Result<(), ResolveError> {
        let site = c.site;
        match &c.kind {
            CommandKind::Skip => Ok(()),
            CommandKind::Assign { var, expr } => {
                self.var(var, scope, site)?;
                self.expr(expr, scope, site)
            }
            CommandKind::New { var } | CommandKind::Dispose { var } => self.var(var, scope, site),
            CommandKind::Read { var, ptr, .. } => {
                self.var(var, scope, site)?;
                self.var(ptr, scope, site)
            }
            CommandKind::Write { ptr, expr, .. } => {
                self.var(ptr, scope, site)?;
                self.expr(expr, scope, site)
            }
            CommandKind::Open { left, right, contract } => {
                self.var(left, scope, site)?;
                self.var(right, scope, site)?;
                if !self.contracts.contains_key(contract) {
                    return Err(ResolveError::UnknownContract { site, name: contract.clone() });
                }
                Ok(())
            }
            CommandKind::Close { left, right } => {
                self.var(left, scope, site)?;
                self.var(right, scope, site)
            }
            CommandKind::Send { tag, endpoint, args } => {
                self.tag(tag, args.len(), site)?;
                self.var(endpoint, scope, site)?;
                args.iter().try_for_each(|a| self.expr(a, scope, site))
            }
            CommandKind::Receive { binders, tag, endpoint } => {
                self.tag(tag, binders.len(), site)?;
                self.var(endpoint, scope, site)?;
                binders.iter().try_for_each(|b| self.var(b, scope, site))
            }
            CommandKind::Switch { cases } => {
                for case in cases {
                    self.tag(&case.tag, case.binders.len(), case.site)?;
                    self.var(&case.endpoint, scope, case.site)?;
                    case.binders.iter().try_for_each(|b| self.var(b, scope, case.site))?;
                    self.command(&case.body, scope)?;
                }
                Ok(())
            }
            CommandKind::Seq(cmds) => cmds.iter().try_for_each(|c| self.command(c, scope)),
            CommandKind::Par(branches) => {
                for b in branches {
                    self.assertion(&b.pre, scope, &[], site)?;
                    self.command(&b.body, scope)?;
                }
                Ok(())
            }
            CommandKind::While { cond, invariant, body } => {
                self.condition(cond, scope, site)?;
                self.assertion(invariant, scope, &[], site)?;
                self.command(body, scope)
            }
            CommandKind::If { cond, then_branch, else_branch } => {
                self.condition(cond, scope, site)?;
                self.command(then_branch, scope)?;
                self.command(else_branch, scope)
            }
            CommandKind::Local { vars, body } => {
                for v in vars {
                    self.check_name(v, site)?;
                }
                let n = scope.len();
                scope.extend(vars.iter().cloned());
                let r = self.command(body, scope);
                scope.truncate(n);
                r
            }
            CommandKind::Call { func, args, result } => {
                let f = self.callee(func, args.len(), site)?;
                args.iter().try_for_each(|a| self.expr(a, scope, site))?;
                if let Some(r) = result {
                    if !f.returns {
                        return Err(ResolveError::NoReturnValue { site, name: func.clone() });
                    }
                    self.var(r, scope, site)?;
                }
                Ok(())
            }
            CommandKind::Spawn { func, args } => {
                self.callee(func, args.len(), site)?;
                args.iter().try_for_each(|a| self.expr(a, scope, site))
            }
            CommandKind::Return(e) => self.expr(e, scope, site),
        }
    }

    fn condition(&self, c: &Condition, scope: &[String], site: Site) -> Result<(), ResolveError> {
        match c {
            Condition::Nondet => Ok(()),
            Condition::Cmp(_, a, b) => {
                self.expr(a, scope, site)?;
                self.expr(b, scope, site)
            }
        }
    }
}
