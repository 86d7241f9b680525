use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use super::{ErrorKind, Fault};
use crate::contracts::{Contract, Direction};
use crate::lang::{
    render_condition, render_expr, BinOp, CmpOp, Command, CommandKind, Condition, Expr, ResolvedProgram, Site,
};

pub type Tid = u32;
type Slot = u32;

/// A command identified by its position in the program, compared by address.
#[derive(Clone, Copy)]
pub(super) struct Code<'p>(pub &'p Command);

impl PartialEq for Code<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}
impl Eq for Code<'_> {}
impl Hash for Code<'_> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::ptr::hash(self.0, state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub tag: String,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Obj {
    Cell([i64; 2]),
    Endpoint { peer: i64, contract: String, dual: bool, state: String, queue: VecDeque<Message> },
}

#[derive(Clone)]
enum Cont<'p> {
    Exec(Code<'p>),
    /// Re-test of a loop condition; `iter` iterations have run so far.
    Loop(Code<'p>, u32),
    Unbind(String, Option<Slot>),
}

#[derive(Clone)]
struct Frame<'p> {
    scope: BTreeMap<String, Slot>,
    conts: Vec<Cont<'p>>,
    /// Where the caller wants the return value.
    ret_to: Option<Slot>,
    /// Slots to free when the frame is popped (params and function locals).
    owned: Vec<Slot>,
}

#[derive(Clone)]
struct Thread<'p> {
    frames: Vec<Frame<'p>>,
    parent: Option<Tid>,
    /// Children of a parallel composition still running.
    waiting: u32,
}

#[derive(Clone)]
pub struct Config<'p> {
    pub heap: BTreeMap<i64, Obj>,
    store: BTreeMap<Slot, i64>,
    globals: BTreeMap<String, Slot>,
    threads: BTreeMap<Tid, Thread<'p>>,
    next_addr: i64,
}

/// A memory location touched by a thread's next action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(super) enum Loc {
    Addr(i64),
    Var(Slot),
}

pub(super) struct Move<'p> {
    pub label: String,
    pub config: Config<'p>,
    pub truncated: bool,
}

/// Everything a thread can do from a configuration.
#[derive(Default)]
pub(super) struct Succ<'p> {
    pub moves: Vec<Move<'p>>,
    pub faults: Vec<Fault>,
}

pub(super) struct Machine<'p> {
    pub prog: &'p ResolvedProgram,
    contracts: BTreeMap<(String, bool), Contract>,
    pub loop_bound: Option<u32>,
}

type Stepped<'p> = Result<Vec<(Config<'p>, bool)>, Fault>;

impl<'p> Machine<'p> {
    pub fn new(prog: &'p ResolvedProgram, loop_bound: Option<u32>) -> Self {
        let mut contracts = BTreeMap::new();
        for (name, c) in &prog.contracts {
            contracts.insert((name.clone(), false), c.clone());
            contracts.insert((name.clone(), true), c.dual());
        }
        Machine { prog, contracts, loop_bound }
    }

    pub fn initial(&self) -> Config<'p> {
        let mut cfg = Config {
            heap: BTreeMap::new(),
            store: BTreeMap::new(),
            globals: BTreeMap::new(),
            threads: BTreeMap::new(),
            next_addr: 1,
        };
        for g in &self.prog.source.globals {
            let s = cfg.alloc_slot(0);
            cfg.globals.insert(g.clone(), s);
        }
        let main = cfg.call_frame(self.prog, "main", vec![], None);
        let tid = cfg.fresh_tid();
        cfg.threads.insert(tid, Thread { frames: vec![main], parent: None, waiting: 0 });
        cfg.settle(tid);
        cfg
    }

    pub fn threads<'c>(&self, cfg: &'c Config<'p>) -> impl Iterator<Item = Tid> + 'c {
        cfg.threads.keys().copied()
    }

    pub fn is_finished(&self, cfg: &Config<'p>) -> bool {
        cfg.threads.is_empty()
    }

    pub fn site_of(&self, cfg: &Config<'p>, tid: Tid) -> Option<crate::verifier::Location> {
        self.next(cfg, tid).map(|(_, s)| s.into())
    }

    pub fn describe_loc(&self, loc: Loc) -> String {
        match loc {
            Loc::Addr(a) => format!("address {a}"),
            Loc::Var(s) => format!("variable slot {s}"),
        }
    }

    /// Whether the thread is suspended on a parallel join.
    pub fn joining(&self, cfg: &Config<'p>, tid: Tid) -> bool {
        cfg.threads[&tid].waiting > 0
    }

    fn next(&self, cfg: &Config<'p>, tid: Tid) -> Option<(Cont<'p>, Site)> {
        let t = &cfg.threads[&tid];
        if t.waiting > 0 {
            return None;
        }
        let c = t.frames.last()?.conts.last()?.clone();
        let site = match &c {
            Cont::Exec(code) | Cont::Loop(code, _) => code.0.site,
            Cont::Unbind(..) => unreachable!("settled threads never expose bookkeeping"),
        };
        Some((c, site))
    }

    /// Locations read and written by the thread's next action. Channel
    /// operations on endpoints do not count as memory accesses.
    pub fn accesses(&self, cfg: &Config<'p>, tid: Tid) -> Vec<(Loc, bool)> {
        let Some((cont, _)) = self.next(cfg, tid) else { return vec![] };
        let mut out = Vec::new();
        let var = |out: &mut Vec<(Loc, bool)>, name: &str, write: bool| {
            if let Some(s) = cfg.slot(tid, name) {
                out.push((Loc::Var(s), write));
            }
        };
        let code = match cont {
            Cont::Exec(code) | Cont::Loop(code, _) => code.0,
            Cont::Unbind(..) => return out,
        };
        let reads_expr = |out: &mut Vec<(Loc, bool)>, e: &Expr| {
            for v in expr_vars(e) {
                var(out, &v, false);
            }
        };
        match &code.kind {
            CommandKind::Assign { var: x, expr } => {
                reads_expr(&mut out, expr);
                var(&mut out, x, true);
            }
            CommandKind::New { var: x } => var(&mut out, x, true),
            CommandKind::Dispose { var: x } => {
                var(&mut out, x, false);
                if let Some(a) = cfg.get(tid, x) {
                    out.push((Loc::Addr(a), true));
                }
            }
            CommandKind::Read { var: x, ptr, .. } => {
                var(&mut out, ptr, false);
                if let Some(a) = cfg.get(tid, ptr) {
                    out.push((Loc::Addr(a), false));
                }
                var(&mut out, x, true);
            }
            CommandKind::Write { ptr, expr, .. } => {
                var(&mut out, ptr, false);
                reads_expr(&mut out, expr);
                if let Some(a) = cfg.get(tid, ptr) {
                    out.push((Loc::Addr(a), true));
                }
            }
            CommandKind::Open { left, right, .. } => {
                var(&mut out, left, true);
                var(&mut out, right, true);
            }
            CommandKind::Close { left, right } => {
                var(&mut out, left, false);
                var(&mut out, right, false);
            }
            CommandKind::Send { endpoint, args, .. } => {
                var(&mut out, endpoint, false);
                args.iter().for_each(|a| reads_expr(&mut out, a));
            }
            CommandKind::Receive { binders, endpoint, .. } => {
                var(&mut out, endpoint, false);
                binders.iter().for_each(|b| var(&mut out, b, true));
            }
            CommandKind::Switch { cases } => cases.iter().for_each(|c| var(&mut out, &c.endpoint, false)),
            CommandKind::While { cond, .. } | CommandKind::If { cond, .. } => {
                if let Condition::Cmp(_, a, b) = cond {
                    reads_expr(&mut out, a);
                    reads_expr(&mut out, b);
                }
            }
            CommandKind::Call { args, .. } | CommandKind::Spawn { args, .. } => {
                args.iter().for_each(|a| reads_expr(&mut out, a));
            }
            CommandKind::Return(e) => reads_expr(&mut out, e),
            CommandKind::Skip | CommandKind::Seq(_) | CommandKind::Par(_) | CommandKind::Local { .. } => {}
        }
        out
    }

    /// All moves of one thread, or the faults its next action runs into.
    pub fn successors(&self, cfg: &Config<'p>, tid: Tid) -> Succ<'p> {
        let Some((cont, site)) = self.next(cfg, tid) else { return Succ::default() };
        let (code, iter) = match cont {
            Cont::Exec(code) => (code, None),
            Cont::Loop(code, n) => (code, Some(n)),
            Cont::Unbind(..) => unreachable!(),
        };
        let label = format!("{tid}: {} @ {}:{}", describe_command(code.0), site.line, site.col);
        let mut base = cfg.clone();
        base.pop_cont(tid);
        let mut succ = Succ::default();
        let result = match &code.0.kind {
            CommandKind::Switch { cases } => {
                for (i, case) in cases.iter().enumerate() {
                    let Some(e) = cfg.get(tid, &case.endpoint) else { continue };
                    let Some(Obj::Endpoint { queue, .. }) = cfg.heap.get(&e) else { continue };
                    let Some(head) = queue.front() else { continue };
                    let listed = cases.iter().any(|c| c.endpoint == case.endpoint && c.tag == head.tag);
                    if !listed {
                        let first = cases.iter().position(|c| c.endpoint == case.endpoint) == Some(i);
                        if first {
                            succ.faults.push(fault(
                                ErrorKind::UnspecifiedReception,
                                tid,
                                case.site,
                                format!("switch on `{}` finds unlisted message `{}`", case.endpoint, head.tag),
                            ));
                        }
                        continue;
                    }
                    if head.tag != case.tag {
                        continue;
                    }
                    let mut next = base.clone();
                    match self.receive(&mut next, tid, e, &case.tag, &case.binders, case.site) {
                        Ok(()) => {
                            next.push_cont(tid, Cont::Exec(Code(&case.body)));
                            next.settle(tid);
                            succ.moves.push(Move {
                                label: format!("{tid}: switch -> case {} @ {}:{}", case.tag, case.site.line, case.site.col),
                                config: next,
                                truncated: false,
                            });
                        }
                        Err(f) => succ.faults.push(f),
                    }
                }
                return succ;
            }
            _ => self.exec(base, tid, code, iter),
        };
        match result {
            Ok(nexts) => {
                for (mut config, truncated) in nexts {
                    if !truncated {
                        config.settle(tid);
                    }
                    succ.moves.push(Move { label: label.clone(), config, truncated });
                }
            }
            Err(f) => succ.faults.push(f),
        }
        succ
    }

    fn exec(&self, mut cfg: Config<'p>, tid: Tid, code: Code<'p>, iter: Option<u32>) -> Stepped<'p> {
        let c = code.0;
        let site = c.site;
        let mem = |msg: String| fault(ErrorKind::MemoryViolation, tid, site, msg);
        match &c.kind {
            CommandKind::Skip => {}
            CommandKind::Assign { var, expr } => {
                return Ok(self
                    .eval_all(&cfg, tid, expr)
                    .into_iter()
                    .map(|v| {
                        let mut next = cfg.clone();
                        next.set(tid, var, v);
                        (next, false)
                    })
                    .collect());
            }
            CommandKind::New { var } => {
                let a = cfg.alloc(Obj::Cell([0, 0]));
                cfg.set(tid, var, a);
            }
            CommandKind::Dispose { var } => {
                let a = cfg.get(tid, var).unwrap_or(0);
                match cfg.heap.get(&a) {
                    Some(Obj::Cell(_)) => {
                        cfg.heap.remove(&a);
                    }
                    Some(Obj::Endpoint { .. }) => return Err(mem(format!("dispose({var}) on endpoint {a}"))),
                    None => return Err(mem(format!("dispose({var}) on dangling address {a}"))),
                }
            }
            CommandKind::Read { var, ptr, field } => {
                let a = cfg.get(tid, ptr).unwrap_or(0);
                let v = match cfg.heap.get(&a) {
                    Some(Obj::Cell(fs)) => fs[*field as usize],
                    _ => return Err(mem(format!("read of {ptr}.{field} at non-cell address {a}"))),
                };
                cfg.set(tid, var, v);
            }
            CommandKind::Write { ptr, field, expr } => {
                let a = cfg.get(tid, ptr).unwrap_or(0);
                if !matches!(cfg.heap.get(&a), Some(Obj::Cell(_))) {
                    return Err(mem(format!("write to {ptr}.{field} at non-cell address {a}")));
                }
                let mut out = Vec::new();
                for v in self.eval_all(&cfg, tid, expr) {
                    let mut next = cfg.clone();
                    if let Some(Obj::Cell(fs)) = next.heap.get_mut(&a) {
                        fs[*field as usize] = v;
                    }
                    out.push((next, false));
                }
                return Ok(out);
            }
            CommandKind::Open { left, right, contract } => {
                let init = self.prog.contracts[contract].init.clone();
                let e = cfg.next_addr;
                let f = e + 1;
                cfg.next_addr += 2;
                let endpoint = |peer, dual| Obj::Endpoint {
                    peer,
                    contract: contract.clone(),
                    dual,
                    state: init.clone(),
                    queue: VecDeque::new(),
                };
                cfg.heap.insert(e, endpoint(f, false));
                cfg.heap.insert(f, endpoint(e, true));
                cfg.set(tid, left, e);
                cfg.set(tid, right, f);
            }
            CommandKind::Close { left, right } => {
                let e = cfg.get(tid, left).unwrap_or(0);
                let f = cfg.get(tid, right).unwrap_or(0);
                let (Some(Obj::Endpoint { peer: pe, contract: ce, dual: de, state: qe, queue: ue }), Some(Obj::Endpoint { peer: pf, state: qf, queue: uf, .. })) =
                    (cfg.heap.get(&e), cfg.heap.get(&f))
                else {
                    return Err(mem(format!("close({left}, {right}) on non-endpoint addresses {e}, {f}")));
                };
                if *pe != f || *pf != e {
                    return Err(fault(ErrorKind::CloseError, tid, site, format!("close({left}, {right}): {e} and {f} are not peers")));
                }
                if !ue.is_empty() || !uf.is_empty() {
                    let pending: Vec<&str> = ue.iter().chain(uf).map(|m| m.tag.as_str()).collect();
                    return Err(fault(
                        ErrorKind::OrphanMessageAtClose,
                        tid,
                        site,
                        format!("close({left}, {right}) with pending messages {}", pending.join(", ")),
                    ));
                }
                let c = &self.contracts[&(ce.clone(), *de)];
                if qe != qf || !c.is_final(qe) {
                    return Err(fault(
                        ErrorKind::ContractRuntimeViolation,
                        tid,
                        site,
                        format!("close({left}, {right}) in states {qe} and {qf}"),
                    ));
                }
                cfg.heap.remove(&e);
                cfg.heap.remove(&f);
            }
            CommandKind::Send { tag, endpoint, args } => {
                let e = cfg.get(tid, endpoint).unwrap_or(0);
                let values: Vec<i64> = args.iter().map(|a| self.eval_det(&cfg, tid, a)).collect();
                let peer = match cfg.heap.get_mut(&e) {
                    Some(Obj::Endpoint { peer, contract, dual, state, .. }) => {
                        let c = &self.contracts[&(contract.clone(), *dual)];
                        match c.successor(state, Direction::Send, tag) {
                            Ok(Some(q)) => *state = q.to_string(),
                            _ => {
                                return Err(fault(
                                    ErrorKind::ContractRuntimeViolation,
                                    tid,
                                    site,
                                    format!("send({tag}) not allowed in state {state} of {}{contract}", if *dual { "~" } else { "" }),
                                ))
                            }
                        }
                        *peer
                    }
                    _ => return Err(mem(format!("send on non-endpoint address {e}"))),
                };
                match cfg.heap.get_mut(&peer) {
                    Some(Obj::Endpoint { queue, .. }) => queue.push_back(Message { tag: tag.clone(), values }),
                    _ => return Err(mem(format!("send on {e} whose peer {peer} is gone"))),
                }
            }
            CommandKind::Receive { binders, tag, endpoint } => {
                let e = cfg.get(tid, endpoint).unwrap_or(0);
                match cfg.heap.get(&e) {
                    Some(Obj::Endpoint { queue, .. }) if queue.front().is_some_and(|m| &m.tag == tag) => {}
                    Some(Obj::Cell(_)) => return Err(mem(format!("receive on cell address {e}"))),
                    _ => return Ok(vec![]),
                }
                self.receive(&mut cfg, tid, e, tag, binders, site)?;
            }
            CommandKind::Switch { .. } | CommandKind::Seq(_) | CommandKind::Local { .. } => {
                unreachable!("handled elsewhere")
            }
            CommandKind::Par(branches) => {
                let scope = cfg.threads[&tid].frames.last().unwrap().scope.clone();
                cfg.threads.get_mut(&tid).unwrap().waiting = branches.len() as u32;
                for b in branches {
                    let child = cfg.fresh_tid();
                    let frame = Frame { scope: scope.clone(), conts: vec![Cont::Exec(Code(&b.body))], ret_to: None, owned: vec![] };
                    cfg.threads.insert(child, Thread { frames: vec![frame], parent: Some(tid), waiting: 0 });
                    cfg.settle(child);
                }
            }
            CommandKind::While { cond, body, .. } => {
                let done = iter.unwrap_or(0);
                let mut out = Vec::new();
                for holds in self.test(&cfg, tid, cond) {
                    let mut next = cfg.clone();
                    if holds {
                        if self.loop_bound.is_some_and(|b| done >= b) {
                            out.push((next, true));
                            continue;
                        }
                        next.push_cont(tid, Cont::Loop(code, done + 1));
                        next.push_cont(tid, Cont::Exec(Code(body)));
                    }
                    out.push((next, false));
                }
                return Ok(out);
            }
            CommandKind::If { cond, then_branch, else_branch } => {
                let mut out = Vec::new();
                for holds in self.test(&cfg, tid, cond) {
                    let mut next = cfg.clone();
                    next.push_cont(tid, Cont::Exec(Code(if holds { then_branch } else { else_branch })));
                    out.push((next, false));
                }
                return Ok(out);
            }
            CommandKind::Call { func, args, result } => {
                let vals: Vec<i64> = args.iter().map(|a| self.eval_det(&cfg, tid, a)).collect();
                let ret_to = result.as_ref().map(|r| cfg.slot(tid, r).expect("resolved variable"));
                let frame = cfg.call_frame(self.prog, func, vals, ret_to);
                cfg.threads.get_mut(&tid).unwrap().frames.push(frame);
            }
            CommandKind::Spawn { func, args } => {
                let vals: Vec<i64> = args.iter().map(|a| self.eval_det(&cfg, tid, a)).collect();
                let frame = cfg.call_frame(self.prog, func, vals, None);
                let child = cfg.fresh_tid();
                cfg.threads.insert(child, Thread { frames: vec![frame], parent: None, waiting: 0 });
                cfg.settle(child);
            }
            CommandKind::Return(e) => {
                let v = self.eval_det(&cfg, tid, e);
                if let Some(s) = cfg.threads[&tid].frames.last().unwrap().ret_to {
                    cfg.store.insert(s, v);
                }
            }
        }
        Ok(vec![(cfg, false)])
    }

    fn receive(&self, cfg: &mut Config<'p>, tid: Tid, e: i64, tag: &str, binders: &[String], site: Site) -> Result<(), Fault> {
        let Some(Obj::Endpoint { contract, dual, state, queue, .. }) = cfg.heap.get_mut(&e) else {
            unreachable!("checked by caller")
        };
        let c = &self.contracts[&(contract.clone(), *dual)];
        match c.successor(state, Direction::Recv, tag) {
            Ok(Some(q)) => *state = q.to_string(),
            _ => {
                return Err(fault(
                    ErrorKind::ContractRuntimeViolation,
                    tid,
                    site,
                    format!("receive({tag}) not allowed in state {state} of {}{contract}", if *dual { "~" } else { "" }),
                ))
            }
        }
        let msg = queue.pop_front().expect("head checked");
        for (b, v) in binders.iter().zip(msg.values) {
            cfg.set(tid, b, v);
        }
        Ok(())
    }

    fn test(&self, cfg: &Config<'p>, tid: Tid, cond: &Condition) -> Vec<bool> {
        match cond {
            Condition::Nondet => vec![true, false],
            Condition::Cmp(op, a, b) => {
                let (x, y) = (self.eval_det(cfg, tid, a), self.eval_det(cfg, tid, b));
                vec![match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }]
            }
        }
    }

    /// Every value an expression may take; `*` ranges over {0, 1}.
    fn eval_all(&self, cfg: &Config<'p>, tid: Tid, e: &Expr) -> Vec<i64> {
        match e {
            Expr::Nondet => vec![0, 1],
            Expr::Int(n) => vec![*n],
            Expr::Var(v) => vec![cfg.get(tid, v).unwrap_or(0)],
            Expr::Bin(op, a, b) => {
                let mut out = BTreeSet::new();
                for x in self.eval_all(cfg, tid, a) {
                    for y in self.eval_all(cfg, tid, b) {
                        out.insert(match op {
                            BinOp::Add => x.wrapping_add(y),
                            BinOp::Sub => x.wrapping_sub(y),
                            BinOp::Mul => x.wrapping_mul(y),
                        });
                    }
                }
                out.into_iter().collect()
            }
        }
    }

    /// Value of an expression in a position where `*` is not allowed to branch;
    /// it then defaults to 0.
    fn eval_det(&self, cfg: &Config<'p>, tid: Tid, e: &Expr) -> i64 {
        self.eval_all(cfg, tid, e)[0]
    }
}

fn fault(kind: ErrorKind, thread: Tid, site: Site, message: String) -> Fault {
    Fault { kind, thread, site: site.into(), message }
}

fn smallest_free(used: impl Iterator<Item = u32>) -> u32 {
    let mut n = 0;
    for u in used {
        if u != n {
            break;
        }
        n += 1;
    }
    n
}

fn expr_vars(e: &Expr) -> Vec<String> {
    match e {
        Expr::Var(v) => vec![v.clone()],
        Expr::Bin(_, a, b) => {
            let mut out = expr_vars(a);
            out.extend(expr_vars(b));
            out
        }
        Expr::Int(_) | Expr::Nondet => vec![],
    }
}

/// One-line rendering of the head of a command, as used in traces.
pub fn describe_command(c: &Command) -> String {
    let list = |es: &[Expr]| es.iter().map(render_expr).collect::<Vec<_>>().join(", ");
    let binders = |bs: &[String]| match bs.len() {
        0 => String::new(),
        1 => format!("{} = ", bs[0]),
        _ => format!("({}) = ", bs.join(", ")),
    };
    match &c.kind {
        CommandKind::Skip => "skip".into(),
        CommandKind::Assign { var, expr } => format!("{var} = {}", render_expr(expr)),
        CommandKind::New { var } => format!("{var} = new()"),
        CommandKind::Dispose { var } => format!("dispose({var})"),
        CommandKind::Read { var, ptr, field } => format!("{var} = {ptr}.{field}"),
        CommandKind::Write { ptr, field, expr } => format!("{ptr}.{field} = {}", render_expr(expr)),
        CommandKind::Open { left, right, contract } => format!("({left}, {right}) = open({contract})"),
        CommandKind::Close { left, right } => format!("close({left}, {right})"),
        CommandKind::Send { tag, endpoint, args } if args.is_empty() => format!("send({tag}, {endpoint})"),
        CommandKind::Send { tag, endpoint, args } => format!("send({tag}, {endpoint}, {})", list(args)),
        CommandKind::Receive { binders: bs, tag, endpoint } => format!("{}receive({tag}, {endpoint})", binders(bs)),
        CommandKind::Switch { .. } => "switch".into(),
        CommandKind::Seq(_) => "{ ... }".into(),
        CommandKind::Par(bs) => format!("parallel({})", bs.len()),
        CommandKind::While { cond, .. } => format!("while {}", render_condition(cond)),
        CommandKind::If { cond, .. } => format!("if {}", render_condition(cond)),
        CommandKind::Local { vars, .. } => format!("local {}", vars.join(", ")),
        CommandKind::Call { func, args, result } => {
            format!("{}{func}({})", result.as_ref().map(|r| format!("{r} = ")).unwrap_or_default(), list(args))
        }
        CommandKind::Spawn { func, args } => format!("spawn {func}({})", list(args)),
        CommandKind::Return(e) => format!("return {}", render_expr(e)),
    }
}

impl<'p> Config<'p> {
    /// Hash of the configuration with variable slots renamed in order of
    /// first appearance, so slot numbering does not distinguish states.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mut names: BTreeMap<Slot, u32> = BTreeMap::new();
        let mut canon = |s: Slot, h: &mut std::collections::hash_map::DefaultHasher| {
            let n = names.len() as u32;
            let id = *names.entry(s).or_insert(n);
            id.hash(h);
            self.store.get(&s).hash(h);
        };
        self.heap.hash(&mut h);
        for s in self.globals.values() {
            canon(*s, &mut h);
        }
        for (tid, t) in &self.threads {
            tid.hash(&mut h);
            t.parent.hash(&mut h);
            t.waiting.hash(&mut h);
            for f in &t.frames {
                for (name, s) in &f.scope {
                    name.hash(&mut h);
                    canon(*s, &mut h);
                }
                for c in &f.conts {
                    match c {
                        Cont::Exec(code) => (0u8, code).hash(&mut h),
                        Cont::Loop(code, n) => (1u8, code, n).hash(&mut h),
                        Cont::Unbind(name, old) => {
                            (2u8, name).hash(&mut h);
                            if let Some(s) = old {
                                canon(*s, &mut h);
                            }
                        }
                    }
                }
                if let Some(s) = f.ret_to {
                    canon(s, &mut h);
                }
                for s in &f.owned {
                    canon(*s, &mut h);
                }
            }
        }
        h.finish()
    }

    /// Slots and thread ids are recycled (smallest free first) so that
    /// interleavings reaching the same state produce equal configurations.
    fn alloc_slot(&mut self, v: i64) -> Slot {
        let s = smallest_free(self.store.keys().copied());
        self.store.insert(s, v);
        s
    }

    fn alloc(&mut self, obj: Obj) -> i64 {
        let a = self.next_addr;
        self.next_addr += 1;
        self.heap.insert(a, obj);
        a
    }

    fn fresh_tid(&self) -> Tid {
        smallest_free(self.threads.keys().copied())
    }

    fn call_frame(&mut self, prog: &'p ResolvedProgram, func: &str, args: Vec<i64>, ret_to: Option<Slot>) -> Frame<'p> {
        let f = prog.function(func).expect("resolved function");
        let mut scope = BTreeMap::new();
        let mut owned = Vec::new();
        for (p, v) in f.params.iter().zip(args) {
            let s = self.alloc_slot(v);
            scope.insert(p.clone(), s);
            owned.push(s);
        }
        for l in &prog.functions[func].locals {
            let s = self.alloc_slot(0);
            scope.insert(l.clone(), s);
            owned.push(s);
        }
        Frame { scope, conts: vec![Cont::Exec(Code(&f.body))], ret_to, owned }
    }

    fn slot(&self, tid: Tid, name: &str) -> Option<Slot> {
        let frame = self.threads.get(&tid)?.frames.last()?;
        frame.scope.get(name).or_else(|| self.globals.get(name)).copied()
    }

    fn get(&self, tid: Tid, name: &str) -> Option<i64> {
        self.slot(tid, name).and_then(|s| self.store.get(&s).copied())
    }

    fn set(&mut self, tid: Tid, name: &str, v: i64) {
        let s = self.slot(tid, name).expect("resolved variable");
        self.store.insert(s, v);
    }

    fn pop_cont(&mut self, tid: Tid) {
        self.threads.get_mut(&tid).unwrap().frames.last_mut().unwrap().conts.pop();
    }

    fn push_cont(&mut self, tid: Tid, c: Cont<'p>) {
        self.threads.get_mut(&tid).unwrap().frames.last_mut().unwrap().conts.push(c);
    }

    /// Performs bookkeeping until the thread's next continuation is a real
    /// command: unfolds sequences and `local`, pops finished frames, and
    /// retires the thread when it has nothing left.
    fn settle(&mut self, tid: Tid) {
        loop {
            let Some(t) = self.threads.get_mut(&tid) else { return };
            if t.waiting > 0 {
                return;
            }
            let Some(frame) = t.frames.last_mut() else {
                let parent = t.parent;
                self.threads.remove(&tid);
                if let Some(p) = parent {
                    if let Some(pt) = self.threads.get_mut(&p) {
                        pt.waiting -= 1;
                    }
                    self.settle(p);
                }
                return;
            };
            let Some(top) = frame.conts.pop() else {
                let done = t.frames.pop().unwrap();
                for s in done.owned {
                    self.store.remove(&s);
                }
                continue;
            };
            match top {
                Cont::Exec(Code(c)) => match &c.kind {
                    CommandKind::Seq(cmds) => {
                        frame.conts.extend(cmds.iter().rev().map(|c| Cont::Exec(Code(c))));
                    }
                    CommandKind::Local { vars, body } => {
                        for v in vars {
                            let slot = smallest_free(self.store.keys().copied());
                            self.store.insert(slot, 0);
                            let old = frame.scope.insert(v.clone(), slot);
                            frame.conts.push(Cont::Unbind(v.clone(), old));
                        }
                        frame.conts.push(Cont::Exec(Code(body)));
                    }
                    _ => {
                        frame.conts.push(Cont::Exec(Code(c)));
                        return;
                    }
                },
                Cont::Unbind(name, old) => {
                    let cur = match old {
                        Some(s) => frame.scope.insert(name, s),
                        None => frame.scope.remove(&name),
                    };
                    if let Some(s) = cur {
                        self.store.remove(&s);
                    }
                }
                loop_cont @ Cont::Loop(..) => {
                    frame.conts.push(loop_cont);
                    return;
                }
            }
        }
    }

}
