//! Abstract syntax of `.cmp` source files.
//!
//! Every node that can be the target of a diagnostic carries a [`Site`]. Sites
//! compare equal regardless of position, so two trees that differ only in
//! layout are structurally equal.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::BigRational;

/// Source position of a command or declaration.
///
/// `id` is a parse-order index, unique per command within one program; the
/// interpreter uses it as a stable handle into the command table.
#[derive(Debug, Clone, Copy, Default)]
pub struct Site {
    pub id: u32,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Site {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Site {}

impl Hash for Site {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub pragmas: Vec<Pragma>,
    pub globals: Vec<String>,
    pub contracts: Vec<ContractDecl>,
    pub messages: Vec<MessageDecl>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    /// Order in which top-level items appeared, so rendering preserves layout.
    pub order: Vec<ItemRef>,
}

impl SourceProgram {
    pub fn entry(&self) -> &str {
        "main"
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn message(&self, tag: &str) -> Option<&MessageDecl> {
        self.messages.iter().find(|m| m.tag == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemRef {
    Pragma(usize),
    Global(usize),
    Contract(usize),
    Message(usize),
    Predicate(usize),
    Function(usize),
}

/// `pragma <key> = <value>;`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pragma {
    pub key: String,
    pub value: String,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractDecl {
    pub name: String,
    pub initial: String,
    pub finals: Vec<String>,
    pub transitions: Vec<TransitionDecl>,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub from: String,
    pub send: bool,
    pub tag: String,
    pub to: String,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageDecl {
    pub tag: String,
    pub params: Vec<String>,
    pub footprint: Assertion,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub perm_params: Vec<String>,
    pub params: Vec<String>,
    pub body: Assertion,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Assertion,
    pub post: Assertion,
    pub body: Command,
    /// Set when the body contains a `return`.
    pub returns: bool,
    pub site: Site,
}

/// Permission annotation inside an assertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PermExpr {
    Lit(BigRational),
    /// A permission parameter of a predicate, divided by a positive integer.
    Param { name: String, divisor: u32 },
}

impl PermExpr {
    pub fn one() -> Self {
        PermExpr::Lit(BigRational::from_integer(1.into()))
    }
}

/// Terms as written in assertions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ATerm {
    Var(String),
    Int(i64),
    Wildcard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assertion {
    Emp,
    Star(Vec<Assertion>),
    Exists(Vec<String>, Box<Assertion>),
    Cell {
        addr: ATerm,
        perm: PermExpr,
        fields: [ATerm; 2],
    },
    Endpoint {
        addr: ATerm,
        perm: PermExpr,
        contract: String,
        dual: bool,
        state: String,
        peer: ATerm,
    },
    Pred {
        name: String,
        perms: Vec<PermExpr>,
        args: Vec<ATerm>,
    },
    Eq(ATerm, ATerm),
    Ne(ATerm, ATerm),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Int(i64),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// `*` as a right-hand side: an arbitrary integer.
    Nondet,
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Bin(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Expr::Int(_) | Expr::Nondet => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Nondet,
    Cmp(CmpOp, Expr, Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchCase {
    pub binders: Vec<String>,
    pub tag: String,
    pub endpoint: String,
    pub body: Command,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParBranch {
    pub pre: Assertion,
    pub body: Command,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommandKind {
    Skip,
    Assign { var: String, expr: Expr },
    New { var: String },
    Dispose { var: String },
    /// `var = ptr.field`
    Read { var: String, ptr: String, field: u8 },
    /// `ptr.field = expr`
    Write { ptr: String, field: u8, expr: Expr },
    Open { left: String, right: String, contract: String },
    Close { left: String, right: String },
    Send { tag: String, endpoint: String, args: Vec<Expr> },
    Receive { binders: Vec<String>, tag: String, endpoint: String },
    Switch { cases: Vec<SwitchCase> },
    Seq(Vec<Command>),
    Par(Vec<ParBranch>),
    While { cond: Condition, invariant: Assertion, body: Box<Command> },
    If { cond: Condition, then_branch: Box<Command>, else_branch: Box<Command> },
    Local { vars: Vec<String>, body: Box<Command> },
    Call { func: String, args: Vec<Expr>, result: Option<String> },
    Spawn { func: String, args: Vec<Expr> },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub kind: CommandKind,
    pub site: Site,
}

impl Command {
    pub fn new(kind: CommandKind, site: Site) -> Self {
        Command { kind, site }
    }

    /// Visits this command and every nested command, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Command)) {
        f(self);
        match &self.kind {
            CommandKind::Switch { cases } => cases.iter().for_each(|c| c.body.walk(f)),
            CommandKind::Seq(cmds) => cmds.iter().for_each(|c| c.walk(f)),
            CommandKind::Par(branches) => branches.iter().for_each(|b| b.body.walk(f)),
            CommandKind::While { body, .. } | CommandKind::Local { body, .. } => body.walk(f),
            CommandKind::If { then_branch, else_branch, .. } => {
                then_branch.walk(f);
                else_branch.walk(f);
            }
            _ => {}
        }
    }

    /// Variables this command (or anything nested in it) may assign, excluding
    /// variables declared `local` inside it.
    pub fn assigned_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_assigned(&mut Vec::new(), &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_assigned(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        fn push(v: &String, bound: &[String], out: &mut Vec<String>) {
            if !bound.contains(v) {
                out.push(v.clone());
            }
        }
        match &self.kind {
            CommandKind::Assign { var, .. }
            | CommandKind::New { var }
            | CommandKind::Read { var, .. } => push(var, bound, out),
            CommandKind::Open { left, right, .. } => {
                push(left, bound, out);
                push(right, bound, out);
            }
            CommandKind::Receive { binders, .. } => binders.iter().for_each(|b| push(b, bound, out)),
            CommandKind::Call { result: Some(r), .. } => push(r, bound, out),
            CommandKind::Switch { cases } => {
                for c in cases {
                    c.binders.iter().for_each(|b| push(b, bound, out));
                    c.body.collect_assigned(bound, out);
                }
            }
            CommandKind::Seq(cmds) => cmds.iter().for_each(|c| c.collect_assigned(bound, out)),
            CommandKind::Par(branches) => {
                branches.iter().for_each(|b| b.body.collect_assigned(bound, out))
            }
            CommandKind::While { body, .. } => body.collect_assigned(bound, out),
            CommandKind::If { then_branch, else_branch, .. } => {
                then_branch.collect_assigned(bound, out);
                else_branch.collect_assigned(bound, out);
            }
            CommandKind::Local { vars, body } => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_assigned(bound, out);
                bound.truncate(n);
            }
            _ => {}
        }
    }

    /// Variables read or written anywhere inside this command, excluding
    /// nested locals.
    pub fn mentioned_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_mentioned(&mut Vec::new(), &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_mentioned(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let mut names: Vec<String> = Vec::new();
        match &self.kind {
            CommandKind::Assign { var, expr } => {
                names.push(var.clone());
                expr.vars(&mut names);
            }
            CommandKind::New { var } | CommandKind::Dispose { var } => names.push(var.clone()),
            CommandKind::Read { var, ptr, .. } => names.extend([var.clone(), ptr.clone()]),
            CommandKind::Write { ptr, expr, .. } => {
                names.push(ptr.clone());
                expr.vars(&mut names);
            }
            CommandKind::Open { left, right, .. } | CommandKind::Close { left, right } => {
                names.extend([left.clone(), right.clone()])
            }
            CommandKind::Send { endpoint, args, .. } => {
                names.push(endpoint.clone());
                args.iter().for_each(|a| a.vars(&mut names));
            }
            CommandKind::Receive { binders, endpoint, .. } => {
                names.push(endpoint.clone());
                names.extend(binders.iter().cloned());
            }
            CommandKind::Call { args, result, .. } => {
                args.iter().for_each(|a| a.vars(&mut names));
                names.extend(result.iter().cloned());
            }
            CommandKind::Spawn { args, .. } => args.iter().for_each(|a| a.vars(&mut names)),
            CommandKind::Return(e) => e.vars(&mut names),
            CommandKind::While { cond, .. } | CommandKind::If { cond, .. } => {
                if let Condition::Cmp(_, a, b) = cond {
                    a.vars(&mut names);
                    b.vars(&mut names);
                }
            }
            _ => {}
        }
        out.extend(names.into_iter().filter(|n| !bound.contains(n)));
        match &self.kind {
            CommandKind::Switch { cases } => {
                for c in cases {
                    out.extend(
                        std::iter::once(&c.endpoint)
                            .chain(&c.binders)
                            .filter(|n| !bound.contains(n))
                            .cloned(),
                    );
                    c.body.collect_mentioned(bound, out);
                }
            }
            CommandKind::Seq(cmds) => cmds.iter().for_each(|c| c.collect_mentioned(bound, out)),
            CommandKind::Par(branches) => {
                branches.iter().for_each(|b| b.body.collect_mentioned(bound, out))
            }
            CommandKind::While { body, .. } => body.collect_mentioned(bound, out),
            CommandKind::If { then_branch, else_branch, .. } => {
                then_branch.collect_mentioned(bound, out);
                else_branch.collect_mentioned(bound, out);
            }
            CommandKind::Local { vars, body } => {
                let n = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_mentioned(bound, out);
                bound.truncate(n);
            }
            _ => {}
        }
    }

    pub fn contains_return(&self) -> bool {
        let mut found = false;
        self.walk(&mut |c| found |= matches!(c.kind, CommandKind::Return(_)));
        found
    }
}
