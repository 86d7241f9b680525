//! Pretty-printer producing source text that re-parses to an equal tree.

use std::fmt::Write;

use num_traits::One;

use super::ast::*;

pub fn render(prog: &SourceProgram) -> String {
    let mut out = String::new();
    let mut prev: Option<ItemRef> = None;
    for item in &prog.order {
        let same_kind = matches!(
            (prev, item),
            (Some(ItemRef::Global(_)), ItemRef::Global(_))
                | (Some(ItemRef::Pragma(_)), ItemRef::Pragma(_))
                | (Some(ItemRef::Message(_)), ItemRef::Message(_))
        );
        if prev.is_some() && !same_kind {
            out.push('\n');
        }
        match *item {
            ItemRef::Pragma(i) => {
                let p = &prog.pragmas[i];
                writeln!(out, "pragma {} = {};", p.key, p.value).unwrap();
            }
            ItemRef::Global(i) => writeln!(out, "global {};", prog.globals[i]).unwrap(),
            ItemRef::Contract(i) => render_contract(&mut out, &prog.contracts[i]),
            ItemRef::Message(i) => {
                let m = &prog.messages[i];
                out.push_str("message ");
                out.push_str(&m.tag);
                if !m.params.is_empty() {
                    write!(out, "({})", m.params.join(", ")).unwrap();
                }
                writeln!(out, " [{}];", assertion(&m.footprint)).unwrap();
            }
            ItemRef::Predicate(i) => {
                let p = &prog.predicates[i];
                out.push_str("predicate ");
                out.push_str(&p.name);
                if !p.perm_params.is_empty() {
                    write!(out, "<{}>", p.perm_params.join(", ")).unwrap();
                }
                writeln!(out, "({}) [{}];", p.params.join(", "), assertion(&p.body)).unwrap();
            }
            ItemRef::Function(i) => render_function(&mut out, &prog.functions[i]),
        }
        prev = Some(*item);
    }
    out
}

fn render_contract(out: &mut String, c: &ContractDecl) {
    writeln!(out, "contract {} {{", c.name).unwrap();
    writeln!(out, "    initial {};", c.initial).unwrap();
    writeln!(out, "    final {{{}}};", c.finals.join(", ")).unwrap();
    for t in &c.transitions {
        let d = if t.send { '!' } else { '?' };
        writeln!(out, "    {} -{}{}-> {};", t.from, d, t.tag, t.to).unwrap();
    }
    out.push_str("}\n");
}

fn render_function(out: &mut String, f: &FunctionDecl) {
    write!(out, "{}({}) [{}] ", f.name, f.params.join(", "), assertion(&f.pre)).unwrap();
    block(out, &f.body, 0);
    writeln!(out, " [{}]", assertion(&f.post)).unwrap();
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

/// Renders a `Seq` as a braced block; any other command is wrapped in braces.
fn block(out: &mut String, cmd: &Command, level: usize) {
    out.push_str("{\n");
    stmts(out, cmd, level + 1);
    indent(out, level);
    out.push('}');
}

fn stmts(out: &mut String, cmd: &Command, level: usize) {
    match &cmd.kind {
        CommandKind::Seq(cmds) => cmds.iter().for_each(|c| stmt(out, c, level)),
        _ => stmt(out, cmd, level),
    }
}

fn stmt(out: &mut String, cmd: &Command, level: usize) {
    indent(out, level);
    match &cmd.kind {
        CommandKind::Skip => out.push_str("skip;\n"),
        CommandKind::Assign { var, expr: e } => writeln!(out, "{var} = {};", expr(e)).unwrap(),
        CommandKind::New { var } => writeln!(out, "{var} = new();").unwrap(),
        CommandKind::Dispose { var } => writeln!(out, "dispose({var});").unwrap(),
        CommandKind::Read { var, ptr, field } => writeln!(out, "{var} = {ptr}.{field};").unwrap(),
        CommandKind::Write { ptr, field, expr: e } => {
            writeln!(out, "{ptr}.{field} = {};", expr(e)).unwrap()
        }
        CommandKind::Open { left, right, contract } => {
            writeln!(out, "({left}, {right}) = open({contract});").unwrap()
        }
        CommandKind::Close { left, right } => writeln!(out, "close({left}, {right});").unwrap(),
        CommandKind::Send { tag, endpoint, args } => {
            write!(out, "send({tag}, {endpoint}").unwrap();
            for a in args {
                write!(out, ", {}", expr(a)).unwrap();
            }
            out.push_str(");\n");
        }
        CommandKind::Receive { binders, tag, endpoint } => {
            writeln!(out, "{}receive({tag}, {endpoint});", binder_prefix(binders)).unwrap()
        }
        CommandKind::Switch { cases } => {
            out.push_str("switch {\n");
            for c in cases {
                indent(out, level + 1);
                writeln!(out, "case {}receive({}, {}):", binder_prefix(&c.binders), c.tag, c.endpoint)
                    .unwrap();
                stmts(out, &c.body, level + 2);
            }
            indent(out, level);
            out.push_str("}\n");
        }
        CommandKind::Seq(_) => {
            block(out, cmd, level);
            out.push('\n');
        }
        CommandKind::Par(branches) => {
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" || ");
                }
                write!(out, "[{}] ", assertion(&b.pre)).unwrap();
                block(out, &b.body, level);
            }
            out.push('\n');
        }
        CommandKind::While { cond, invariant, body } => {
            write!(out, "while ({}) [{}] ", condition(cond), assertion(invariant)).unwrap();
            block(out, body, level);
            out.push('\n');
        }
        CommandKind::If { cond, then_branch, else_branch } => {
            write!(out, "if ({}) ", condition(cond)).unwrap();
            block(out, then_branch, level);
            out.push_str(" else ");
            block(out, else_branch, level);
            out.push('\n');
        }
        CommandKind::Local { vars, body } => {
            writeln!(out, "local {};", vars.join(", ")).unwrap();
            stmts(out, body, level);
        }
        CommandKind::Call { func, args, result } => {
            if let Some(r) = result {
                write!(out, "{r} = ").unwrap();
            }
            writeln!(out, "{func}({});", args.iter().map(expr).collect::<Vec<_>>().join(", "))
                .unwrap();
        }
        CommandKind::Spawn { func, args } => writeln!(
            out,
            "spawn {func}({});",
            args.iter().map(expr).collect::<Vec<_>>().join(", ")
        )
        .unwrap(),
        CommandKind::Return(e) => writeln!(out, "return {};", expr(e)).unwrap(),
    }
}

fn binder_prefix(binders: &[String]) -> String {
    match binders {
        [] => String::new(),
        [b] => format!("{b} = "),
        bs => format!("({}) = ", bs.join(", ")),
    }
}

pub fn expr(e: &Expr) -> String {
    fn go(e: &Expr, prec: u8) -> String {
        match e {
            Expr::Var(v) => v.clone(),
            Expr::Int(n) => n.to_string(),
            Expr::Nondet => "*".into(),
            Expr::Bin(op, a, b) => {
                let (p, sym) = match op {
                    BinOp::Add => (1, "+"),
                    BinOp::Sub => (1, "-"),
                    BinOp::Mul => (2, "*"),
                };
                // left-associative: the right operand needs a strictly higher level
                let s = format!("{} {sym} {}", go(a, p), go(b, p + 1));
                if p < prec {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
    go(e, 0)
}

pub fn condition(c: &Condition) -> String {
    match c {
        Condition::Nondet => "*".into(),
        Condition::Cmp(op, a, b) => {
            let sym = match op {
                CmpOp::Eq => "==",
                CmpOp::Ne => "!=",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            format!("{} {sym} {}", expr(a), expr(b))
        }
    }
}

pub fn aterm(t: &ATerm) -> String {
    match t {
        ATerm::Var(v) => v.clone(),
        ATerm::Int(n) => n.to_string(),
        ATerm::Wildcard => "_".into(),
    }
}

pub fn perm(p: &PermExpr) -> String {
    match p {
        PermExpr::Lit(r) => r.to_string(),
        PermExpr::Param { name, divisor: 1 } => name.clone(),
        PermExpr::Param { name, divisor } => format!("{name}/{divisor}"),
    }
}

fn perm_suffix(p: &PermExpr) -> String {
    match p {
        PermExpr::Lit(r) if r.is_one() => String::new(),
        _ => format!("[{}]", perm(p)),
    }
}

pub fn assertion(a: &Assertion) -> String {
    match a {
        Assertion::Emp => "emp".into(),
        Assertion::Star(parts) => parts
            .iter()
            .map(|p| match p {
                Assertion::Star(_) | Assertion::Exists(..) => format!("({})", assertion(p)),
                _ => assertion(p),
            })
            .collect::<Vec<_>>()
            .join(" * "),
        Assertion::Exists(vars, body) => format!("exists {}. {}", vars.join(", "), assertion(body)),
        Assertion::Cell { addr, perm: p, fields } => format!(
            "{} |->{} ({}, {})",
            aterm(addr),
            perm_suffix(p),
            aterm(&fields[0]),
            aterm(&fields[1])
        ),
        Assertion::Endpoint { addr, perm: p, contract, dual, state, peer } => format!(
            "{} ~>{} ({}{}<{}>, {})",
            aterm(addr),
            perm_suffix(p),
            if *dual { "~" } else { "" },
            contract,
            state,
            aterm(peer)
        ),
        Assertion::Pred { name, perms, args } => {
            let mut s = name.clone();
            if !perms.is_empty() {
                s.push('<');
                s.push_str(&perms.iter().map(perm).collect::<Vec<_>>().join(", "));
                s.push('>');
            }
            s.push('(');
            s.push_str(&args.iter().map(aterm).collect::<Vec<_>>().join(", "));
            s.push(')');
            s
        }
        Assertion::Eq(a, b) => format!("{} == {}", aterm(a), aterm(b)),
        Assertion::Ne(a, b) => format!("{} != {}", aterm(a), aterm(b)),
    }
}
