//! Recursive-descent parser for `.cmp` source text.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

pub fn parse(text: &str) -> PResult<SourceProgram> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, next_id: 0 };
    p.program()
}

/// Parses a standalone assertion, e.g. for tests and tooling.
pub fn parse_assertion(text: &str) -> PResult<Assertion> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, next_id: 0 };
    let a = p.assertion()?;
    p.expect(Tok::Eof)?;
    Ok(a)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn site(&mut self) -> Site {
        let (line, col) = self.here();
        let id = self.next_id;
        self.next_id += 1;
        Site { id, line, col }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let (line, col) = self.here();
        ParseError::Unexpected {
            line,
            col,
            expected: expected.to_string(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn ident_list(&mut self, close: Tok) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if self.eat(&close) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn state_id(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Int(n) => {
                self.bump();
                Ok(n.to_string())
            }
            _ => Err(self.unexpected("contract state")),
        }
    }

    fn duplicate(&self, site: Site, kind: &'static str, name: &str) -> ParseError {
        ParseError::Duplicate { line: site.line, col: site.col, kind, name: name.to_string() }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut prog = SourceProgram {
            pragmas: vec![],
            globals: vec![],
            contracts: vec![],
            messages: vec![],
            predicates: vec![],
            functions: vec![],
            order: vec![],
        };
        while self.peek() != &Tok::Eof {
            let site = self.site();
            if self.eat_kw("pragma") {
                let key = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.ident()?;
                self.expect(Tok::Semi)?;
                prog.order.push(ItemRef::Pragma(prog.pragmas.len()));
                prog.pragmas.push(Pragma { key, value, site });
            } else if self.eat_kw("global") {
                let names = self.ident_list(Tok::Semi)?;
                for name in names {
                    if prog.globals.contains(&name) {
                        return Err(self.duplicate(site, "global", &name));
                    }
                    prog.order.push(ItemRef::Global(prog.globals.len()));
                    prog.globals.push(name);
                }
            } else if self.eat_kw("contract") {
                let c = self.contract(site)?;
                if prog.contracts.iter().any(|d| d.name == c.name) {
                    return Err(self.duplicate(site, "contract", &c.name));
                }
                prog.order.push(ItemRef::Contract(prog.contracts.len()));
                prog.contracts.push(c);
            } else if self.eat_kw("message") {
                let tag = self.ident()?;
                let params =
                    if self.eat(&Tok::LParen) { self.ident_list(Tok::RParen)? } else { vec![] };
                let footprint = self.bracketed()?;
                self.expect(Tok::Semi)?;
                if prog.messages.iter().any(|m| m.tag == tag) {
                    return Err(self.duplicate(site, "message", &tag));
                }
                prog.order.push(ItemRef::Message(prog.messages.len()));
                prog.messages.push(MessageDecl { tag, params, footprint, site });
            } else if self.eat_kw("predicate") {
                let name = self.ident()?;
                let perm_params =
                    if self.eat(&Tok::Lt) { self.ident_list(Tok::Gt)? } else { vec![] };
                self.expect(Tok::LParen)?;
                let params = self.ident_list(Tok::RParen)?;
                let body = self.bracketed()?;
                self.expect(Tok::Semi)?;
                if prog.predicates.iter().any(|p| p.name == name) {
                    return Err(self.duplicate(site, "predicate", &name));
                }
                prog.order.push(ItemRef::Predicate(prog.predicates.len()));
                prog.predicates.push(PredicateDecl { name, perm_params, params, body, site });
            } else if matches!(self.peek(), Tok::Ident(_)) {
                let f = self.function(site)?;
                if prog.functions.iter().any(|g| g.name == f.name) {
                    return Err(self.duplicate(site, "function", &f.name));
                }
                prog.order.push(ItemRef::Function(prog.functions.len()));
                prog.functions.push(f);
            } else {
                return Err(self.unexpected("declaration"));
            }
        }
        Ok(prog)
    }

    fn contract(&mut self, site: Site) -> PResult<ContractDecl> {
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut initial = None;
        let mut finals = None;
        let mut transitions = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.eat_kw("initial") {
                initial = Some(self.state_id()?);
                self.expect(Tok::Semi)?;
            } else if self.eat_kw("final") {
                self.expect(Tok::LBrace)?;
                let mut fs = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        fs.push(self.state_id()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                self.expect(Tok::Semi)?;
                finals = Some(fs);
            } else {
                let tsite = self.site();
                let from = self.state_id()?;
                self.expect(Tok::Minus)?;
                let send = match self.bump() {
                    Tok::Bang => true,
                    Tok::Question => false,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("`!` or `?`"));
                    }
                };
                let tag = self.ident()?;
                self.expect(Tok::Arrow)?;
                let to = self.state_id()?;
                self.expect(Tok::Semi)?;
                transitions.push(TransitionDecl { from, send, tag, to, site: tsite });
            }
        }
        let initial = initial.ok_or_else(|| ParseError::Syntax {
            line: site.line,
            col: site.col,
            message: format!("contract `{name}` has no `initial` state"),
        })?;
        Ok(ContractDecl { name, initial, finals: finals.unwrap_or_default(), transitions, site })
    }

    fn function(&mut self, site: Site) -> PResult<FunctionDecl> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let params = self.ident_list(Tok::RParen)?;
        let pre = self.bracketed()?;
        let body = self.block()?;
        if self.peek() != &Tok::LBracket {
            return Err(self.unexpected("postcondition `[...]`"));
        }
        let post = self.bracketed()?;
        let returns = body.contains_return();
        Ok(FunctionDecl { name, params, pre, post, body, returns, site })
    }

    fn bracketed(&mut self) -> PResult<Assertion> {
        self.expect(Tok::LBracket)?;
        let a = self.assertion()?;
        self.expect(Tok::RBracket)?;
        Ok(a)
    }

    // ---- assertions ----

    fn assertion(&mut self) -> PResult<Assertion> {
        if self.eat_kw("exists") {
            let mut vars = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                vars.push(self.ident()?);
            }
            self.expect(Tok::Dot)?;
            let body = self.assertion()?;
            return Ok(Assertion::Exists(vars, Box::new(body)));
        }
        let mut parts = vec![self.spatial_atom()?];
        while self.eat(&Tok::Star) {
            if self.is_kw("exists") {
                parts.push(self.assertion()?);
                break;
            }
            parts.push(self.spatial_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Assertion::Star(parts) })
    }

    fn spatial_atom(&mut self) -> PResult<Assertion> {
        if self.eat_kw("emp") {
            return Ok(Assertion::Emp);
        }
        if self.eat(&Tok::LParen) {
            let a = self.assertion()?;
            self.expect(Tok::RParen)?;
            return Ok(a);
        }
        // predicate application: ident followed by `(` or `<`
        if let Tok::Ident(name) = self.peek().clone() {
            if !is_reserved(&name) && matches!(self.peek_at(1), Tok::LParen | Tok::Lt) {
                self.bump();
                let mut perms = Vec::new();
                if self.eat(&Tok::Lt) {
                    loop {
                        perms.push(self.perm_expr()?);
                        if self.eat(&Tok::Gt) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.aterm()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                return Ok(Assertion::Pred { name, perms, args });
            }
        }
        let lhs = self.aterm()?;
        match self.peek() {
            Tok::EqEq => {
                self.bump();
                Ok(Assertion::Eq(lhs, self.aterm()?))
            }
            Tok::Ne => {
                self.bump();
                Ok(Assertion::Ne(lhs, self.aterm()?))
            }
            Tok::PointsTo => {
                self.bump();
                let perm = self.opt_perm()?;
                self.expect(Tok::LParen)?;
                let f0 = self.aterm()?;
                self.expect(Tok::Comma)?;
                let f1 = self.aterm()?;
                self.expect(Tok::RParen)?;
                Ok(Assertion::Cell { addr: lhs, perm, fields: [f0, f1] })
            }
            Tok::EndpointArrow => {
                self.bump();
                let perm = self.opt_perm()?;
                self.expect(Tok::LParen)?;
                let dual = self.eat(&Tok::Tilde);
                let contract = self.ident()?;
                self.expect(Tok::Lt)?;
                let state = self.state_id()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::Comma)?;
                let peer = self.aterm()?;
                self.expect(Tok::RParen)?;
                Ok(Assertion::Endpoint { addr: lhs, perm, contract, dual, state, peer })
            }
            _ => {
                let (line, col) = self.here();
                Err(ParseError::MalformedAssertion {
                    line,
                    col,
                    message: format!("expected `|->`, `~>`, `==` or `!=`, found {}", self.peek()),
                })
            }
        }
    }

    fn aterm(&mut self) -> PResult<ATerm> {
        match self.peek().clone() {
            Tok::Wildcard => {
                self.bump();
                Ok(ATerm::Wildcard)
            }
            Tok::Int(n) => {
                self.bump();
                Ok(ATerm::Int(n))
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(ATerm::Var(s))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn opt_perm(&mut self) -> PResult<PermExpr> {
        if self.eat(&Tok::LBracket) {
            let p = self.perm_expr()?;
            self.expect(Tok::RBracket)?;
            Ok(p)
        } else {
            Ok(PermExpr::one())
        }
    }

    fn perm_expr(&mut self) -> PResult<PermExpr> {
        let (line, col) = self.here();
        let bad = |message: String| ParseError::MalformedAssertion { line, col, message };
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                let divisor = if self.eat(&Tok::Slash) {
                    match self.bump() {
                        Tok::Int(d) if d > 0 && d <= u32::MAX as i64 => d as u32,
                        _ => return Err(bad("permission divisor must be a positive integer".into())),
                    }
                } else {
                    1
                };
                Ok(PermExpr::Param { name, divisor })
            }
            Tok::Int(n) => {
                self.bump();
                let value = if self.eat(&Tok::Slash) {
                    match self.bump() {
                        Tok::Int(d) if d > 0 => BigRational::new(n.into(), d.into()),
                        _ => return Err(bad("bad permission denominator".into())),
                    }
                } else {
                    BigRational::from_integer(n.into())
                };
                check_unit(value).map_err(bad)
            }
            Tok::Decimal(text) => {
                self.bump();
                let (whole, frac) = text.split_once('.').unwrap();
                let scale = BigInt::from(10u32).pow(frac.len() as u32);
                let numer: BigInt = format!("{whole}{frac}").parse().unwrap();
                check_unit(BigRational::new(numer, scale)).map_err(bad)
            }
            _ => Err(self.unexpected("permission")),
        }
    }

    // ---- commands ----

    fn block(&mut self) -> PResult<Command> {
        let site = self.site();
        self.expect(Tok::LBrace)?;
        let cmds = self.stmts_until(&[Tok::RBrace])?;
        self.expect(Tok::RBrace)?;
        Ok(Command::new(CommandKind::Seq(cmds), site))
    }

    fn at_case_end(&self, stops: &[Tok]) -> bool {
        stops.contains(self.peek()) || (stops.is_empty() && self.is_kw("case"))
    }

    /// Statements up to (not including) one of `stops`; inside switch cases
    /// `stops` is empty and the keyword `case` or `}` ends the run.
    fn stmts_until(&mut self, stops: &[Tok]) -> PResult<Vec<Command>> {
        let mut cmds = Vec::new();
        loop {
            if self.at_case_end(stops) || self.peek() == &Tok::RBrace || self.peek() == &Tok::Eof
            {
                return Ok(cmds);
            }
            if self.is_kw("local") {
                let site = self.site();
                self.bump();
                let vars = self.ident_list(Tok::Semi)?;
                let body_site = self.site();
                let rest = self.stmts_until(stops)?;
                let body = Command::new(CommandKind::Seq(rest), body_site);
                cmds.push(Command::new(CommandKind::Local { vars, body: Box::new(body) }, site));
                return Ok(cmds);
            }
            cmds.push(self.stmt()?);
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn receive_tail(&mut self) -> PResult<(String, String)> {
        self.expect(Tok::LParen)?;
        let tag = self.ident()?;
        self.expect(Tok::Comma)?;
        let endpoint = self.ident()?;
        self.expect(Tok::RParen)?;
        Ok((tag, endpoint))
    }

    fn field_index(&mut self) -> PResult<u8> {
        match self.bump() {
            Tok::Int(0) => Ok(0),
            Tok::Int(1) => Ok(1),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("field index 0 or 1"))
            }
        }
    }

    fn stmt(&mut self) -> PResult<Command> {
        let site = self.site();
        let kind = match self.peek().clone() {
            Tok::LBrace => return self.block(),
            Tok::LBracket => return self.par(site),
            Tok::LParen => {
                self.bump();
                let vars = self.ident_list(Tok::RParen)?;
                self.expect(Tok::Assign)?;
                if self.eat_kw("open") {
                    self.expect(Tok::LParen)?;
                    let contract = self.ident()?;
                    self.expect(Tok::RParen)?;
                    if vars.len() != 2 {
                        return Err(ParseError::Syntax {
                            line: site.line,
                            col: site.col,
                            message: "`open` binds exactly two endpoints".into(),
                        });
                    }
                    let mut it = vars.into_iter();
                    CommandKind::Open {
                        left: it.next().unwrap(),
                        right: it.next().unwrap(),
                        contract,
                    }
                } else if self.eat_kw("receive") {
                    let (tag, endpoint) = self.receive_tail()?;
                    CommandKind::Receive { binders: vars, tag, endpoint }
                } else {
                    return Err(self.unexpected("`open` or `receive`"));
                }
            }
            Tok::Ident(kw) => match kw.as_str() {
                "skip" => {
                    self.bump();
                    CommandKind::Skip
                }
                "dispose" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let var = self.ident()?;
                    self.expect(Tok::RParen)?;
                    CommandKind::Dispose { var }
                }
                "close" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let left = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let right = self.ident()?;
                    self.expect(Tok::RParen)?;
                    CommandKind::Close { left, right }
                }
                "send" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let tag = self.ident()?;
                    self.expect(Tok::Comma)?;
                    let endpoint = self.ident()?;
                    let args = if self.eat(&Tok::Comma) {
                        self.args()?
                    } else {
                        self.expect(Tok::RParen)?;
                        vec![]
                    };
                    CommandKind::Send { tag, endpoint, args }
                }
                "receive" => {
                    self.bump();
                    let (tag, endpoint) = self.receive_tail()?;
                    CommandKind::Receive { binders: vec![], tag, endpoint }
                }
                "switch" => {
                    self.bump();
                    return self.switch(site);
                }
                "while" => {
                    self.bump();
                    let cond = self.condition()?;
                    let invariant = self.bracketed()?;
                    let body = self.block()?;
                    return Ok(Command::new(
                        CommandKind::While { cond, invariant, body: Box::new(body) },
                        site,
                    ));
                }
                "if" => {
                    self.bump();
                    let cond = self.condition()?;
                    let then_branch = self.block()?;
                    let else_branch = if self.eat_kw("else") {
                        self.block()?
                    } else {
                        let s = self.site();
                        Command::new(CommandKind::Seq(vec![]), s)
                    };
                    return Ok(Command::new(
                        CommandKind::If {
                            cond,
                            then_branch: Box::new(then_branch),
                            else_branch: Box::new(else_branch),
                        },
                        site,
                    ));
                }
                "spawn" => {
                    self.bump();
                    let func = self.ident()?;
                    self.expect(Tok::LParen)?;
                    let args = self.args()?;
                    CommandKind::Spawn { func, args }
                }
                "return" => {
                    self.bump();
                    CommandKind::Return(self.expr()?)
                }
                _ if is_reserved(&kw) => return Err(self.unexpected("statement")),
                _ => {
                    let name = self.ident()?;
                    match self.peek() {
                        Tok::LParen => {
                            self.bump();
                            let args = self.args()?;
                            CommandKind::Call { func: name, args, result: None }
                        }
                        Tok::Dot => {
                            self.bump();
                            let field = self.field_index()?;
                            self.expect(Tok::Assign)?;
                            let expr = self.expr()?;
                            CommandKind::Write { ptr: name, field, expr }
                        }
                        Tok::Assign => {
                            self.bump();
                            self.assignment_rhs(name)?
                        }
                        _ => return Err(self.unexpected("`=`, `.` or `(`")),
                    }
                }
            },
            _ => return Err(self.unexpected("statement")),
        };
        self.expect(Tok::Semi)?;
        Ok(Command::new(kind, site))
    }

    fn assignment_rhs(&mut self, var: String) -> PResult<CommandKind> {
        if self.is_kw("new") && self.peek_at(1) == &Tok::LParen {
            self.bump();
            self.expect(Tok::LParen)?;
            self.expect(Tok::RParen)?;
            return Ok(CommandKind::New { var });
        }
        if self.is_kw("receive") {
            self.bump();
            let (tag, endpoint) = self.receive_tail()?;
            return Ok(CommandKind::Receive { binders: vec![var], tag, endpoint });
        }
        if self.peek() == &Tok::Star && self.peek_at(1) == &Tok::Semi {
            self.bump();
            return Ok(CommandKind::Assign { var, expr: Expr::Nondet });
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if !is_reserved(&name) {
                match self.peek_at(1) {
                    Tok::LParen => {
                        self.bump();
                        self.bump();
                        let args = self.args()?;
                        return Ok(CommandKind::Call { func: name, args, result: Some(var) });
                    }
                    Tok::Dot => {
                        self.bump();
                        self.bump();
                        let field = self.field_index()?;
                        return Ok(CommandKind::Read { var, ptr: name, field });
                    }
                    _ => {}
                }
            }
        }
        Ok(CommandKind::Assign { var, expr: self.expr()? })
    }

    fn switch(&mut self, site: Site) -> PResult<Command> {
        self.expect(Tok::LBrace)?;
        let mut cases = Vec::new();
        while self.is_kw("case") {
            let csite = self.site();
            self.bump();
            let binders = if self.eat(&Tok::LParen) {
                let b = self.ident_list(Tok::RParen)?;
                self.expect(Tok::Assign)?;
                b
            } else if matches!(self.peek(), Tok::Ident(s) if s != "receive")
                && self.peek_at(1) == &Tok::Assign
            {
                let b = self.ident()?;
                self.expect(Tok::Assign)?;
                vec![b]
            } else {
                vec![]
            };
            self.expect_kw("receive")?;
            let (tag, endpoint) = self.receive_tail()?;
            self.expect(Tok::Colon)?;
            let bsite = self.site();
            let stmts = self.stmts_until(&[])?;
            let body = Command::new(CommandKind::Seq(stmts), bsite);
            cases.push(SwitchCase { binders, tag, endpoint, body, site: csite });
        }
        if cases.is_empty() {
            return Err(self.unexpected("`case`"));
        }
        self.expect(Tok::RBrace)?;
        Ok(Command::new(CommandKind::Switch { cases }, site))
    }

    fn par(&mut self, site: Site) -> PResult<Command> {
        let mut branches = Vec::new();
        loop {
            let pre = self.bracketed()?;
            let body = self.block()?;
            branches.push(ParBranch { pre, body });
            if !self.eat(&Tok::ParBar) {
                break;
            }
        }
        if branches.len() < 2 {
            return Err(self.unexpected("`||`"));
        }
        Ok(Command::new(CommandKind::Par(branches), site))
    }

    fn condition(&mut self) -> PResult<Condition> {
        self.expect(Tok::LParen)?;
        if self.peek() == &Tok::Star && self.peek_at(1) == &Tok::RParen {
            self.bump();
            self.bump();
            return Ok(Condition::Nondet);
        }
        let lhs = self.expr()?;
        let op = match self.bump() {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("comparison operator"));
            }
        };
        let rhs = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(Condition::Cmp(op, lhs, rhs))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term_expr()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.primary()?;
        while self.peek() == &Tok::Star {
            self.bump();
            let rhs = self.primary()?;
            lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn check_unit(value: BigRational) -> Result<PermExpr, String> {
    if value <= BigRational::zero() || value > BigRational::one() {
        return Err(format!("permission {value} outside (0, 1]"));
    }
    Ok(PermExpr::Lit(value))
}

pub(crate) fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "skip"
            | "local"
            | "new"
            | "dispose"
            | "open"
            | "close"
            | "send"
            | "receive"
            | "switch"
            | "case"
            | "while"
            | "if"
            | "else"
            | "spawn"
            | "return"
            | "emp"
            | "exists"
            | "global"
            | "contract"
            | "message"
            | "predicate"
            | "pragma"
            | "initial"
            | "final"
    )
}
