//! Source language: lexing, parsing, name resolution and rendering.

pub mod ast;
mod lexer;
mod parser;
mod render;
mod resolve;

use thiserror::Error;

pub use ast::*;
pub use parser::{parse, parse_assertion};
pub use render::{assertion as render_assertion, condition as render_condition, expr as render_expr, render};
pub use resolve::{resolve, FunctionInfo, ResolvedProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Unexpected { line: u32, col: u32, expected: String, found: String },
    #[error("{line}:{col}: duplicate {kind} `{name}`")]
    Duplicate { line: u32, col: u32, kind: &'static str, name: String },
    #[error("{line}:{col}: malformed assertion: {message}")]
    MalformedAssertion { line: u32, col: u32, message: String },
}

impl ParseError {
    pub fn location(&self) -> (u32, u32) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Unexpected { line, col, .. }
            | ParseError::Duplicate { line, col, .. }
            | ParseError::MalformedAssertion { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("{site}: unknown message tag `{tag}`")]
    UnknownTag { site: Site, tag: String },
    #[error("{site}: `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch { site: Site, name: String, expected: usize, found: usize },
    #[error("{site}: unknown contract `{name}`")]
    UnknownContract { site: Site, name: String },
    #[error("{site}: contract `{contract}` has no state `{state}`")]
    UnknownState { site: Site, contract: String, state: String },
    #[error("{site}: {source}")]
    BadContract { site: Site, source: crate::contracts::ContractError },
    #[error("{site}: unknown predicate `{name}`")]
    UnknownPredicate { site: Site, name: String },
    #[error("{site}: predicate `{name}` is recursive")]
    RecursivePredicate { site: Site, name: String },
    #[error("{site}: unknown function `{name}`")]
    UnknownFunction { site: Site, name: String },
    #[error("{site}: unbound variable `{name}`")]
    UnboundVariable { site: Site, name: String },
    #[error("{site}: `{name}` is reserved here")]
    ReservedName { site: Site, name: String },
    #[error("{site}: function `{name}` does not return a value")]
    NoReturnValue { site: Site, name: String },
    #[error("{site}: `return` must be the last statement of a function body")]
    MisplacedReturn { site: Site },
    #[error("{site}: permission parameter `{name}` not in scope")]
    UnboundPermission { site: Site, name: String },
    #[error("{site}: unknown pragma `{key} = {value}`")]
    BadPragma { site: Site, key: String, value: String },
    #[error("no function named `main`")]
    MissingMain,
}

impl ResolveError {
    pub fn site(&self) -> Option<Site> {
        use ResolveError::*;
        match self {
            UnknownTag { site, .. }
            | ArityMismatch { site, .. }
            | UnknownContract { site, .. }
            | UnknownState { site, .. }
            | BadContract { site, .. }
            | UnknownPredicate { site, .. }
            | RecursivePredicate { site, .. }
            | UnknownFunction { site, .. }
            | UnboundVariable { site, .. }
            | ReservedName { site, .. }
            | NoReturnValue { site, .. }
            | MisplacedReturn { site }
            | UnboundPermission { site, .. }
            | BadPragma { site, .. } => Some(*site),
            MissingMain => None,
        }
    }
}

/// Either stage of turning source text into a resolved program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("resolve error: {0}")]
    Resolve(#[from] ResolveError),
}

impl LoadError {
    /// Line and column of the offending token, when there is one.
    pub fn location(&self) -> Option<(u32, u32)> {
        match self {
            LoadError::Parse(e) => Some(e.location()),
            LoadError::Resolve(e) => e.site().map(|s| (s.line, s.col)),
        }
    }
}

/// Parses and resolves a whole program.
pub fn load(text: &str) -> Result<ResolvedProgram, LoadError> {
    Ok(resolve(&parse(text)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> LoadError {
        load(text).expect_err("should not load")
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = err("main() [emp] {\n  x = ;\n} [emp]");
        assert!(matches!(e, LoadError::Parse(_)));
        assert_eq!(e.location(), Some((2, 7)));
        assert!(matches!(err("main() [emp] { skip; }"), LoadError::Parse(_)), "missing postcondition");
    }

    #[test]
    fn duplicates_are_rejected_while_parsing() {
        let e = err("message m [emp];\nmessage m [emp];\nmain() [emp] { skip; } [emp]");
        assert!(matches!(e, LoadError::Parse(ParseError::Duplicate { line: 2, .. })), "{e}");
    }

    #[test]
    fn resolution_errors() {
        assert!(matches!(err("f() [emp] { skip; } [emp]"), LoadError::Resolve(ResolveError::MissingMain)));
        let unknown = err("main() [emp] { (e, f) = open(C); send(m, e); } [emp]");
        assert!(matches!(unknown, LoadError::Resolve(ResolveError::UnknownContract { .. })), "{unknown}");
        let early = err("f() [emp] { return 1; skip; } [emp]\nmain() [emp] { skip; } [emp]");
        assert!(matches!(early, LoadError::Resolve(ResolveError::MisplacedReturn { .. })), "{early}");
        let pragma = err("pragma mixed_choice = maybe;\nmain() [emp] { skip; } [emp]");
        assert!(matches!(pragma, LoadError::Resolve(ResolveError::BadPragma { .. })), "{pragma}");
    }

    #[test]
    fn assertions_parse_fractions_and_duals() {
        let a = parse_assertion("exists g. e ~>[0.25] (~C<1>, g) * x |->[1/2] (_, 3)").unwrap();
        let text = render_assertion(&a);
        assert_eq!(parse_assertion(&text).unwrap(), a, "{text}");
        assert!(parse_assertion("x |->[3/2] (1, 2)").is_err());
        assert!(parse_assertion("x |->[0] (1, 2)").is_err());
    }

    #[test]
    fn local_scopes_the_rest_of_the_block() {
        let p = parse("main() [emp] { skip; local y; y = 1; dispose(y); } [emp]").unwrap();
        let CommandKind::Seq(cmds) = &p.functions[0].body.kind else { panic!() };
        assert_eq!(cmds.len(), 2);
        let CommandKind::Local { vars, body } = &cmds[1].kind else { panic!("{:?}", cmds[1]) };
        assert_eq!(vars, &["y".to_string()]);
        assert!(matches!(&body.kind, CommandKind::Seq(rest) if rest.len() == 2));
    }
}
