//! Channel contracts: deterministic automata over `!m` / `?m` transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    Send,
    Recv,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Send => Direction::Recv,
            Direction::Recv => Direction::Send,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::Send => '!',
            Direction::Recv => '?',
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("contract `{contract}` is nondeterministic: state {state} has two {dir}{tag} transitions")]
    Nondeterministic { contract: String, state: String, dir: Direction, tag: String },
    #[error("contract `{contract}` has no state `{state}`")]
    UnknownState { contract: String, state: String },
}

/// A contract automaton. The transition relation is a map, so at most one
/// successor exists per `(state, direction, tag)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contract {
    pub name: String,
    pub states: BTreeSet<String>,
    pub init: String,
    pub finals: BTreeSet<String>,
    pub delta: BTreeMap<(String, Direction, String), String>,
}

impl Contract {
    /// Builds a contract; the state set is everything mentioned. Duplicate
    /// `(state, direction, tag)` keys are rejected even if they agree on the target.
    pub fn new<I>(name: &str, init: &str, finals: &[&str], transitions: I) -> Result<Self, ContractError>
    where
        I: IntoIterator<Item = (String, Direction, String, String)>,
    {
        let mut states: BTreeSet<String> = BTreeSet::new();
        states.insert(init.to_string());
        states.extend(finals.iter().map(|s| s.to_string()));
        let mut delta = BTreeMap::new();
        for (from, dir, tag, to) in transitions {
            states.insert(from.clone());
            states.insert(to.clone());
            let key = (from.clone(), dir, tag.clone());
            if delta.insert(key, to).is_some() {
                return Err(ContractError::Nondeterministic {
                    contract: name.to_string(),
                    state: from,
                    dir,
                    tag,
                });
            }
        }
        Ok(Contract {
            name: name.to_string(),
            states,
            init: init.to_string(),
            finals: finals.iter().map(|s| s.to_string()).collect(),
            delta,
        })
    }

    /// Swaps sends and receives. The name gains or loses a leading `~`.
    pub fn dual(&self) -> Contract {
        let name = match self.name.strip_prefix('~') {
            Some(base) => base.to_string(),
            None => format!("~{}", self.name),
        };
        Contract {
            name,
            states: self.states.clone(),
            init: self.init.clone(),
            finals: self.finals.clone(),
            delta: self
                .delta
                .iter()
                .map(|((q, d, m), to)| ((q.clone(), d.flip(), m.clone()), to.clone()))
                .collect(),
        }
    }

    fn check_state(&self, q: &str) -> Result<(), ContractError> {
        if self.states.contains(q) {
            Ok(())
        } else {
            Err(ContractError::UnknownState { contract: self.name.clone(), state: q.to_string() })
        }
    }

    pub fn successor(&self, q: &str, d: Direction, m: &str) -> Result<Option<&str>, ContractError> {
        self.check_state(q)?;
        Ok(self.delta.get(&(q.to_string(), d, m.to_string())).map(String::as_str))
    }

    /// Tags receivable at `q`.
    pub fn choices(&self, q: &str) -> Result<BTreeSet<String>, ContractError> {
        self.check_state(q)?;
        Ok(self.outgoing(q).filter(|(d, _, _)| *d == Direction::Recv).map(|(_, m, _)| m.to_string()).collect())
    }

    /// Outgoing transitions of `q` as `(direction, tag, target)`.
    pub fn outgoing<'a>(&'a self, q: &'a str) -> impl Iterator<Item = (Direction, &'a str, &'a str)> + 'a {
        self.delta
            .iter()
            .filter(move |((from, _, _), _)| from == q)
            .map(|((_, d, m), to)| (*d, m.as_str(), to.as_str()))
    }

    pub fn is_final(&self, q: &str) -> bool {
        self.finals.contains(q)
    }

    /// States having both a send and a receive outgoing transition.
    pub fn check_no_mixed_choice(&self) -> Vec<String> {
        self.states
            .iter()
            .filter(|q| {
                let dirs: BTreeSet<Direction> = self.outgoing(q).map(|(d, _, _)| d).collect();
                dirs.len() > 1
            })
            .cloned()
            .collect()
    }

    /// Final states lying on a cycle made only of sends or only of receives.
    pub fn check_cycle_condition(&self) -> Vec<String> {
        self.finals
            .iter()
            .filter(|q| [Direction::Send, Direction::Recv].iter().any(|&d| self.on_cycle(q, d)))
            .cloned()
            .collect()
    }

    /// Whether `q` reaches itself through at least one `d`-labelled edge and
    /// no other kind of edge.
    fn on_cycle(&self, q: &str, d: Direction) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> =
            self.outgoing(q).filter(|(e, _, _)| *e == d).map(|(_, _, t)| t).collect();
        while let Some(s) = stack.pop() {
            if s == q {
                return true;
            }
            if seen.insert(s) {
                stack.extend(self.outgoing(s).filter(|(e, _, _)| *e == d).map(|(_, _, t)| t));
            }
        }
        false
    }

    /// Whether state `q` has only send transitions (or none at all).
    pub fn is_sending_state(&self, q: &str) -> bool {
        self.outgoing(q).all(|(d, _, _)| d == Direction::Send)
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{ initial {};", self.name, self.init)?;
        let finals: Vec<&str> = self.finals.iter().map(String::as_str).collect();
        write!(f, " final {{{}}};", finals.join(", "))?;
        for ((q, d, m), to) in &self.delta {
            write!(f, " {q} -{d}{m}-> {to};")?;
        }
        write!(f, " }}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LintConfig {
    pub mixed_choice: Severity,
    pub cycle: Severity,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig { mixed_choice: Severity::Error, cycle: Severity::Error }
    }
}

impl LintConfig {
    pub fn strict() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    MixedChoice,
    CycleCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub check: Check,
    pub severity: Severity,
    pub state: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub contract: String,
    pub findings: Vec<Finding>,
}

impl LintReport {
    /// No error-severity findings.
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.severity == Severity::Warn)
    }
}

pub fn lint(c: &Contract, cfg: &LintConfig) -> LintReport {
    let mut findings = Vec::new();
    for q in c.check_no_mixed_choice() {
        findings.push(Finding {
            check: Check::MixedChoice,
            severity: cfg.mixed_choice,
            message: format!("state {q} has both send and receive transitions"),
            state: q,
        });
    }
    for q in c.check_cycle_condition() {
        findings.push(Finding {
            check: Check::CycleCondition,
            severity: cfg.cycle,
            message: format!("final state {q} lies on a one-directional cycle"),
            state: q,
        });
    }
    LintReport { contract: c.name.clone(), findings }
}

/// Enumerates every simple cycle of the transition graph as edge lists.
/// Exponential; intended as a test oracle on small automata.
pub fn simple_cycles(c: &Contract) -> Vec<Vec<(String, Direction, String, String)>> {
    let edges: Vec<(String, Direction, String, String)> = c
        .delta
        .iter()
        .map(|((q, d, m), to)| (q.clone(), *d, m.clone(), to.clone()))
        .collect();
    let states: Vec<&String> = c.states.iter().collect();
    let mut out = Vec::new();
    // Each cycle is reported once, rooted at its smallest state.
    for (ri, root) in states.iter().enumerate() {
        let mut path = Vec::new();
        let mut visited = vec![false; states.len()];
        visited[ri] = true;
        extend(root, root, ri, &states, &edges, &mut visited, &mut path, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    root: &str,
    at: &str,
    ri: usize,
    states: &[&String],
    edges: &[(String, Direction, String, String)],
    visited: &mut Vec<bool>,
    path: &mut Vec<(String, Direction, String, String)>,
    out: &mut Vec<Vec<(String, Direction, String, String)>>,
) {
    for e in edges.iter().filter(|e| e.0 == at) {
        if e.3 == root {
            path.push(e.clone());
            out.push(path.clone());
            path.pop();
            continue;
        }
        let Some(ti) = states.iter().position(|s| **s == e.3) else { continue };
        if ti < ri || visited[ti] {
            continue;
        }
        visited[ti] = true;
        path.push(e.clone());
        extend(root, &e.3, ri, states, edges, visited, path, out);
        path.pop();
        visited[ti] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(from: &str, d: Direction, m: &str, to: &str) -> (String, Direction, String, String) {
        (from.into(), d, m.into(), to.into())
    }

    fn c1() -> Contract {
        Contract::new("C1", "1", &["2"], [t("1", Direction::Send, "endpoint", "2")]).unwrap()
    }

    fn c2() -> Contract {
        Contract::new(
            "C2",
            "1",
            &["3"],
            [
                t("1", Direction::Send, "cell", "2"),
                t("1", Direction::Send, "nocell", "2"),
                t("2", Direction::Recv, "clos", "3"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn dual_swaps_directions() {
        let d = c1().dual();
        assert_eq!(d.successor("1", Direction::Recv, "endpoint").unwrap(), Some("2"));
        assert_eq!(d.name, "~C1");
        assert_eq!(d.dual(), c1());
        let d2 = c2().dual();
        assert_eq!(d2.successor("2", Direction::Send, "clos").unwrap(), Some("3"));
    }

    #[test]
    fn successor_and_choices() {
        assert_eq!(c1().successor("1", Direction::Send, "endpoint").unwrap(), Some("2"));
        assert_eq!(c1().successor("2", Direction::Send, "endpoint").unwrap(), None);
        assert!(c1().successor("9", Direction::Send, "endpoint").is_err());
        let want: BTreeSet<String> = ["cell".to_string(), "nocell".to_string()].into();
        assert_eq!(c2().dual().choices("1").unwrap(), want);
        assert!(c2().choices("1").unwrap().is_empty());
        assert_eq!(c2().choices("2").unwrap(), ["clos".to_string()].into());
    }

    #[test]
    fn nondeterminism_rejected_at_construction() {
        let err = Contract::new(
            "N",
            "q",
            &[],
            [t("q", Direction::Send, "m", "a"), t("q", Direction::Send, "m", "b")],
        );
        assert!(matches!(err, Err(ContractError::Nondeterministic { .. })));
    }

    #[test]
    fn mixed_and_cycle_checks() {
        assert!(c1().check_no_mixed_choice().is_empty());
        assert!(c2().check_cycle_condition().is_empty());
        let mixed = Contract::new(
            "M",
            "q",
            &[],
            [t("q", Direction::Send, "a", "r"), t("q", Direction::Recv, "b", "r")],
        )
        .unwrap();
        assert_eq!(mixed.check_no_mixed_choice(), vec!["q".to_string()]);
        let looping = Contract::new("L", "q", &["q"], [t("q", Direction::Send, "m", "q")]).unwrap();
        assert_eq!(looping.check_cycle_condition(), vec!["q".to_string()]);
        let seller = Contract::new(
            "SB",
            "1",
            &[],
            [t("1", Direction::Send, "pd", "2"), t("2", Direction::Recv, "offer", "1")],
        )
        .unwrap();
        assert!(seller.check_cycle_condition().is_empty());
        assert_eq!(simple_cycles(&seller).len(), 1);
    }

    #[test]
    fn lint_severity_is_configurable() {
        let mixed = Contract::new(
            "M",
            "q",
            &[],
            [t("q", Direction::Send, "a", "r"), t("q", Direction::Recv, "b", "r")],
        )
        .unwrap();
        assert!(!lint(&mixed, &LintConfig::default()).passed());
        let lax = LintConfig { mixed_choice: Severity::Warn, ..LintConfig::default() };
        let report = lint(&mixed, &lax);
        assert!(report.passed());
        assert_eq!(report.findings.len(), 1);
    }
}
