//! Concrete interpreter: a small-step machine over a real heap with FIFO
//! channel queues, a seeded random scheduler, and bounded-exhaustive
//! exploration of all interleavings.

mod machine;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lang::ResolvedProgram;
use crate::verifier::Location;
use machine::{Config, Machine, Move};

pub use machine::{describe_command, Message, Obj, Tid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ErrorKind {
    MemoryViolation,
    DataRace,
    OrphanMessageAtClose,
    UnspecifiedReception,
    ContractRuntimeViolation,
    CloseError,
}

/// A runtime error raised by one thread's next action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fault {
    pub kind: ErrorKind,
    pub thread: Tid,
    pub site: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome")]
pub enum Outcome {
    FinishedClean,
    FinishedLeak { addresses: Vec<i64> },
    Error(Fault),
    Deadlock { blocked: Vec<Tid> },
    /// A loop reached the unrolling bound, or a path reached the step bound.
    Truncated,
}

/// Outcomes up to their payload; the unit of the outcome sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OutcomeKind {
    FinishedClean,
    FinishedLeak,
    Deadlock,
    Truncated,
    MemoryViolation,
    DataRace,
    OrphanMessageAtClose,
    UnspecifiedReception,
    ContractRuntimeViolation,
    CloseError,
}

impl OutcomeKind {
    /// Outcomes a verified program may still exhibit.
    pub fn is_benign(self) -> bool {
        matches!(self, OutcomeKind::FinishedClean | OutcomeKind::Deadlock | OutcomeKind::Truncated)
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Outcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::FinishedClean => OutcomeKind::FinishedClean,
            Outcome::FinishedLeak { .. } => OutcomeKind::FinishedLeak,
            Outcome::Deadlock { .. } => OutcomeKind::Deadlock,
            Outcome::Truncated => OutcomeKind::Truncated,
            Outcome::Error(f) => match f.kind {
                ErrorKind::MemoryViolation => OutcomeKind::MemoryViolation,
                ErrorKind::DataRace => OutcomeKind::DataRace,
                ErrorKind::OrphanMessageAtClose => OutcomeKind::OrphanMessageAtClose,
                ErrorKind::UnspecifiedReception => OutcomeKind::UnspecifiedReception,
                ErrorKind::ContractRuntimeViolation => OutcomeKind::ContractRuntimeViolation,
                ErrorKind::CloseError => OutcomeKind::CloseError,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// Longest path (in steps) before it is cut off.
    pub max_steps: usize,
    /// Iterations after which a `while` is truncated; `None` for unbounded.
    pub loop_bound: Option<u32>,
    /// Distinct configurations `explore` may visit.
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_steps: 10_000, loop_bound: Some(2), max_states: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub trace: Vec<String>,
    /// Set when the step limit stopped the run before any outcome.
    pub step_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub outcome: Outcome,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExploreReport {
    pub outcomes: BTreeMap<OutcomeKind, Witness>,
    pub states: usize,
    /// False when the state budget ran out; the outcome set is then partial.
    pub complete: bool,
}

impl ExploreReport {
    pub fn kinds(&self) -> BTreeSet<OutcomeKind> {
        self.outcomes.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    pub passed: bool,
    pub violations: Vec<OutcomeKind>,
    pub exploration: ExploreReport,
}

/// What a configuration leads to: outcomes observed there, and the moves of
/// each enabled thread. Terminal configurations have no moves.
struct Analysis<'p> {
    outcomes: Vec<Outcome>,
    moves: Vec<(Tid, Vec<Move<'p>>)>,
}

fn analyze<'p>(m: &Machine<'p>, cfg: &Config<'p>) -> Analysis<'p> {
    if m.is_finished(cfg) {
        let outcome = if cfg.heap.is_empty() {
            Outcome::FinishedClean
        } else {
            Outcome::FinishedLeak { addresses: cfg.heap.keys().copied().collect() }
        };
        return Analysis { outcomes: vec![outcome], moves: vec![] };
    }
    let mut outcomes = Vec::new();
    let mut moves = Vec::new();
    let mut terminal = false;
    let mut blocked = Vec::new();
    let tids: Vec<Tid> = m.threads(cfg).collect();
    for &tid in &tids {
        let succ = m.successors(cfg, tid);
        for f in succ.faults {
            terminal |= f.kind != ErrorKind::UnspecifiedReception;
            outcomes.push(Outcome::Error(f));
        }
        if succ.moves.is_empty() {
            if !m.joining(cfg, tid) {
                blocked.push(tid);
            }
        } else {
            moves.push((tid, succ.moves));
        }
    }
    if let Some(race) = find_race(m, cfg, &moves) {
        terminal = true;
        outcomes.push(Outcome::Error(race));
    }
    if terminal {
        moves.clear();
    } else if moves.is_empty() {
        outcomes.push(Outcome::Deadlock { blocked });
    }
    Analysis { outcomes, moves }
}

/// Two enabled threads whose next actions touch a common location, at least
/// one of them writing.
fn find_race<'p>(m: &Machine<'p>, cfg: &Config<'p>, enabled: &[(Tid, Vec<Move<'p>>)]) -> Option<Fault> {
    let accesses: Vec<(Tid, Vec<_>)> = enabled.iter().map(|(t, _)| (*t, m.accesses(cfg, *t))).collect();
    for (i, (t1, a1)) in accesses.iter().enumerate() {
        for (t2, a2) in &accesses[i + 1..] {
            for (l1, w1) in a1 {
                if a2.iter().any(|(l2, w2)| l1 == l2 && (*w1 || *w2)) {
                    let site = m.site_of(cfg, *t1).expect("enabled thread");
                    return Some(Fault {
                        kind: ErrorKind::DataRace,
                        thread: *t1,
                        site,
                        message: format!("threads {t1} and {t2} access {} concurrently", m.describe_loc(*l1)),
                    });
                }
            }
        }
    }
    None
}

/// Executes `prog` under a scheduler that picks an enabled thread, then one
/// of its moves, uniformly from a generator seeded with `seed`.
pub fn run(prog: &ResolvedProgram, seed: u64, bounds: &Bounds) -> RunReport {
    let m = Machine::new(prog, bounds.loop_bound);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = m.initial();
    let mut trace = Vec::new();
    loop {
        let mut a = analyze(&m, &cfg);
        if let Some(outcome) = a.outcomes.drain(..).next() {
            return RunReport { outcome, trace, step_limit: false };
        }
        if trace.len() >= bounds.max_steps {
            return RunReport { outcome: Outcome::Truncated, trace, step_limit: true };
        }
        let t = rng.random_range(0..a.moves.len());
        let mut options = a.moves.swap_remove(t).1;
        let k = rng.random_range(0..options.len());
        let mv = options.swap_remove(k);
        trace.push(mv.label);
        if mv.truncated {
            return RunReport { outcome: Outcome::Truncated, trace, step_limit: false };
        }
        cfg = mv.config;
    }
}

fn fingerprint(cfg: &Config<'_>) -> u64 {
    cfg.fingerprint()
}

/// Depth-first enumeration of every interleaving and nondeterministic
/// choice, with one witness trace per outcome kind.
pub fn explore(prog: &ResolvedProgram, bounds: &Bounds) -> ExploreReport {
    let m = Machine::new(prog, bounds.loop_bound);
    let mut outcomes: BTreeMap<OutcomeKind, Witness> = BTreeMap::new();
    let mut record = |o: Outcome, trace: &[String]| {
        outcomes.entry(o.kind()).or_insert_with(|| Witness { outcome: o, trace: trace.to_vec() });
    };
    let mut visited = HashSet::new();
    let mut complete = true;
    let mut trace: Vec<String> = Vec::new();

    let init = m.initial();
    visited.insert(fingerprint(&init));
    let a = analyze(&m, &init);
    a.outcomes.into_iter().for_each(|o| record(o, &trace));
    let mut stack = vec![a.moves.into_iter().flat_map(|(_, v)| v).collect::<Vec<_>>().into_iter()];

    while let Some(top) = stack.last_mut() {
        let Some(mv) = top.next() else {
            stack.pop();
            trace.pop();
            continue;
        };
        trace.push(mv.label);
        if mv.truncated || trace.len() > bounds.max_steps {
            record(Outcome::Truncated, &trace);
            trace.pop();
            continue;
        }
        if !visited.insert(fingerprint(&mv.config)) {
            trace.pop();
            continue;
        }
        if visited.len() > bounds.max_states {
            complete = false;
            break;
        }
        let a = analyze(&m, &mv.config);
        a.outcomes.into_iter().for_each(|o| record(o, &trace));
        stack.push(a.moves.into_iter().flat_map(|(_, v)| v).collect::<Vec<_>>().into_iter());
    }
    ExploreReport { outcomes, states: visited.len(), complete }
}

/// Explores a (verified) program and reports any outcome outside
/// {FinishedClean, Deadlock, Truncated}.
pub fn check_soundness(prog: &ResolvedProgram, bounds: &Bounds) -> SoundnessReport {
    let exploration = explore(prog, bounds);
    let violations: Vec<OutcomeKind> = exploration.kinds().into_iter().filter(|k| !k.is_benign()).collect();
    SoundnessReport { passed: violations.is_empty(), violations, exploration }
}
