#![allow(dead_code)]

use std::path::PathBuf;

use copyless_core::contracts::{Contract, Direction};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"))
}

pub fn corpus_file(name: &str) -> String {
    let path = corpus_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cmp"))
        .collect();
    files.sort();
    files
}

const PERMS: [&str; 4] = ["1/4", "1/2", "3/4", "1"];
const FIELD: [&str; 6] = ["x", "y", "_", "0", "1", "2"];
const PEER: [&str; 4] = ["x", "y", "_", "1"];

#[derive(Debug, Clone)]
pub struct GenAtom {
    pub cell: bool,
    pub addr: String,
    pub perm: &'static str,
    pub a: String,
    pub b: String,
    pub dual: bool,
    pub state: u8,
}

impl GenAtom {
    fn render(&self) -> String {
        let p = if self.perm == "1" { String::new() } else { format!("[{}]", self.perm) };
        if self.cell {
            format!("{} |->{p} ({}, {})", self.addr, self.a, self.b)
        } else {
            let d = if self.dual { "~" } else { "" };
            format!("{} ~>{p} ({d}C<{}>, {})", self.addr, self.state, self.a)
        }
    }

    fn wildcards(&self) -> usize {
        let mut n = (self.a == "_") as usize;
        if self.cell {
            n += (self.b == "_") as usize;
        }
        n
    }
}

fn gen_atom(rng: &mut impl Rng) -> GenAtom {
    let cell = rng.random_bool(0.5);
    GenAtom {
        cell,
        addr: ["x", "y"].choose(rng).unwrap().to_string(),
        perm: PERMS.choose(rng).unwrap(),
        a: if cell { FIELD.choose(rng) } else { PEER.choose(rng) }.unwrap().to_string(),
        b: FIELD.choose(rng).unwrap().to_string(),
        dual: rng.random_bool(0.5),
        state: rng.random_range(1..=2),
    }
}

fn gen_pure(rng: &mut impl Rng) -> Option<&'static str> {
    match rng.random_range(0..6) {
        0 => Some("x == y"),
        1 => Some("x != y"),
        _ => None,
    }
}

fn render(atoms: &[GenAtom], pure: Option<&str>, exists: &[&str]) -> String {
    let mut parts: Vec<String> = pure.into_iter().map(String::from).collect();
    parts.extend(atoms.iter().map(GenAtom::render));
    let body = if parts.is_empty() { "emp".to_string() } else { parts.join(" * ") };
    if exists.is_empty() {
        body
    } else {
        format!("exists {}. {body}", exists.join(", "))
    }
}

/// A random pair of assertion texts `(H1, H2)` over variables `x`, `y`.
/// About half the time `H2` is a weakening-style mutation of `H1`, so that
/// both verdicts occur often.
pub fn gen_pair(rng: &mut impl Rng) -> (String, String) {
    let n = rng.random_range(0..=3);
    let mut h1: Vec<GenAtom> = (0..n).map(|_| gen_atom(rng)).collect();
    // Keep the existential count small enough for the brute-force oracle.
    let mut budget = 3usize;
    for a in &mut h1 {
        if a.wildcards() > budget {
            a.a = "0".into();
            a.b = "1".into();
        }
        budget = budget.saturating_sub(a.wildcards());
    }
    let p1 = gen_pure(rng);
    let s1 = render(&h1, p1, &[]);

    if rng.random_bool(0.4) {
        let m = rng.random_range(0..=3);
        let h2: Vec<GenAtom> = (0..m).map(|_| gen_atom(rng)).collect();
        let wild: usize = h2.iter().map(GenAtom::wildcards).sum();
        let h2 = if wild > 3 { vec![] } else { h2 };
        return (s1, render(&h2, gen_pure(rng), &[]));
    }

    let mut h2 = h1.clone();
    let mut exists: Vec<&str> = vec![];
    for a in &mut h2 {
        match rng.random_range(0..8) {
            0 => a.a = "_".into(),
            1 if a.cell => a.b = "_".into(),
            2 => a.perm = PERMS.choose(rng).unwrap(),
            3 if exists.is_empty() => {
                a.addr = "Z".into();
                exists.push("Z");
            }
            4 => a.state = 3 - a.state,
            _ => {}
        }
    }
    if !h2.is_empty() && rng.random_bool(0.2) {
        let i = rng.random_range(0..h2.len());
        h2.remove(i);
        if !h2.iter().any(|a| a.addr == "Z") {
            exists.clear();
        }
    }
    if h2.len() < 3 && rng.random_bool(0.2) {
        // Split a full atom into two halves.
        if let Some(i) = h2.iter().position(|a| a.perm == "1" && a.a != "_" && a.b != "_") {
            h2[i].perm = "1/2";
            let copy = h2[i].clone();
            h2.push(copy);
        }
    }
    let wild: usize = h2.iter().map(GenAtom::wildcards).sum::<usize>() + exists.len();
    if wild > 4 {
        return (s1.clone(), s1);
    }
    let p2 = if rng.random_bool(0.7) { p1 } else { gen_pure(rng) };
    (s1, render(&h2, p2, &exists))
}

/// A random contract over at most `max_states` states with tags `a`, `b`, `c`.
pub fn gen_contract(rng: &mut impl Rng, max_states: usize) -> Contract {
    let n = rng.random_range(1..=max_states);
    let states: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut transitions = Vec::new();
    let mut keys = std::collections::BTreeSet::new();
    for _ in 0..rng.random_range(0..=2 * n) {
        let from = states.choose(rng).unwrap().clone();
        let to = states.choose(rng).unwrap().clone();
        let d = if rng.random_bool(0.5) { Direction::Send } else { Direction::Recv };
        let tag = ["a", "b", "c"].choose(rng).unwrap().to_string();
        if keys.insert((from.clone(), d, tag.clone())) {
            transitions.push((from, d, tag, to));
        }
    }
    let finals: Vec<&str> =
        states.iter().filter(|_| rng.random_bool(0.4)).map(String::as_str).collect();
    Contract::new("R", "0", &finals, transitions).unwrap()
}

/// The programs the verifier must accept.
pub const POSITIVE: [&str; 8] = [
    "example_2_2.cmp",
    "cell_or_nocell.cmp",
    "multi_readers.cmp",
    "two_producers.cmp",
    "internal_choice.cmp",
    "client_server.cmp",
    "lock.cmp",
    "seller_buyers.cmp",
];
