// SPDX-License-Identifier: Apache-2.0
//! Space-bounded alternating Turing machines as query answering instances.
//!
//! The TBox generates a tree over-approximating all computations: an edge
//! `r_{p,t,i}` records that transition `t = δ_p(s, σ)` fired and left the
//! head at cell `i`. The query walks a finite accepting subtree (choosing
//! one child at existential nodes, both at universal ones) and, at every
//! leaf, launches one test per tape cell that climbs back to the root and
//! checks the symbols read along the way against the input word.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::kb::{AboxAssertion, Concept, KnowledgeBase, RoleExpr, TBoxAxiom};
use crate::query::{reduce_nnfa, Atom, Cn2rpq, Label, NnfaBuilder, NnfaPart, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Zero,
    One,
    Blank,
}

impl Sym {
    pub const ALL: [Sym; 3] = [Sym::Zero, Sym::One, Sym::Blank];

    fn parse(s: &str) -> Option<Sym> {
        match s {
            "0" => Some(Sym::Zero),
            "1" => Some(Sym::One),
            "b" | "_" => Some(Sym::Blank),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sym::Zero => "0",
            Sym::One => "1",
            Sym::Blank => "b",
        })
    }
}

/// `(s, σ, s', σ', d)`: in state `s` reading `σ`, write `σ'`, move by `d`
/// and enter `s'`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: String,
    pub read: Sym,
    pub to: String,
    pub write: Sym,
    pub step: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtmSpec {
    pub states: Vec<String>,
    pub universal: BTreeSet<String>,
    /// `δ_1` and `δ_2`, keyed by `(state, symbol)`.
    pub delta: [BTreeMap<(String, Sym), (String, Sym, i8)>; 2],
    pub init: String,
    pub accept: String,
    pub reject: String,
    pub word: Vec<Sym>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AtmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("the initial state `{0}` must not be final")]
    InitialIsFinal(String),
    #[error("delta{p} must be total: undefined on ({state}, {sym})")]
    NotTotal { p: usize, state: String, sym: Sym },
    #[error("the initial state `{0}` must be existential")]
    InitialUniversal(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("the input word must be a non-empty string over 0 and 1")]
    BadWord,
    #[error("tape bound violated: head leaves cells 1..{m} in state `{state}`")]
    TapeBound { m: usize, state: String },
}

impl AtmSpec {
    pub fn m(&self) -> usize {
        self.word.len()
    }

    fn is_final(&self, s: &str) -> bool {
        s == self.accept || s == self.reject
    }

    pub fn is_universal(&self, s: &str) -> bool {
        self.universal.contains(s)
    }

    pub fn validate(&self) -> Result<(), AtmError> {
        let known: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        let named = [&self.init, &self.accept, &self.reject].into_iter().chain(&self.universal);
        let in_delta = self.delta.iter().flat_map(|d| d.iter().flat_map(|((s, _), (t, ..))| [s, t]));
        if let Some(bad) = named.chain(in_delta).find(|s| !known.contains(s.as_str())) {
            return Err(AtmError::UnknownState(bad.clone()));
        }
        if self.word.is_empty() || self.word.contains(&Sym::Blank) {
            return Err(AtmError::BadWord);
        }
        if self.is_final(&self.init) {
            return Err(AtmError::InitialIsFinal(self.init.clone()));
        }
        if self.is_universal(&self.init) {
            return Err(AtmError::InitialUniversal(self.init.clone()));
        }
        for s in self.states.iter().filter(|s| !self.is_final(s)) {
            for sym in Sym::ALL {
                for p in 0..2 {
                    if !self.delta[p].contains_key(&(s.clone(), sym)) {
                        return Err(AtmError::NotTotal { p: p + 1, state: s.clone(), sym });
                    }
                }
            }
        }
        Ok(())
    }

    /// `δ_p(s, σ)` as a transition, for `p` in `{1, 2}`.
    pub fn apply(&self, p: usize, s: &str, sym: Sym) -> Option<Transition> {
        self.delta[p - 1].get(&(s.to_owned(), sym)).map(|(to, write, step)| Transition {
            from: s.to_owned(),
            read: sym,
            to: to.clone(),
            write: *write,
            step: *step,
        })
    }

    /// Every transition some `δ_p` yields on a non-final state, sorted.
    pub fn transitions(&self) -> Vec<Transition> {
        let mut out: BTreeSet<Transition> = BTreeSet::new();
        for s in self.states.iter().filter(|s| !self.is_final(s)) {
            for sym in Sym::ALL {
                for p in 1..=2 {
                    out.extend(self.apply(p, s, sym));
                }
            }
        }
        out.into_iter().collect()
    }

    /// Reads the sectioned format:
    ///
    /// ```text
    /// states: q0 u acc rej
    /// universal: u
    /// init: q0
    /// accept: acc
    /// reject: rej
    /// word: 11
    /// delta1:
    /// q0,0 -> u,0,0
    /// delta2:
    /// q0,0 -> u,0,+1
    /// ```
    pub fn parse(text: &str) -> Result<Self, AtmError> {
        let mut spec = AtmSpec {
            states: Vec::new(),
            universal: BTreeSet::new(),
            delta: [BTreeMap::new(), BTreeMap::new()],
            init: String::new(),
            accept: String::new(),
            reject: String::new(),
            word: Vec::new(),
        };
        let mut section: Option<usize> = None;
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let err = |msg: String| AtmError::Syntax { line: i + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some((s, rhs)) = line.split_once("->") {
                let p = section.ok_or_else(|| err("transition outside a delta section".into()))?;
                let lhs: Vec<&str> = s.split(',').map(str::trim).collect();
                let rhs: Vec<&str> = rhs.split(',').map(str::trim).collect();
                let (&[from, read], &[to, write, step]) = (lhs.as_slice(), rhs.as_slice()) else {
                    return Err(err("expected `s,sym -> s',sym',move`".into()));
                };
                let sym = |x: &str| Sym::parse(x).ok_or_else(|| err(format!("bad symbol `{x}`")));
                let step = match step {
                    "-1" | "L" => -1,
                    "0" | "N" => 0,
                    "+1" | "1" | "R" => 1,
                    other => return Err(err(format!("bad move `{other}`"))),
                };
                let key = (from.to_owned(), sym(read)?);
                if spec.delta[p].insert(key, (to.to_owned(), sym(write)?, step)).is_some() {
                    return Err(err(format!("duplicate row for ({from}, {read})")));
                }
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| err("expected `key: value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_owned()) {
                return Err(err(format!("duplicate section `{key}`")));
            }
            section = None;
            match key {
                "states" => spec.states = value.split_whitespace().map(str::to_owned).collect(),
                "universal" => spec.universal = value.split_whitespace().map(str::to_owned).collect(),
                "init" => spec.init = value.to_owned(),
                "accept" => spec.accept = value.to_owned(),
                "reject" => spec.reject = value.to_owned(),
                "word" => {
                    spec.word = value
                        .chars()
                        .map(|c| Sym::parse(&c.to_string()).ok_or_else(|| err(format!("bad symbol `{c}`"))))
                        .collect::<Result<_, _>>()?
                }
                "delta1" | "delta2" if value.is_empty() => section = Some(usize::from(key == "delta2")),
                _ => return Err(err(format!("unknown section `{key}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for AtmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states.join(" "))?;
        writeln!(f, "universal: {}", self.universal.iter().cloned().collect::<Vec<_>>().join(" "))?;
        writeln!(f, "init: {}", self.init)?;
        writeln!(f, "accept: {}", self.accept)?;
        writeln!(f, "reject: {}", self.reject)?;
        writeln!(f, "word: {}", self.word.iter().map(Sym::to_string).collect::<String>())?;
        for (p, d) in self.delta.iter().enumerate() {
            writeln!(f, "delta{}:", p + 1)?;
            for ((s, sym), (t, w, step)) in d {
                let step = if *step > 0 { "+1".to_string() } else { step.to_string() };
                writeln!(f, "{s},{sym} -> {t},{w},{step}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimOutcome {
    pub accepts: bool,
    /// Halting configurations that do not have a blank tape.
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Config {
    state: String,
    /// 1-based head position.
    head: usize,
    tape: Vec<Sym>,
}

/// Decides acceptance by evaluating the AND/OR graph of reachable
/// configurations. A configuration accepts when it is in the accepting
/// state, or some (existential) or every (universal) successor accepts.
/// Acceptance is the least fixpoint, so configurations that can only
/// return to themselves along a cycle do not accept.
pub fn simulate_atm(m: &AtmSpec) -> Result<SimOutcome, AtmError> {
    m.validate()?;
    let start = Config { state: m.init.clone(), head: 1, tape: m.word.clone() };
    let mut ids: HashMap<Config, usize> = HashMap::new();
    let mut configs: Vec<Config> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert(start.clone(), 0);
    configs.push(start);
    queue.push_back(0);
    let mut warnings = BTreeSet::new();
    while let Some(c) = queue.pop_front() {
        let cfg = configs[c].clone();
        let mut next = Vec::new();
        if m.is_final(&cfg.state) {
            if cfg.tape.iter().any(|&s| s != Sym::Blank) {
                let tape: String = cfg.tape.iter().map(Sym::to_string).collect();
                warnings.insert(format!("halts in `{}` with non-blank tape {tape}", cfg.state));
            }
        } else {
            for p in 1..=2 {
                let t = m.apply(p, &cfg.state, cfg.tape[cfg.head - 1]).expect("validated");
                let head = cfg.head as i64 + i64::from(t.step);
                if head < 1 || head > m.m() as i64 {
                    return Err(AtmError::TapeBound { m: m.m(), state: cfg.state.clone() });
                }
                let mut tape = cfg.tape.clone();
                tape[cfg.head - 1] = t.write;
                let n = Config { state: t.to, head: head as usize, tape };
                let id = *ids.entry(n.clone()).or_insert_with(|| {
                    configs.push(n);
                    succ.push(Vec::new());
                    queue.push_back(configs.len() - 1);
                    configs.len() - 1
                });
                next.push(id);
            }
        }
        if succ.len() <= c {
            succ.resize(c + 1, Vec::new());
        }
        succ[c] = next;
    }
    let mut accepting = vec![false; configs.len()];
    loop {
        let mut changed = false;
        for (c, cfg) in configs.iter().enumerate() {
            if accepting[c] {
                continue;
            }
            let ok = if m.is_final(&cfg.state) {
                cfg.state == m.accept
            } else if m.is_universal(&cfg.state) {
                succ[c].iter().all(|&d| accepting[d])
            } else {
                succ[c].iter().any(|&d| accepting[d])
            };
            if ok {
                accepting[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(SimOutcome { accepts: accepting[0], warnings: warnings.into_iter().collect() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TBoxFlavor {
    /// Unqualified existentials with inverse roles on the left.
    DlLiteCore,
    /// Qualified existentials only, with a fresh filler per role.
    El,
}

#[derive(Clone, Debug)]
pub struct AtmInstance {
    pub kb: KnowledgeBase,
    pub query: NnfaPart,
    pub individual: String,
}

impl AtmInstance {
    /// `q(x) <- E(x, y)`; the machine accepts iff the individual answers it.
    pub fn as_query(&self) -> Cn2rpq {
        Cn2rpq {
            answer_vars: vec!["x".into()],
            atoms: vec![Atom::Role(self.query.part.clone(), Term::var("x"), Term::var("y"))],
            nnfa: self.query.nnfa.clone(),
        }
    }
}

const A_INIT: &str = "Ainit";
const A_FINAL: &str = "Afinal";
const A_EXISTS: &str = "Aexists";
const A_FORALL: &str = "Aforall";

/// Builds the KB and query. Only the accepting state is labelled final: a
/// path ending in the rejecting state must not count as accepting.
pub fn gen_atm_instance(m: &AtmSpec, flavor: TBoxFlavor) -> Result<AtmInstance, AtmError> {
    m.validate()?;
    let n = m.m() as i64;
    let delta = m.transitions();
    let tid = |t: &Transition| delta.binary_search(t).expect("listed transition");
    let role_name = |p: usize, t: &Transition, i: i64| format!("r{p}t{}i{i}", tid(t));
    let filler = |p: usize, t: &Transition, i: i64| format!("F{p}t{}i{i}", tid(t));
    // The (p, t) pairs with t = δ_p(s, σ) for some s, σ.
    let mut fired: Vec<(usize, Transition)> = Vec::new();
    for s in m.states.iter().filter(|s| !m.is_final(s)) {
        for sym in Sym::ALL {
            for p in 1..=2 {
                fired.push((p, m.apply(p, s, sym).unwrap()));
            }
        }
    }
    fired.sort();
    fired.dedup();

    let some = |p: usize, t: &Transition, i: i64| match flavor {
        TBoxFlavor::DlLiteCore => Concept::exists(RoleExpr::new(role_name(p, t, i)), Concept::Top),
        TBoxFlavor::El => Concept::exists(RoleExpr::new(role_name(p, t, i)), Concept::name(filler(p, t, i))),
    };
    let came_via = |p: usize, t: &Transition, i: i64| match flavor {
        TBoxFlavor::DlLiteCore => Concept::exists(RoleExpr::inv(role_name(p, t, i)), Concept::Top),
        TBoxFlavor::El => Concept::name(filler(p, t, i)),
    };
    let mut tbox = Vec::new();
    for (p, t) in fired.iter().filter(|(_, t)| t.from == m.init) {
        tbox.push(TBoxAxiom::sub(Concept::name(A_INIT), some(*p, t, 1 + i64::from(t.step))));
    }
    for (p, t) in &fired {
        for i in 1..=n {
            for (q, u) in fired.iter().filter(|(_, u)| u.from == t.to) {
                tbox.push(TBoxAxiom::sub(came_via(*p, t, i), some(*q, u, i + i64::from(u.step))));
            }
            let label = if t.to == m.accept {
                Some(A_FINAL)
            } else if t.to == m.reject {
                None
            } else if m.is_universal(&t.to) {
                Some(A_FORALL)
            } else {
                Some(A_EXISTS)
            };
            if let Some(label) = label {
                tbox.push(TBoxAxiom::sub(came_via(*p, t, i), Concept::name(label)));
            }
        }
    }
    let abox = vec![AboxAssertion::concept(A_INIT, "a"), AboxAssertion::concept(A_EXISTS, "a")];

    let up = |p: usize, t: &Transition, i: i64| Label::Role(RoleExpr::inv(role_name(p, t, i)));
    let down = |p: usize, t: &Transition, i: i64| Label::Role(RoleExpr::new(role_name(p, t, i)));
    let test = |c: &str| Label::Concept(c.to_owned());
    let mut b = NnfaBuilder::new();
    let main = b.reserve();
    // Cell tests: local states 0, 1, 2 track the symbol (Sym::index) and 3
    // is the final state.
    let cells: Vec<usize> = (1..=n)
        .map(|l| {
            let mut tr = Vec::new();
            for (p, t) in &fired {
                for i in 1..=n {
                    if l == i - i64::from(t.step) {
                        tr.push((t.write.index(), up(*p, t, i), t.read.index()));
                    } else {
                        for sym in Sym::ALL {
                            tr.push((sym.index(), up(*p, t, i), sym.index()));
                        }
                    }
                }
            }
            tr.push((m.word[l as usize - 1].index(), test(A_INIT), 3));
            b.add_automaton(4, Sym::Blank.index(), &[3], &tr)
        })
        .collect();
    // Path selection: s_down, c_left, c_right, s_up, s_updown, s_test, s_f.
    let (s_down, c_left, c_right, s_up, s_updown, s_test, s_f) = (0, 1, 2, 3, 4, 5, 6);
    let mut tr = vec![
        (s_down, test(A_EXISTS), c_left),
        (s_down, test(A_EXISTS), c_right),
        (s_down, test(A_FORALL), c_left),
        (s_down, test(A_FINAL), s_test),
        (s_test, Label::Test(cells), s_up),
        (s_updown, test(A_FORALL), c_right),
        (s_updown, test(A_EXISTS), s_up),
        (s_updown, test(A_INIT), s_f),
        // Back at the root after its right subtree.
        (s_up, test(A_INIT), s_f),
    ];
    for (p, t) in &fired {
        for i in 0..=n + 1 {
            let (c, back) = if *p == 1 { (c_left, s_updown) } else { (c_right, s_up) };
            tr.push((c, down(*p, t, i), s_down));
            if (1..=n).contains(&i) {
                tr.push((s_up, up(*p, t, i), back));
            }
        }
    }
    b.fill(main, 7, s_down, &[s_f], &tr);
    let nnfa = reduce_nnfa(&b.finish());
    let a0 = &nnfa.automata[main];
    let part = crate::query::PartRef::new(a0.initial, a0.finals.iter().copied());
    Ok(AtmInstance { kb: KnowledgeBase::new(tbox, abox), query: Arc::new(nnfa).part(part), individual: "a".into() })
}

/// Small machines over at most two cells and six states, paired with input
/// words; several accept, several reject, and one alternates between a
/// universal state and a non-trivial existential choice.
pub fn corpus() -> Vec<(&'static str, AtmSpec)> {
    const ACCEPT: &str = "
states: q0 acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> acc,b,0
q0,1 -> acc,b,0
q0,b -> acc,b,0
delta2:
q0,0 -> acc,b,0
q0,1 -> acc,b,0
q0,b -> acc,b,0
";
    const REJECT: &str = "
states: q0 acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> rej,b,0
q0,1 -> rej,b,0
q0,b -> rej,b,0
delta2:
q0,0 -> rej,b,0
q0,1 -> rej,b,0
q0,b -> rej,b,0
";
    const LOOP: &str = "
states: q0 acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> q0,0,0
q0,1 -> q0,1,0
q0,b -> q0,b,0
delta2:
q0,0 -> q0,0,0
q0,1 -> q0,1,0
q0,b -> q0,b,0
";
    // Accepts iff cell 1 holds 1; both outcomes blank the tape first.
    const FIRST_BIT: &str = "
states: q0 e f acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> f,b,+1
q0,1 -> e,b,+1
q0,b -> f,b,+1
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
f,0 -> rej,b,0
f,1 -> rej,b,0
f,b -> rej,b,0
delta2:
q0,0 -> f,b,+1
q0,1 -> e,b,+1
q0,b -> f,b,+1
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
f,0 -> rej,b,0
f,1 -> rej,b,0
f,b -> rej,b,0
";
    // Accepts iff cell 2 holds 1, moving right and then back left.
    const SECOND_BIT: &str = "
states: q0 c e acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> c,b,+1
q0,1 -> c,b,+1
q0,b -> c,b,+1
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
delta2:
q0,0 -> c,b,+1
q0,1 -> c,b,+1
q0,b -> c,b,+1
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
";
    // AND of both cells: the universal state u checks cell 1 itself and
    // hands cell 2 to c; failing checks loop forever.
    const AND: &str = "
states: q0 u c e acc rej
universal: u
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> u,0,0
q0,1 -> u,1,0
q0,b -> u,b,0
u,0 -> u,0,0
u,1 -> e,b,+1
u,b -> u,b,0
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
delta2:
q0,0 -> u,0,0
q0,1 -> u,1,0
q0,b -> u,b,0
u,0 -> c,0,+1
u,1 -> c,1,+1
u,b -> c,b,+1
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
";
    // OR of both cells through an existential choice.
    const OR: &str = "
states: q0 c e acc rej
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> q0,0,0
q0,1 -> e,b,+1
q0,b -> q0,b,0
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
delta2:
q0,0 -> c,0,+1
q0,1 -> c,1,+1
q0,b -> c,b,+1
c,0 -> c,0,0
c,1 -> e,b,-1
c,b -> c,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
";
    // As AND, but cell 2 is checked by an existential state whose second
    // option is a dead end.
    const ALTERNATING: &str = "
states: q0 u g e acc rej
universal: u
init: q0
accept: acc
reject: rej
delta1:
q0,0 -> u,0,0
q0,1 -> u,1,0
q0,b -> u,b,0
u,0 -> u,0,0
u,1 -> e,b,+1
u,b -> u,b,0
g,0 -> g,0,0
g,1 -> e,b,-1
g,b -> g,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
delta2:
q0,0 -> u,0,0
q0,1 -> u,1,0
q0,b -> u,b,0
u,0 -> g,0,+1
u,1 -> g,1,+1
u,b -> g,b,+1
g,0 -> g,0,0
g,1 -> g,1,0
g,b -> g,b,0
e,0 -> acc,b,0
e,1 -> acc,b,0
e,b -> acc,b,0
";
    let runs: [(&str, &str, &str); 14] = [
        ("accept", ACCEPT, "1"),
        ("reject", REJECT, "0"),
        ("loop", LOOP, "1"),
        ("first-bit-10", FIRST_BIT, "10"),
        ("first-bit-01", FIRST_BIT, "01"),
        ("second-bit-01", SECOND_BIT, "01"),
        ("second-bit-10", SECOND_BIT, "10"),
        ("and-11", AND, "11"),
        ("and-10", AND, "10"),
        ("or-01", OR, "01"),
        ("or-00", OR, "00"),
        ("alternating-11", ALTERNATING, "11"),
        ("alternating-01", ALTERNATING, "01"),
        ("alternating-10", ALTERNATING, "10"),
    ];
    runs.into_iter()
        .map(|(name, text, word)| (name, AtmSpec::parse(&format!("{text}word: {word}\n")).expect("corpus machine")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(name: &str) -> AtmSpec {
        corpus().into_iter().find(|(n, _)| *n == name).unwrap().1
    }

    #[test]
    fn corpus_outcomes() {
        let expected = [
            ("accept", true),
            ("reject", false),
            ("loop", false),
            ("first-bit-10", true),
            ("first-bit-01", false),
            ("second-bit-01", true),
            ("second-bit-10", false),
            ("and-11", true),
            ("and-10", false),
            ("or-01", true),
            ("or-00", false),
            ("alternating-11", true),
            ("alternating-01", false),
            ("alternating-10", false),
        ];
        for (name, acc) in expected {
            let out = simulate_atm(&machine(name)).unwrap();
            assert_eq!(out.accepts, acc, "{name}");
            assert!(out.warnings.is_empty(), "{name}: {:?}", out.warnings);
        }
    }

    #[test]
    fn blank_warning() {
        let mut m = machine("accept");
        for d in &mut m.delta {
            for v in d.values_mut() {
                v.1 = Sym::One;
            }
        }
        let out = simulate_atm(&m).unwrap();
        assert!(out.accepts);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn validation_errors() {
        let mut m = machine("accept");
        m.init = "acc".into();
        assert!(matches!(m.validate(), Err(AtmError::InitialIsFinal(_))));
        let mut m = machine("accept");
        m.delta[1].remove(&("q0".into(), Sym::Blank));
        assert!(matches!(m.validate(), Err(AtmError::NotTotal { p: 2, .. })));
    }

    #[test]
    fn tape_bound() {
        let mut m = machine("accept");
        for v in m.delta[0].values_mut() {
            v.2 = 1;
        }
        assert!(matches!(simulate_atm(&m), Err(AtmError::TapeBound { .. })));
    }

    #[test]
    fn parse_round_trip() {
        let m = machine("and-10");
        assert_eq!(AtmSpec::parse(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn cell_test_shape() {
        let inst = gen_atm_instance(&machine("first-bit-10"), TBoxFlavor::DlLiteCore).unwrap();
        let nnfa = &inst.query.nnfa;
        assert_eq!(nnfa.automata.len(), 3);
        for a in &nnfa.automata[1..] {
            assert_eq!(a.states.len(), 4);
            assert_eq!(a.finals, vec![a.states[3]]);
            assert_eq!(a.initial, a.states[Sym::Blank.index()]);
        }
    }

    #[test]
    fn el_flavor_has_no_inverse_axioms() {
        let inst = gen_atm_instance(&machine("and-11"), TBoxFlavor::El).unwrap();
        assert!(inst.kb.tbox.iter().all(|ax| match ax {
            TBoxAxiom::ConceptInclusion(c, d) => !c.mentions_inverse() && !d.mentions_inverse(),
            _ => false,
        }));
    }
}
