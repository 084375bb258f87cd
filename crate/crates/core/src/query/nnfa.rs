// SPDX-License-Identifier: Apache-2.0
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::{Nre, Symbol};
use crate::kb::RoleExpr;

pub type StateId = u32;

const NO_OWNER: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Role(RoleExpr),
    Concept(String),
    Nominal(String),
    /// Conjunction of nested tests on automata with these indices.
    Test(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    pub states: Vec<StateId>,
    pub initial: StateId,
    pub finals: Vec<StateId>,
    pub transitions: Vec<(StateId, Label, StateId)>,
}

/// Indexed family of automata; tests on automaton `l` refer to indices above `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nnfa {
    pub automata: Vec<Automaton>,
    owner: Vec<u32>,
}

/// A start state and final states of one automaton of a shared NNFA.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartRef {
    pub start: StateId,
    pub finals: Vec<StateId>,
}

impl PartRef {
    pub fn new(start: StateId, finals: impl IntoIterator<Item = StateId>) -> Self {
        let mut finals: Vec<StateId> = finals.into_iter().collect();
        finals.sort_unstable();
        finals.dedup();
        PartRef { start, finals }
    }
}

#[derive(Clone, Debug)]
pub struct NnfaPart {
    pub nnfa: Arc<Nnfa>,
    pub part: PartRef,
}

impl NnfaPart {
    pub fn start(&self) -> StateId {
        self.part.start
    }

    pub fn finals(&self) -> &[StateId] {
        &self.part.finals
    }

    pub fn to_nre(&self) -> Nre {
        self.nnfa.part_to_nre(&self.part)
    }
}

impl Nnfa {
    /// Builds an NNFA, checking state disjointness and the index constraint.
    pub fn new(automata: Vec<Automaton>) -> Result<Nnfa, String> {
        let max = automata.iter().flat_map(|a| a.states.iter().copied()).max().map_or(0, |m| m as usize + 1);
        let mut owner = vec![NO_OWNER; max];
        for (i, a) in automata.iter().enumerate() {
            for &s in &a.states {
                if owner[s as usize] != NO_OWNER {
                    return Err(format!("state {s} belongs to two automata"));
                }
                owner[s as usize] = i as u32;
            }
        }
        let n = Nnfa { automata, owner };
        for (i, a) in n.automata.iter().enumerate() {
            let own = |s: StateId| n.owner.get(s as usize) == Some(&(i as u32));
            if !own(a.initial) || !a.finals.iter().all(|&f| own(f)) {
                return Err(format!("automaton {i} has initial or final states it does not own"));
            }
            for (s, l, t) in &a.transitions {
                if !own(*s) || !own(*t) {
                    return Err(format!("automaton {i} has a transition leaving its states"));
                }
                if let Label::Test(js) = l {
                    if js.is_empty() || js.iter().any(|&j| j <= i || j >= n.automata.len()) {
                        return Err(format!("automaton {i} has a test violating the index constraint"));
                    }
                }
            }
        }
        Ok(n)
    }

    pub fn owner(&self, s: StateId) -> usize {
        let o = self.owner[s as usize];
        debug_assert_ne!(o, NO_OWNER);
        o as usize
    }

    /// One past the largest state id.
    pub fn state_bound(&self) -> usize {
        self.owner.len()
    }

    pub fn num_states(&self) -> usize {
        self.automata.iter().map(|a| a.states.len()).sum()
    }

    pub fn is_reduced(&self) -> bool {
        self.automata
            .iter()
            .flat_map(|a| a.transitions.iter())
            .all(|(_, l, _)| !matches!(l, Label::Test(js) if js.len() != 1))
    }

    pub fn satisfies_index_constraint(&self) -> bool {
        self.automata.iter().enumerate().all(|(i, a)| {
            a.transitions.iter().all(|(_, l, _)| match l {
                Label::Test(js) => js.iter().all(|&j| j > i && j < self.automata.len()),
                _ => true,
            })
        })
    }

    pub fn part(self: &Arc<Self>, part: PartRef) -> NnfaPart {
        NnfaPart { nnfa: self.clone(), part }
    }

    /// The part `(initial, finals)` of automaton `j`.
    pub fn automaton_part(&self, j: usize) -> PartRef {
        let a = &self.automata[j];
        PartRef::new(a.initial, a.finals.iter().copied())
    }

    /// Indices of automata reachable from `j` through tests, excluding `j`.
    pub fn descendants(&self, j: usize) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![j];
        while let Some(k) = stack.pop() {
            for (_, l, _) in &self.automata[k].transitions {
                if let Label::Test(js) = l {
                    for &x in js {
                        if seen.insert(x) {
                            stack.push(x);
                        }
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        self.labels()
            .filter_map(|l| match l {
                Label::Concept(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        self.labels()
            .filter_map(|l| match l {
                Label::Role(r) => Some(r.name.clone()),
                _ => None,
            })
            .collect()
    }

    fn labels(&self) -> impl Iterator<Item = &Label> {
        self.automata.iter().flat_map(|a| a.transitions.iter().map(|t| &t.1))
    }

    /// Relabels every transition, keeping the automaton structure.
    pub fn map_labels(&self, f: impl Fn(&Label) -> Label) -> Nnfa {
        let automata = self
            .automata
            .iter()
            .map(|a| Automaton {
                transitions: a.transitions.iter().map(|(s, l, t)| (*s, f(l), *t)).collect(),
                ..a.clone()
            })
            .collect();
        Nnfa { automata, owner: self.owner.clone() }
    }

    /// Equivalent NRE for a part, by state elimination.
    pub fn part_to_nre(&self, part: &PartRef) -> Nre {
        let a = &self.automata[self.owner(part.start)];
        let idx: BTreeMap<StateId, usize> = a.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let (src, dst) = (a.states.len(), a.states.len() + 1);
        let mut edges: BTreeMap<(usize, usize), Rx> = BTreeMap::new();
        let add = |edges: &mut BTreeMap<(usize, usize), Rx>, p: usize, q: usize, r: Rx| {
            let merged = match edges.remove(&(p, q)) {
                Some(old) => Rx::union(old, r),
                None => r,
            };
            edges.insert((p, q), merged);
        };
        add(&mut edges, src, idx[&part.start], Rx::Eps);
        for f in &part.finals {
            add(&mut edges, idx[f], dst, Rx::Eps);
        }
        for (s, l, t) in &a.transitions {
            let r = match l {
                Label::Role(r) => Nre::Sym(Symbol::Role(r.clone())),
                Label::Concept(c) => Nre::Sym(Symbol::Concept(c.clone())),
                Label::Nominal(i) => Nre::Sym(Symbol::Nominal(i.clone())),
                Label::Test(js) => {
                    Nre::seq(js.iter().map(|&j| Nre::test(self.part_to_nre(&self.automaton_part(j)))))
                }
            };
            add(&mut edges, idx[s], idx[t], Rx::N(r));
        }
        for k in 0..a.states.len() {
            let loop_rx = edges.remove(&(k, k));
            let ins: Vec<(usize, Rx)> =
                edges.iter().filter(|((_, q), _)| *q == k).map(|((p, _), r)| (*p, r.clone())).collect();
            let outs: Vec<(usize, Rx)> =
                edges.iter().filter(|((p, _), _)| *p == k).map(|((_, q), r)| (*q, r.clone())).collect();
            edges.retain(|(p, q), _| *p != k && *q != k);
            for (p, rin) in &ins {
                for (q, rout) in &outs {
                    let mid = match &loop_rx {
                        Some(l) => Rx::concat(rin.clone(), Rx::concat(Rx::star(l.clone()), rout.clone())),
                        None => Rx::concat(rin.clone(), rout.clone()),
                    };
                    add(&mut edges, *p, *q, mid);
                }
            }
        }
        match edges.remove(&(src, dst)) {
            None => Nre::concept("bot"),
            Some(Rx::Eps) => Nre::epsilon(),
            Some(Rx::N(e)) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Rx {
    Eps,
    N(Nre),
}

impl Rx {
    fn union(a: Rx, b: Rx) -> Rx {
        match (a, b) {
            (Rx::Eps, Rx::Eps) => Rx::Eps,
            (Rx::Eps, Rx::N(x)) | (Rx::N(x), Rx::Eps) => match x {
                Nre::Star(_) => Rx::N(x),
                Nre::Concat(a, b) if matches!(&*b, Nre::Star(c) if **c == *a) => Rx::N(*b),
                x => Rx::N(Nre::union(Nre::epsilon(), x)),
            },
            (Rx::N(x), Rx::N(y)) if x == y => Rx::N(x),
            (Rx::N(x), Rx::N(y)) => Rx::N(Nre::union(x, y)),
        }
    }

    fn concat(a: Rx, b: Rx) -> Rx {
        match (a, b) {
            (Rx::Eps, x) | (x, Rx::Eps) => x,
            (Rx::N(x), Rx::N(y)) => Rx::N(Nre::concat(x, y)),
        }
    }

    fn star(a: Rx) -> Rx {
        match a {
            Rx::Eps => Rx::Eps,
            Rx::N(Nre::Star(x)) => Rx::N(Nre::Star(x)),
            Rx::N(x) => Rx::N(Nre::star(x)),
        }
    }
}

/// Accumulates compiled NREs into one NNFA with globally distinct states.
#[derive(Default)]
pub struct NnfaBuilder {
    automata: Vec<Option<Automaton>>,
    next_state: StateId,
    /// Automata already compiled for test bodies, shared by equal tests.
    tests: HashMap<Nre, usize>,
}

#[derive(Default)]
struct EpsNfa {
    n: usize,
    eps: Vec<(usize, usize)>,
    trans: Vec<(usize, Label, usize)>,
}

impl EpsNfa {
    fn fresh(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }
}

impl NnfaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Compiles `e` into a new automaton and returns its part.
    pub fn add_nre(&mut self, e: &Nre) -> PartRef {
        let k = self.compile(e);
        let a = self.automata[k].as_ref().unwrap();
        PartRef::new(a.initial, a.finals.iter().copied())
    }

    /// Adds a hand-built automaton given with local states `0..n`; returns
    /// its index and the global id of local state 0.
    pub fn add_automaton(
        &mut self,
        n: usize,
        initial: usize,
        finals: &[usize],
        transitions: &[(usize, Label, usize)],
    ) -> usize {
        let base = self.next_state;
        self.next_state += n as StateId;
        let g = |s: usize| base + s as StateId;
        self.automata.push(Some(Automaton {
            states: (0..n).map(g).collect(),
            initial: g(initial),
            finals: finals.iter().map(|&f| g(f)).collect(),
            transitions: transitions.iter().map(|(s, l, t)| (g(*s), l.clone(), g(*t))).collect(),
        }));
        self.automata.len() - 1
    }

    /// Reserves an automaton index to be filled by [`NnfaBuilder::fill`].
    pub fn reserve(&mut self) -> usize {
        self.automata.push(None);
        self.automata.len() - 1
    }

    pub fn fill(&mut self, k: usize, n: usize, initial: usize, finals: &[usize], transitions: &[(usize, Label, usize)]) {
        let base = self.next_state;
        self.next_state += n as StateId;
        let g = |s: usize| base + s as StateId;
        self.automata[k] = Some(Automaton {
            states: (0..n).map(g).collect(),
            initial: g(initial),
            finals: finals.iter().map(|&f| g(f)).collect(),
            transitions: transitions.iter().map(|(s, l, t)| (g(*s), l.clone(), g(*t))).collect(),
        });
    }

    fn thompson(&mut self, owner: usize, e: &Nre, m: &mut EpsNfa) -> (usize, usize) {
        match e {
            Nre::Sym(sym) => {
                let (s, f) = (m.fresh(), m.fresh());
                let l = match sym {
                    Symbol::Role(r) => Label::Role(r.clone()),
                    Symbol::Concept(c) => Label::Concept(c.clone()),
                    Symbol::Nominal(a) => Label::Nominal(a.clone()),
                };
                m.trans.push((s, l, f));
                (s, f)
            }
            Nre::Test(inner) => {
                let (s, f) = (m.fresh(), m.fresh());
                // Reuse keeps printed queries, which repeat test bodies, from
                // multiplying automata; tests must still point to higher indices.
                let j = match self.tests.get(&**inner) {
                    Some(&j) if j > owner => j,
                    _ => {
                        let j = self.compile(inner);
                        self.tests.insert((**inner).clone(), j);
                        j
                    }
                };
                m.trans.push((s, Label::Test(vec![j]), f));
                (s, f)
            }
            Nre::Concat(a, b) => {
                let (s1, f1) = self.thompson(owner, a, m);
                let (s2, f2) = self.thompson(owner, b, m);
                m.eps.push((f1, s2));
                (s1, f2)
            }
            Nre::Union(a, b) => {
                let (s1, f1) = self.thompson(owner, a, m);
                let (s2, f2) = self.thompson(owner, b, m);
                let (s, f) = (m.fresh(), m.fresh());
                m.eps.extend([(s, s1), (s, s2), (f1, f), (f2, f)]);
                (s, f)
            }
            Nre::Star(a) => {
                let (s1, f1) = self.thompson(owner, a, m);
                let (s, f) = (m.fresh(), m.fresh());
                m.eps.extend([(s, f), (s, s1), (f1, s1), (f1, f)]);
                (s, f)
            }
        }
    }

    fn compile(&mut self, e: &Nre) -> usize {
        let k = self.reserve();
        let mut m = EpsNfa::default();
        let (start, end) = self.thompson(k, e, &mut m);

        let mut eps_adj = vec![Vec::new(); m.n];
        for &(p, q) in &m.eps {
            eps_adj[p].push(q);
        }
        let closure = |p: usize| {
            let mut seen = vec![false; m.n];
            let mut stack = vec![p];
            seen[p] = true;
            while let Some(x) = stack.pop() {
                for &y in &eps_adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            seen
        };
        let mut out_adj: Vec<Vec<(Label, usize)>> = vec![Vec::new(); m.n];
        for (p, l, q) in &m.trans {
            out_adj[*p].push((l.clone(), *q));
        }
        let mut trans: BTreeSet<(usize, Label, usize)> = BTreeSet::new();
        let mut is_final = vec![false; m.n];
        for (p, fin) in is_final.iter_mut().enumerate() {
            let cl = closure(p);
            *fin = cl[end];
            for q in (0..m.n).filter(|&q| cl[q]) {
                for (l, r) in &out_adj[q] {
                    trans.insert((p, l.clone(), *r));
                }
            }
        }
        // keep states reachable from start that can reach a final state
        let mut fwd: Vec<Vec<(Label, usize)>> = vec![Vec::new(); m.n];
        let mut bwd: Vec<Vec<usize>> = vec![Vec::new(); m.n];
        for (p, l, q) in &trans {
            fwd[*p].push((l.clone(), *q));
            bwd[*q].push(*p);
        }
        let mut order = vec![start];
        let mut reach = vec![false; m.n];
        reach[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for (_, q) in &fwd[p] {
                if !reach[*q] {
                    reach[*q] = true;
                    order.push(*q);
                    queue.push_back(*q);
                }
            }
        }
        let mut live = is_final.clone();
        let mut stack: Vec<usize> = (0..m.n).filter(|&p| is_final[p]).collect();
        while let Some(q) = stack.pop() {
            for &p in &bwd[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        let kept: Vec<usize> = order.into_iter().filter(|&p| p == start || live[p]).collect();
        let local: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let transitions: Vec<(usize, Label, usize)> = trans
            .iter()
            .filter(|(p, _, q)| local.contains_key(p) && local.contains_key(q))
            .map(|(p, l, q)| (local[p], l.clone(), local[q]))
            .collect();
        let finals: Vec<bool> = kept.iter().map(|&p| is_final[p]).collect();
        let (n, finals, transitions) = merge_bisimilar(&finals, &transitions);
        self.fill(k, n, 0, &finals, &transitions);
        k
    }

    pub fn finish(self) -> Nnfa {
        Nnfa::new(self.automata.into_iter().map(|a| a.expect("reserved automaton never filled")).collect())
            .expect("builder produced an ill-formed NNFA")
    }
}

/// Quotient of an automaton with states `0..finals.len()` and initial state
/// 0 by forward bisimulation. One state per symbol occurrence leaves many
/// states with the same future; merging them keeps the language.
fn merge_bisimilar(finals: &[bool], transitions: &[(usize, Label, usize)]) -> (usize, Vec<usize>, Vec<(usize, Label, usize)>) {
    let n = finals.len();
    // The initial state stays apart, which keeps printed forms readable.
    let mut class: Vec<usize> = finals.iter().enumerate().map(|(p, &f)| if p == 0 { 2 } else { usize::from(f) }).collect();
    let mut count = 0;
    loop {
        let mut out: Vec<BTreeSet<(&Label, usize)>> = vec![BTreeSet::new(); n];
        for (p, l, q) in transitions {
            out[*p].insert((l, class[*q]));
        }
        // Numbering classes in order of first state keeps state 0 at 0.
        let mut ids: HashMap<(usize, &BTreeSet<(&Label, usize)>), usize> = HashMap::new();
        let next: Vec<usize> = (0..n)
            .map(|p| {
                let fresh = ids.len();
                *ids.entry((class[p], &out[p])).or_insert(fresh)
            })
            .collect();
        let done = ids.len() == count;
        count = ids.len();
        class = next;
        if done {
            break;
        }
    }
    let merged: BTreeSet<(usize, Label, usize)> =
        transitions.iter().map(|(p, l, q)| (class[*p], l.clone(), class[*q])).collect();
    let mut fin: Vec<usize> = (0..n).filter(|&p| finals[p]).map(|p| class[p]).collect();
    fin.sort_unstable();
    fin.dedup();
    (count, fin, merged.into_iter().collect())
}

/// Compiles an NRE to a fresh NNFA.
pub fn compile_nre(e: &Nre) -> NnfaPart {
    let mut b = NnfaBuilder::new();
    let part = b.add_nre(e);
    NnfaPart { nnfa: Arc::new(b.finish()), part }
}

/// Splits every multi-index test into a chain of single-index tests.
pub fn reduce_nnfa(n: &Nnfa) -> Nnfa {
    if n.is_reduced() {
        return n.clone();
    }
    let mut next = n.state_bound() as StateId;
    let mut automata = n.automata.clone();
    for a in &mut automata {
        let mut out = Vec::with_capacity(a.transitions.len());
        for (s, l, t) in a.transitions.drain(..) {
            match l {
                Label::Test(js) if js.len() > 1 => {
                    let mut cur = s;
                    for (i, j) in js.iter().enumerate() {
                        let to = if i + 1 == js.len() {
                            t
                        } else {
                            let m = next;
                            next += 1;
                            a.states.push(m);
                            m
                        };
                        out.push((cur, Label::Test(vec![*j]), to));
                        cur = to;
                    }
                }
                l => out.push((s, l, t)),
            }
        }
        a.transitions = out;
    }
    Nnfa::new(automata).expect("reduction keeps the NNFA well formed")
}

/// Level of every automaton: 0 without tests, else one more than the
/// largest level among the automata it tests.
pub fn level_of(n: &Nnfa) -> Vec<usize> {
    let mut level = vec![0; n.automata.len()];
    for j in (0..n.automata.len()).rev() {
        for (_, l, _) in &n.automata[j].transitions {
            if let Label::Test(ks) = l {
                for &k in ks {
                    level[j] = level[j].max(level[k] + 1);
                }
            }
        }
    }
    level
}
