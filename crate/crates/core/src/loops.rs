// SPDX-License-Identifier: Apache-2.0
//! Loop and FLoop membership through state TBoxes.
//!
//! Every automaton state `s` gets a fresh concept `A_s` read as "a run in
//! state `s` here can be completed". A tuple `(C, s1, s2, G)` is in Loop
//! when `C & A_s2 & A_G` entails `A_s1`, and `(C, s1, F, G)` is in FLoop
//! when `C & A_G` entails `A_s1` once every state of `F` is accepting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use crate::kb::{ConceptId, NormalAxiom, NormalizedTBox};
use crate::query::{nominal_concept, Label, Nnfa, StateId};
use crate::reasoner::{conjunction, saturate, Conjunction, SaturatedTBox, Supers};

const STATE_PREFIX: &str = "__s";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoopError {
    #[error("automaton {0} has a test on several automata; reduce the NNFA first")]
    NotReduced(usize),
}

/// The base TBox extended with one concept per state, relative to a
/// focus automaton and optional extra accepting states.
#[derive(Debug)]
pub struct StateTBox {
    pub focus: usize,
    pub extra_finals: Option<Vec<StateId>>,
    pub sat: SaturatedTBox,
    state_concept: Vec<Option<ConceptId>>,
}

impl StateTBox {
    pub fn state_concept(&self, s: StateId) -> ConceptId {
        self.state_concept[s as usize].expect("state outside the focus automata")
    }
}

/// Builds the state TBox for automaton `focus`: transitions of every
/// automaton with index at least `focus`, `top <= A_f` for the finals of
/// higher automata and for `extra_finals`.
pub fn build_state_tbox(
    n: &Nnfa,
    base: &NormalizedTBox,
    focus: usize,
    extra_finals: Option<&[StateId]>,
) -> Result<StateTBox, LoopError> {
    let mut t = base.clone();
    let mut state_concept = vec![None; n.state_bound()];
    for a in &n.automata[focus..] {
        for &s in &a.states {
            state_concept[s as usize] = Some(t.vocab.fresh_concept(STATE_PREFIX));
        }
    }
    let cs = |s: StateId| state_concept[s as usize].unwrap();
    for (j, a) in n.automata.iter().enumerate().skip(focus) {
        if j > focus {
            for &f in &a.finals {
                t.push(NormalAxiom::Top(cs(f)));
            }
        }
        for (s, l, s2) in &a.transitions {
            let ax = match l {
                Label::Role(r) => NormalAxiom::ExistsLeft { role: t.vocab.role(r), filler: cs(*s2), rhs: cs(*s) },
                Label::Concept(b) => NormalAxiom::Conj(cs(*s2), t.vocab.concept(b), cs(*s)),
                Label::Nominal(ind) => NormalAxiom::Conj(cs(*s2), t.vocab.concept(&nominal_concept(ind)), cs(*s)),
                Label::Test(js) if js.len() == 1 => NormalAxiom::Conj(cs(*s2), cs(n.automata[js[0]].initial), cs(*s)),
                Label::Test(_) => return Err(LoopError::NotReduced(j)),
            };
            t.push(ax);
        }
    }
    if let Some(fs) = extra_finals {
        for &f in fs {
            t.push(NormalAxiom::Top(cs(f)));
        }
    }
    t.axioms.sort();
    t.axioms.dedup();
    Ok(StateTBox { focus, extra_finals: extra_finals.map(<[StateId]>::to_vec), sat: saturate(t), state_concept })
}

/// A memoized Loop or FLoop question.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoopKey {
    Loop { c: Conjunction, s1: StateId, s2: StateId, gamma: Vec<StateId> },
    FLoop { c: Conjunction, s1: StateId, finals: Vec<StateId>, gamma: Vec<StateId> },
}

type TBoxKey = (usize, Option<Vec<StateId>>);

/// Memoized Loop and FLoop tables for one NNFA over one TBox.
///
/// Both caches are pure: racing callers compute identical values.
#[derive(Debug)]
pub struct LoopTables {
    nnfa: Arc<Nnfa>,
    base: NormalizedTBox,
    tboxes: Mutex<HashMap<TBoxKey, Arc<StateTBox>>>,
    memo: Mutex<HashMap<LoopKey, bool>>,
}

fn sorted(v: &[StateId]) -> Vec<StateId> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl LoopTables {
    /// Fails on a non-reduced NNFA.
    pub fn new(nnfa: Arc<Nnfa>, base: NormalizedTBox) -> Result<Self, LoopError> {
        if let Some(j) = nnfa
            .automata
            .iter()
            .position(|a| a.transitions.iter().any(|(_, l, _)| matches!(l, Label::Test(js) if js.len() != 1)))
        {
            return Err(LoopError::NotReduced(j));
        }
        Ok(LoopTables { nnfa, base, tboxes: Mutex::new(HashMap::new()), memo: Mutex::new(HashMap::new()) })
    }

    pub fn nnfa(&self) -> &Arc<Nnfa> {
        &self.nnfa
    }

    fn state_tbox(&self, focus: usize, finals: Option<Vec<StateId>>) -> Arc<StateTBox> {
        let key = (focus, finals);
        if let Some(t) = self.tboxes.lock().expect("loop lock poisoned").get(&key) {
            return t.clone();
        }
        let built = Arc::new(
            build_state_tbox(&self.nnfa, &self.base, focus, key.1.as_deref()).expect("reduced NNFA checked on creation"),
        );
        self.tboxes.lock().expect("loop lock poisoned").entry(key).or_insert(built).clone()
    }

    fn lookup(&self, key: &LoopKey) -> Option<bool> {
        self.memo.lock().expect("loop lock poisoned").get(key).copied()
    }

    fn store(&self, key: LoopKey, v: bool) -> bool {
        self.memo.lock().expect("loop lock poisoned").insert(key, v);
        v
    }

    fn supers(&self, t: &StateTBox, c: &[ConceptId], extra: impl IntoIterator<Item = StateId>) -> Supers {
        let core: Vec<ConceptId> = c.iter().copied().chain(extra.into_iter().map(|s| t.state_concept(s))).collect();
        t.sat.supers(&core)
    }

    /// `(C, s1, s2, gamma)` in Loop.
    pub fn in_loop(&self, c: &[ConceptId], s1: StateId, s2: StateId, gamma: &[StateId]) -> bool {
        let key = LoopKey::Loop { c: conjunction(c.iter().copied()), s1, s2, gamma: sorted(gamma) };
        if let Some(v) = self.lookup(&key) {
            return v;
        }
        let i = self.nnfa.owner(s1);
        debug_assert_eq!(i, self.nnfa.owner(s2));
        let t = self.state_tbox(i, None);
        let v = self.supers(&t, c, std::iter::once(s2).chain(gamma.iter().copied())).contains(t.state_concept(s1));
        self.store(key, v)
    }

    /// `(C, s1, finals, gamma)` in FLoop.
    pub fn in_floop(&self, c: &[ConceptId], s1: StateId, finals: &[StateId], gamma: &[StateId]) -> bool {
        let finals = sorted(finals);
        let key = LoopKey::FLoop { c: conjunction(c.iter().copied()), s1, finals: finals.clone(), gamma: sorted(gamma) };
        if let Some(v) = self.lookup(&key) {
            return v;
        }
        let t = self.state_tbox(self.nnfa.owner(s1), Some(finals));
        let v = self.supers(&t, c, gamma.iter().copied()).contains(t.state_concept(s1));
        self.store(key, v)
    }

    pub fn num_entries(&self) -> usize {
        self.memo.lock().expect("loop lock poisoned").len()
    }

    /// Every memoized entry, one per line, sorted.
    pub fn dump(&self) -> String {
        let memo = self.memo.lock().expect("loop lock poisoned");
        let mut entries: Vec<(&LoopKey, &bool)> = memo.iter().collect();
        entries.sort();
        let conj = |c: &[ConceptId]| {
            if c.is_empty() {
                "top".to_owned()
            } else {
                c.iter().map(|&x| self.base.vocab.concept_name(x)).collect::<Vec<_>>().join("&")
            }
        };
        let set = |v: &[StateId]| format!("{{{}}}", v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
        let mut out = String::new();
        for (k, v) in entries {
            let _ = match k {
                LoopKey::Loop { c, s1, s2, gamma } => {
                    writeln!(out, "LOOP {} {s1} {s2} {} -> {v}", conj(c), set(gamma))
                }
                LoopKey::FLoop { c, s1, finals, gamma } => {
                    writeln!(out, "FLOOP {} {s1} {} {} -> {v}", conj(c), set(finals), set(gamma))
                }
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{normalize, parse_kb};
    use crate::query::{parse_nre, NnfaBuilder};

    fn setup(tbox: &str, nre: &str) -> (LoopTables, NormalizedTBox, crate::query::PartRef) {
        let kb = parse_kb(tbox).unwrap();
        let (t, _) = normalize(&kb.tbox, &kb.abox);
        let mut b = NnfaBuilder::new();
        let part = b.add_nre(&parse_nre(nre).unwrap());
        let n = Arc::new(b.finish());
        (LoopTables::new(n, t.clone()).unwrap(), t, part)
    }

    #[test]
    fn trivial_loop_and_floop() {
        let (lt, t, part) = setup("A <= exists r.B", "r");
        let a = t.vocab.lookup_concept("A").unwrap();
        assert!(lt.in_loop(&[a], part.start, part.start, &[]));
        let f = part.finals[0];
        assert!(lt.in_floop(&[], f, &[f], &[]));
    }

    #[test]
    fn floop_descends_into_witness() {
        let (lt, t, part) = setup("A <= exists r.B", "r");
        let a = t.vocab.lookup_concept("A").unwrap();
        assert!(lt.in_floop(&[a], part.start, &part.finals, &[]));
        let (lt2, t2, part2) = setup("A <= A", "r");
        let a2 = t2.vocab.lookup_concept("A").unwrap();
        assert!(!lt2.in_floop(&[a2], part2.start, &part2.finals, &[]));
    }

    #[test]
    fn down_and_back_up() {
        let (lt, t, _) = setup("A <= exists r.B", "r . B? . r-");
        let n = lt.nnfa().clone();
        let a = &n.automata[0];
        let (s1, s2) = (a.initial, a.finals[0]);
        let ca = t.vocab.lookup_concept("A").unwrap();
        let cb = t.vocab.lookup_concept("B").unwrap();
        assert!(lt.in_loop(&[ca], s1, s2, &[]));
        assert!(!lt.in_loop(&[cb], s1, s2, &[]));
    }

    #[test]
    fn test_discharged_into_gamma() {
        let (lt, _, _) = setup("A <= A", "<q>");
        let n = lt.nnfa().clone();
        let (s, s2) = (n.automata[0].initial, n.automata[0].finals[0]);
        let init1 = n.automata[1].initial;
        assert!(lt.in_loop(&[], s, s2, &[init1]));
        assert!(!lt.in_loop(&[], s, s2, &[]));
    }

    #[test]
    fn state_tbox_axioms() {
        let (_, t, _) = setup("A <= A", "B? . <q>");
        let mut b = NnfaBuilder::new();
        b.add_nre(&parse_nre("B? . <q>").unwrap());
        let n = b.finish();
        let st = build_state_tbox(&n, &t, 0, None).unwrap();
        let printed: Vec<String> = st.sat.tbox.axioms.iter().map(|a| st.sat.tbox.axiom_to_string(a)).collect();
        assert!(printed.iter().any(|s| s.contains(" & B <= ")));
        assert_eq!(printed.iter().filter(|s| s.starts_with("top <= __s")).count(), 1);
        assert_eq!(printed.iter().filter(|s| s.starts_with("exists q.__s")).count(), 1);
    }
}
