// SPDX-License-Identifier: Apache-2.0
//! Direct evaluation over a finite interpretation.

use std::collections::{BTreeSet, VecDeque};

use fixedbitset::FixedBitSet;

use super::join::{join, Relations};
use crate::query::{Cn2rpq, Label, Nnfa, NnfaPart, PartRef, StateId};
use crate::reasoner::{Adjacency, FiniteInterpretation};

/// Evaluates the automata of one NNFA over one interpretation.
///
/// Test satisfaction sets are computed bottom-up, highest index first;
/// multi-index tests need no reduction.
pub struct GraphEvaluator<'a> {
    interp: &'a FiniteInterpretation,
    nnfa: &'a Nnfa,
    adj: Adjacency,
    local: Vec<usize>,
    sat: Vec<FixedBitSet>,
}

impl<'a> GraphEvaluator<'a> {
    pub fn new(interp: &'a FiniteInterpretation, nnfa: &'a Nnfa) -> Self {
        let mut local = vec![usize::MAX; nnfa.state_bound()];
        for a in &nnfa.automata {
            for (k, &s) in a.states.iter().enumerate() {
                local[s as usize] = k;
            }
        }
        let mut g = GraphEvaluator { interp, nnfa, adj: interp.adjacency(), local, sat: Vec::new() };
        let n = nnfa.automata.len();
        let mut sat = vec![FixedBitSet::with_capacity(interp.len()); n];
        for j in (0..n).rev() {
            let a = &nnfa.automata[j];
            for o in 0..interp.len() {
                let r = g.reach_with(&sat, a.initial, o);
                if a.finals.iter().any(|&f| (0..interp.len()).any(|x| r.contains(g.node(j, x, f)))) {
                    sat[j].insert(o);
                }
            }
        }
        g.sat = sat;
        g
    }

    fn node(&self, j: usize, o: usize, s: StateId) -> usize {
        o * self.nnfa.automata[j].states.len() + self.local[s as usize]
    }

    fn reach_with(&self, sat: &[FixedBitSet], start: StateId, o: usize) -> FixedBitSet {
        let j = self.nnfa.owner(start);
        let a = &self.nnfa.automata[j];
        let width = a.states.len();
        let mut seen = FixedBitSet::with_capacity(self.interp.len() * width);
        let mut queue = VecDeque::from([(o, start)]);
        seen.insert(self.node(j, o, start));
        while let Some((c, s)) = queue.pop_front() {
            for (p, l, t) in &a.transitions {
                if *p != s {
                    continue;
                }
                let mut push = |d: usize| {
                    if !seen.put(self.node(j, d, *t)) {
                        queue.push_back((d, *t));
                    }
                };
                match l {
                    Label::Role(r) => {
                        for &d in self.adj.successors(r, c) {
                            push(d);
                        }
                    }
                    Label::Concept(b) => {
                        if self.interp.has_concept(b, c) {
                            push(c);
                        }
                    }
                    Label::Nominal(ind) => {
                        if self.interp.object(ind) == Some(c) {
                            push(c);
                        }
                    }
                    Label::Test(ks) => {
                        if ks.iter().all(|&k| sat[k].contains(c)) {
                            push(c);
                        }
                    }
                }
            }
        }
        seen
    }

    /// Objects reached in a final state of `part` from `o`.
    pub fn targets(&self, part: &PartRef, o: usize) -> Vec<usize> {
        let j = self.nnfa.owner(part.start);
        let r = self.reach_with(&self.sat, part.start, o);
        (0..self.interp.len()).filter(|&x| part.finals.iter().any(|&f| r.contains(self.node(j, x, f)))).collect()
    }

    /// Objects where automaton `j` accepts along some path.
    pub fn sat_set(&self, j: usize) -> &FixedBitSet {
        &self.sat[j]
    }

    /// All pairs of `part`.
    pub fn pairs(&self, part: &PartRef) -> BTreeSet<(usize, usize)> {
        (0..self.interp.len()).flat_map(|o| self.targets(part, o).into_iter().map(move |x| (o, x))).collect()
    }
}

impl Relations for GraphEvaluator<'_> {
    fn num_objects(&self) -> usize {
        self.interp.len()
    }

    fn individual(&self, name: &str) -> Option<usize> {
        self.interp.object(name)
    }

    fn concept(&self, name: &str, o: usize) -> bool {
        self.interp.has_concept(name, o)
    }

    fn test(&self, part: &PartRef, o: usize) -> bool {
        !self.targets(part, o).is_empty()
    }

    fn targets(&self, part: &PartRef, o: usize) -> Vec<usize> {
        GraphEvaluator::targets(self, part, o)
    }
}

/// Pair set of an NNFA part over a finite interpretation, as object names.
pub fn eval_on_interpretation(part: &NnfaPart, interp: &FiniteInterpretation) -> BTreeSet<(String, String)> {
    let g = GraphEvaluator::new(interp, &part.nnfa);
    g.pairs(&part.part)
        .into_iter()
        .map(|(a, b)| (interp.object_name(a).to_owned(), interp.object_name(b).to_owned()))
        .collect()
}

/// Answer tuples of `q` over a finite interpretation, as object names.
pub fn answers_on_interpretation(q: &Cn2rpq, interp: &FiniteInterpretation) -> BTreeSet<Vec<String>> {
    let g = GraphEvaluator::new(interp, &q.nnfa);
    join(&g, q, false)
        .into_iter()
        .map(|t| t.into_iter().map(|o| interp.object_name(o).to_owned()).collect())
        .collect()
}
