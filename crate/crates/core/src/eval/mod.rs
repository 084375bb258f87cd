// SPDX-License-Identifier: Apache-2.0
//! Query evaluation over knowledge bases and finite interpretations.
//!
//! Atoms are evaluated by a breadth-first search over pairs of an
//! individual and an automaton state. Besides moving along entailed role
//! edges, the search may stay at an individual and jump between states
//! whenever the anonymous subtree below it (or the individual itself)
//! supports a Loop, and may stop in the anonymous part through FLoop.

mod graph;
mod join;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};


pub use graph::{answers_on_interpretation, eval_on_interpretation, GraphEvaluator};
pub use join::{join, Relations};

use crate::kb::{normalize, AboxAssertion, ConceptId, KnowledgeBase, RoleId, TBoxAxiom, TOP};
use crate::loops::{LoopError, LoopTables};
use crate::query::{eliminate_nominal_tests, reduce_nnfa, Cn2rpq, Label, Nnfa, NnfaPart, PartRef, StateId};
use crate::reasoner::{conjunction, prepare, Conjunction, PreparedKb};
use crate::rewrite::{rewrite_with, RewriteError, RewriteOptions};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("the knowledge base is inconsistent")]
    Inconsistent,
    #[error("expected a Boolean query")]
    NotBoolean,
    #[error("unknown individual `{0}`")]
    UnknownIndividual(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Loop(#[from] LoopError),
}

/// Whether independent work items run on the thread pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Falls back to sequential execution without the `parallel` feature.
    Parallel,
}

impl Parallelism {
    fn enabled(self) -> bool {
        self == Parallelism::Parallel && crate::par::AVAILABLE
    }
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Cache searches, Loop relations and test sets per individual.
    pub memo: bool,
    pub parallelism: Parallelism,
    pub max_rewritings: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { memo: true, parallelism: Parallelism::Sequential, max_rewritings: RewriteOptions::default().max_queries }
    }
}

/// The end of an evaluated path: a named individual or anywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Ind(usize),
    /// Ends at any element, named or anonymous.
    Anon,
}

#[derive(Clone, Debug)]
enum Move {
    Role(Option<RoleId>),
    Concept(Option<ConceptId>),
    Nominal(Option<usize>),
    Test(usize),
}

/// States visited from one start pair, as `individual * width + local`.
#[derive(Debug)]
/// Nodes `individual * width + local state` visited by one search, kept
/// sparse so a search costs what it reaches rather than the ABox size.
struct Reach {
    automaton: usize,
    seen: HashSet<usize>,
    order: Vec<usize>,
}

type LoopRel = Arc<Vec<Vec<usize>>>;

/// Evaluates the automata of one reduced NNFA over one prepared KB.
#[derive(Debug)]
pub struct AtomEvaluator {
    kb: PreparedKb,
    nnfa: Arc<Nnfa>,
    loops: Arc<LoopTables>,
    opts: EvalOptions,
    local: Vec<usize>,
    moves: Vec<Vec<(Move, usize)>>,
    types: Vec<Conjunction>,
    descendant_states: Vec<Vec<StateId>>,
    reach_memo: Mutex<HashMap<(StateId, usize), Arc<Reach>>>,
    gamma_memo: Mutex<HashMap<(usize, usize), Arc<Vec<StateId>>>>,
    loop_memo: Mutex<HashMap<(usize, Conjunction, Vec<StateId>), LoopRel>>,
    max_depth: AtomicUsize,
}

impl AtomEvaluator {
    /// `kb` must know every name of `nnfa` and be consistent.
    pub fn new(kb: PreparedKb, nnfa: Arc<Nnfa>, loops: Arc<LoopTables>, opts: EvalOptions) -> Self {
        let vocab = &kb.sat.tbox.vocab;
        let mut local = vec![usize::MAX; nnfa.state_bound()];
        let mut moves = vec![Vec::new(); nnfa.state_bound()];
        for a in &nnfa.automata {
            for (k, &s) in a.states.iter().enumerate() {
                local[s as usize] = k;
            }
            for (s, l, t) in &a.transitions {
                let m = match l {
                    Label::Role(r) => Move::Role(vocab.lookup_role(r)),
                    Label::Concept(c) => Move::Concept(kb.sat.concept_id(c)),
                    Label::Nominal(i) => Move::Nominal(kb.model.ind_index(i)),
                    Label::Test(js) => {
                        assert_eq!(js.len(), 1, "the evaluator needs a reduced NNFA");
                        Move::Test(js[0])
                    }
                };
                moves[*s as usize].push((m, *t as usize));
            }
        }
        let types = (0..kb.model.num_individuals())
            .map(|i| conjunction(kb.model.type_of(i).ones().map(|c| c as ConceptId).filter(|&c| c != TOP)))
            .collect();
        let descendant_states = (0..nnfa.automata.len())
            .map(|i| nnfa.descendants(i).into_iter().flat_map(|j| nnfa.automata[j].states.clone()).collect())
            .collect();
        AtomEvaluator {
            kb,
            nnfa,
            loops,
            opts,
            local,
            moves,
            types,
            descendant_states,
            reach_memo: Mutex::new(HashMap::new()),
            gamma_memo: Mutex::new(HashMap::new()),
            loop_memo: Mutex::new(HashMap::new()),
            max_depth: AtomicUsize::new(0),
        }
    }

    pub fn kb(&self) -> &PreparedKb {
        &self.kb
    }

    pub fn nnfa(&self) -> &Arc<Nnfa> {
        &self.nnfa
    }

    pub fn loops(&self) -> &Arc<LoopTables> {
        &self.loops
    }

    fn num_inds(&self) -> usize {
        self.kb.model.num_individuals()
    }

    fn width(&self, i: usize) -> usize {
        self.nnfa.automata[i].states.len()
    }

    /// The longest shortest path found by any search so far.
    pub fn max_search_depth(&self) -> usize {
        self.max_depth.load(Ordering::Relaxed)
    }

    /// The step bound `|A| * |S_i| + 1` of automaton `i`.
    pub fn step_bound(&self, i: usize) -> usize {
        self.num_inds() * self.width(i) + 1
    }

    fn state_at(&self, i: usize, local: usize) -> StateId {
        self.nnfa.automata[i].states[local]
    }

    /// Test states of higher automata satisfied at individual `c`.
    fn gamma(&self, i: usize, c: usize) -> Arc<Vec<StateId>> {
        if self.opts.memo {
            if let Some(g) = self.gamma_memo.lock().expect("memo lock poisoned").get(&(i, c)) {
                return g.clone();
            }
        }
        let g: Vec<StateId> = self.descendant_states[i]
            .iter()
            .copied()
            .filter(|&u| {
                let j = self.nnfa.owner(u);
                self.accepts(u, &self.nnfa.automata[j].finals, c, Target::Anon)
            })
            .collect();
        let g = Arc::new(g);
        if self.opts.memo {
            self.gamma_memo.lock().expect("memo lock poisoned").insert((i, c), g.clone());
        }
        g
    }

    /// For every local state of automaton `i`, the local states reachable
    /// through a Loop at individual `c`.
    fn loop_rel(&self, i: usize, c: usize) -> LoopRel {
        let gamma = self.gamma(i, c);
        let key = (i, self.types[c].clone(), gamma.to_vec());
        if self.opts.memo {
            if let Some(r) = self.loop_memo.lock().expect("memo lock poisoned").get(&key) {
                return r.clone();
            }
        }
        let a = &self.nnfa.automata[i];
        let rel: Vec<Vec<usize>> = a
            .states
            .iter()
            .map(|&s| {
                (0..a.states.len())
                    .filter(|&k| {
                        let s2 = a.states[k];
                        s2 != s && self.loops.in_loop(&key.1, s, s2, &key.2)
                    })
                    .collect()
            })
            .collect();
        let rel = Arc::new(rel);
        if self.opts.memo {
            self.loop_memo.lock().expect("memo lock poisoned").insert(key, rel.clone());
        }
        rel
    }

    fn reach(&self, start: StateId, a: usize) -> Arc<Reach> {
        if self.opts.memo {
            if let Some(r) = self.reach_memo.lock().expect("memo lock poisoned").get(&(start, a)) {
                return r.clone();
            }
        }
        let r = Arc::new(self.search(start, a));
        if self.opts.memo {
            self.reach_memo.lock().expect("memo lock poisoned").insert((start, a), r.clone());
        }
        r
    }

    fn search(&self, start: StateId, a: usize) -> Reach {
        let i = self.nnfa.owner(start);
        let w = self.width(i);
        let model = &self.kb.model;
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        let s0 = self.local[start as usize];
        seen.insert(a * w + s0);
        order.push(a * w + s0);
        queue.push_back((a, s0, 0usize));
        let mut deepest = 0;
        while let Some((c, s, depth)) = queue.pop_front() {
            deepest = deepest.max(depth);
            let mut push = |d: usize, t: usize| {
                if seen.insert(d * w + t) {
                    order.push(d * w + t);
                    queue.push_back((d, t, depth + 1));
                }
            };
            for (m, t) in &self.moves[self.state_at(i, s) as usize] {
                let t = self.local[*t];
                match m {
                    Move::Role(Some(r)) => {
                        let edges = model.edges_from(c);
                        let lo = edges.partition_point(|(x, _)| x < r);
                        for &(x, d) in &edges[lo..] {
                            if x != *r {
                                break;
                            }
                            push(d, t);
                        }
                    }
                    Move::Concept(Some(b)) => {
                        if model.has_concept(c, *b) {
                            push(c, t);
                        }
                    }
                    Move::Nominal(Some(o)) => {
                        if *o == c {
                            push(c, t);
                        }
                    }
                    Move::Test(j) => {
                        let aj = &self.nnfa.automata[*j];
                        if self.accepts(aj.initial, &aj.finals, c, Target::Anon) {
                            push(c, t);
                        }
                    }
                    Move::Role(None) | Move::Concept(None) | Move::Nominal(None) => {}
                }
            }
            for &t in &self.loop_rel(i, c)[s] {
                push(c, t);
            }
        }
        self.max_depth.fetch_max(deepest, Ordering::Relaxed);
        Reach { automaton: i, seen, order }
    }

    /// Whether a run from `start` at individual `a` reaches a state of
    /// `finals` at `target`.
    pub fn accepts(&self, start: StateId, finals: &[StateId], a: usize, target: Target) -> bool {
        let r = self.reach(start, a);
        let w = self.width(r.automaton);
        let finals_local: Vec<usize> = finals.iter().map(|&f| self.local[f as usize]).collect();
        match target {
            Target::Ind(b) => finals_local.iter().any(|&f| r.seen.contains(&(b * w + f))),
            Target::Anon => {
                if r.order.iter().any(|node| finals_local.contains(&(node % w))) {
                    return true;
                }
                r.order.iter().any(|&node| {
                    let (d, s) = (node / w, node % w);
                    let gamma = self.gamma(r.automaton, d);
                    self.loops.in_floop(&self.types[d], self.state_at(r.automaton, s), finals, &gamma)
                })
            }
        }
    }

    /// Individuals where a run of `part` from `a` ends in a final state.
    pub fn targets(&self, part: &PartRef, a: usize) -> Vec<usize> {
        let r = self.reach(part.start, a);
        let w = self.width(r.automaton);
        let finals_local: Vec<usize> = part.finals.iter().map(|&f| self.local[f as usize]).collect();
        let mut out: Vec<usize> =
            r.order.iter().filter(|&&node| finals_local.contains(&(node % w))).map(|&node| node / w).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn eval_atom(&self, part: &PartRef, a: usize, target: Target) -> bool {
        self.accepts(part.start, &part.finals, a, target)
    }
}

impl Relations for AtomEvaluator {
    fn num_objects(&self) -> usize {
        self.num_inds()
    }

    fn individual(&self, name: &str) -> Option<usize> {
        self.kb.model.ind_index(name)
    }

    fn concept(&self, name: &str, o: usize) -> bool {
        match self.kb.sat.concept_id(name) {
            Some(c) => self.kb.model.has_concept(o, c),
            None => name == "top",
        }
    }

    fn test(&self, part: &PartRef, o: usize) -> bool {
        self.eval_atom(part, o, Target::Anon)
    }

    fn targets(&self, part: &PartRef, o: usize) -> Vec<usize> {
        AtomEvaluator::targets(self, part, o)
    }

    fn holds(&self, part: &PartRef, o: usize, x: usize) -> bool {
        self.eval_atom(part, o, Target::Ind(x))
    }
}

/// Removes nominal tests and multi-index tests.
fn normal_query(q: &Cn2rpq) -> (Cn2rpq, Vec<AboxAssertion>) {
    let (mut q, ext) = eliminate_nominal_tests(q);
    if !q.nnfa.is_reduced() {
        q.nnfa = Arc::new(reduce_nnfa(&q.nnfa));
    }
    (q, ext)
}

fn prepare_for(q: &Cn2rpq, tbox: &[TBoxAxiom], abox: &[AboxAssertion]) -> PreparedKb {
    let concepts = q.concept_names();
    let roles = q.role_names();
    let inds = q.individuals();
    prepare(
        tbox,
        abox,
        concepts.iter().map(String::as_str),
        roles.iter().map(String::as_str),
        inds.iter().map(String::as_str),
    )
}

fn all_tuples(inds: &[String], k: usize) -> BTreeSet<Vec<String>> {
    let mut out: BTreeSet<Vec<String>> = BTreeSet::from([Vec::new()]);
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| inds.iter().map(move |a| [t.clone(), vec![a.clone()]].concat())).collect();
    }
    out
}

/// A query normalized and rewritten once for a fixed TBox, answerable
/// over any ABox.
#[derive(Debug)]
pub struct PreparedQuery {
    query: Cn2rpq,
    ext: Vec<AboxAssertion>,
    tbox: Vec<TBoxAxiom>,
    rewritten: Vec<Cn2rpq>,
    opts: EvalOptions,
}

impl PreparedQuery {
    pub fn new(q: &Cn2rpq, tbox: &[TBoxAxiom], opts: EvalOptions) -> Result<Self, EvalError> {
        let (query, ext) = normal_query(q);
        let kb = prepare_for(&query, tbox, &ext);
        let rewritten = Self::rewrite_over(&query, &kb, &opts)?;
        Ok(PreparedQuery { query, ext, tbox: tbox.to_vec(), rewritten, opts })
    }

    fn rewrite_over(q: &Cn2rpq, kb: &PreparedKb, opts: &EvalOptions) -> Result<Vec<Cn2rpq>, EvalError> {
        let loops = LoopTables::new(q.nnfa.clone(), kb.sat.tbox.clone())?;
        let ro = RewriteOptions { max_queries: opts.max_rewritings, parallel: opts.parallelism.enabled() };
        Ok(rewrite_with(q, &kb.sat, &loops, &ro)?)
    }

    /// The rewritten set, sorted by canonical key.
    pub fn rewritten(&self) -> &[Cn2rpq] {
        &self.rewritten
    }

    /// The query after nominal elimination and reduction.
    pub fn query(&self) -> &Cn2rpq {
        &self.query
    }

    /// Certain answers over `(T, abox)`; an inconsistent KB yields every
    /// tuple over the ABox individuals.
    pub fn answers(&self, abox: &[AboxAssertion]) -> Result<BTreeSet<Vec<String>>, EvalError> {
        let mut full = abox.to_vec();
        full.extend(self.ext.iter().cloned());
        let kb = prepare_for(&self.query, &self.tbox, &full);
        let abox_inds: BTreeSet<String> =
            KnowledgeBase::new(Vec::new(), abox.to_vec()).individuals().into_iter().collect();
        if !kb.model.is_consistent() {
            let inds: Vec<String> = abox_inds.into_iter().collect();
            return Ok(all_tuples(&inds, self.query.answer_vars.len()));
        }
        // complex ABox assertions add TBox axioms, so the stored rewriting
        // may miss their witnesses
        let own;
        let rewritten = if abox_is_atomic(abox) {
            &self.rewritten
        } else {
            own = Self::rewrite_over(&self.query, &kb, &self.opts)?;
            &own
        };
        let loops = Arc::new(LoopTables::new(self.query.nnfa.clone(), kb.sat.tbox.clone())?);
        let ev = AtomEvaluator::new(kb, self.query.nnfa.clone(), loops, self.opts.clone());
        let parallel = self.opts.parallelism.enabled();
        let tuples: Vec<Vec<usize>> = if parallel && rewritten.len() > 1 {
            crate::par::flat_map(rewritten.iter().collect(), |q| join(&ev, q, false).into_iter().collect())
        } else {
            rewritten.iter().flat_map(|q| join(&ev, q, parallel)).collect()
        };
        let model = &ev.kb().model;
        Ok(tuples
            .into_iter()
            .map(|t| t.into_iter().map(|o| model.individual(o).to_owned()).collect::<Vec<String>>())
            .filter(|t| t.iter().all(|a| abox_inds.contains(a)))
            .collect())
    }
}

fn abox_is_atomic(abox: &[AboxAssertion]) -> bool {
    let (t, _) = normalize(&[], abox);
    t.axioms.is_empty()
}

/// Certain answers of `q` over `kb` with explicit options.
pub fn certain_answers_with(
    q: &Cn2rpq,
    kb: &KnowledgeBase,
    opts: &EvalOptions,
) -> Result<BTreeSet<Vec<String>>, EvalError> {
    PreparedQuery::new(q, &kb.tbox, opts.clone())?.answers(&kb.abox)
}

/// Tuples of ABox individuals that are answers in every model of `kb`.
pub fn certain_answers(q: &Cn2rpq, kb: &KnowledgeBase) -> Result<BTreeSet<Vec<String>>, EvalError> {
    certain_answers_with(q, kb, &EvalOptions::default())
}

/// Whether `kb` entails the Boolean query `q`; inconsistent KBs entail
/// everything.
pub fn eval_query(q: &Cn2rpq, kb: &KnowledgeBase) -> Result<bool, EvalError> {
    if !q.is_boolean() {
        return Err(EvalError::NotBoolean);
    }
    let (query, ext) = normal_query(q);
    let mut abox = kb.abox.clone();
    abox.extend(ext);
    let prepared = prepare_for(&query, &kb.tbox, &abox);
    if !prepared.model.is_consistent() {
        return Ok(true);
    }
    Ok(!certain_answers(q, kb)?.is_empty())
}

/// Evaluates one atom from individual `a` to `target` (`None` is anon).
pub fn eval_atom(part: &NnfaPart, kb: &KnowledgeBase, a: &str, target: Option<&str>) -> Result<bool, EvalError> {
    let q = Cn2rpq { answer_vars: Vec::new(), atoms: Vec::new(), nnfa: part.nnfa.clone() };
    let (query, ext) = normal_query(&q);
    let mut abox = kb.abox.clone();
    abox.extend(ext);
    let concepts = query.concept_names();
    let roles = query.role_names();
    let mut inds = query.individuals();
    inds.insert(a.to_owned());
    inds.extend(target.map(str::to_owned));
    let prepared = prepare(
        &kb.tbox,
        &abox,
        concepts.iter().map(String::as_str),
        roles.iter().map(String::as_str),
        inds.iter().map(String::as_str),
    );
    if !prepared.model.is_consistent() {
        return Err(EvalError::Inconsistent);
    }
    let loops = Arc::new(LoopTables::new(query.nnfa.clone(), prepared.sat.tbox.clone())?);
    let ia = prepared.model.ind_index(a).ok_or_else(|| EvalError::UnknownIndividual(a.to_owned()))?;
    let t = match target {
        Some(b) => Target::Ind(prepared.model.ind_index(b).ok_or_else(|| EvalError::UnknownIndividual(b.to_owned()))?),
        None => Target::Anon,
    };
    let ev = AtomEvaluator::new(prepared, query.nnfa.clone(), loops, EvalOptions::default());
    Ok(ev.eval_atom(&part.part, ia, t))
}
