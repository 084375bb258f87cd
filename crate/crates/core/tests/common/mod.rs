// SPDX-License-Identifier: Apache-2.0
//! Reference implementations used as oracles by the integration tests.
//! They share no code with the engines under test beyond the data types.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use nrpq::kb::RoleExpr;
use nrpq::query::{Label, Nnfa, Nre, PartRef, StateId, Symbol};
use nrpq::reasoner::FiniteInterpretation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Pairs = BTreeSet<(usize, usize)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn has_concept(i: &FiniteInterpretation, c: &str, o: usize) -> bool {
    c == "top" || i.has_concept(c, o)
}

fn identity_on(n: usize, keep: impl Fn(usize) -> bool) -> Pairs {
    (0..n).filter(|&o| keep(o)).map(|o| (o, o)).collect()
}

fn compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(_, z) in b.range((y, 0)..=(y, usize::MAX)) {
            out.insert((x, z));
        }
    }
    out
}

/// Structural semantics of an NRE: composition, union, reflexive
/// transitive closure and the domain test.
pub fn nre_pairs(e: &Nre, i: &FiniteInterpretation) -> Pairs {
    let n = i.len();
    match e {
        Nre::Sym(Symbol::Role(r)) => i.role_ext(r),
        Nre::Sym(Symbol::Concept(c)) => identity_on(n, |o| has_concept(i, c, o)),
        Nre::Sym(Symbol::Nominal(a)) => i.object(a).map(|o| (o, o)).into_iter().collect(),
        Nre::Concat(a, b) => compose(&nre_pairs(a, i), &nre_pairs(b, i)),
        Nre::Union(a, b) => {
            let mut p = nre_pairs(a, i);
            p.extend(nre_pairs(b, i));
            p
        }
        Nre::Star(a) => {
            let step = nre_pairs(a, i);
            let mut closure = identity_on(n, |_| true);
            loop {
                let next: Pairs = closure.union(&compose(&closure, &step)).copied().collect();
                if next.len() == closure.len() {
                    return closure;
                }
                closure = next;
            }
        }
        Nre::Test(a) => {
            let dom: BTreeSet<usize> = nre_pairs(a, i).into_iter().map(|(x, _)| x).collect();
            identity_on(n, |o| dom.contains(&o))
        }
    }
}

/// Runs of an NNFA over a finite interpretation, following the run-tree
/// definition: a test transition spawns a run of the tested automaton at
/// the same object. Runs of tested automata may also stop at `root` in a
/// state of `gamma`.
pub struct RunSearch<'a> {
    nnfa: &'a Nnfa,
    interp: &'a FiniteInterpretation,
    root: usize,
    gamma: BTreeSet<StateId>,
    tests: HashMap<(usize, usize), bool>,
}

impl<'a> RunSearch<'a> {
    pub fn new(nnfa: &'a Nnfa, interp: &'a FiniteInterpretation, root: usize, gamma: &[StateId]) -> Self {
        RunSearch { nnfa, interp, root, gamma: gamma.iter().copied().collect(), tests: HashMap::new() }
    }

    fn test(&mut self, j: usize, o: usize) -> bool {
        if let Some(&v) = self.tests.get(&(j, o)) {
            return v;
        }
        // A pending entry guards against re-entry; tests only reference
        // higher indices, so this never happens for valid NNFAs.
        self.tests.insert((j, o), false);
        let a = &self.nnfa.automata[j];
        let finals: BTreeSet<StateId> = a.finals.iter().copied().collect();
        let start = a.initial;
        let reached = self.reach(start, o);
        let v = reached.iter().any(|&(x, s)| finals.contains(&s) || (x == self.root && self.gamma.contains(&s)));
        self.tests.insert((j, o), v);
        v
    }

    fn reach(&mut self, start: StateId, o: usize) -> BTreeSet<(usize, StateId)> {
        let j = self.nnfa.owner(start);
        let transitions = self.nnfa.automata[j].transitions.clone();
        let mut seen = BTreeSet::from([(o, start)]);
        let mut queue = VecDeque::from([(o, start)]);
        while let Some((x, s)) = queue.pop_front() {
            for (p, l, t) in &transitions {
                if *p != s {
                    continue;
                }
                let next: Vec<usize> = match l {
                    Label::Role(r) => (0..self.interp.len()).filter(|&y| self.interp.has_role(r, x, y)).collect(),
                    Label::Concept(c) => {
                        if has_concept(self.interp, c, x) { vec![x] } else { vec![] }
                    }
                    Label::Nominal(a) => {
                        if self.interp.object(a) == Some(x) { vec![x] } else { vec![] }
                    }
                    Label::Test(js) => {
                        let js = js.clone();
                        if js.iter().all(|&k| self.test(k, x)) { vec![x] } else { vec![] }
                    }
                };
                for y in next {
                    if seen.insert((y, *t)) {
                        queue.push_back((y, *t));
                    }
                }
            }
        }
        seen
    }

    /// Objects at which a run of `part` from `o` ends in one of its finals.
    pub fn targets(&mut self, part: &PartRef, o: usize) -> BTreeSet<usize> {
        let finals: BTreeSet<StateId> = part.finals.iter().copied().collect();
        self.reach(part.start, o).into_iter().filter(|(_, s)| finals.contains(s)).map(|(x, _)| x).collect()
    }

    pub fn pairs(&mut self, part: &PartRef) -> Pairs {
        let mut out = Pairs::new();
        for o in 0..self.interp.len() {
            for x in self.targets(part, o) {
                out.insert((o, x));
            }
        }
        out
    }
}

pub fn pairs_by_runs(nnfa: &Nnfa, part: &PartRef, i: &FiniteInterpretation) -> Pairs {
    RunSearch::new(nnfa, i, usize::MAX, &[]).pairs(part)
}

pub fn role(name: &str) -> RoleExpr {
    RoleExpr::new(name)
}

/// The facts of an interpretation as an ABox; every object gets a `top`
/// assertion so that isolated objects are individuals too.
pub fn to_abox(i: &FiniteInterpretation) -> Vec<nrpq::kb::AboxAssertion> {
    use nrpq::kb::{AboxAssertion, Concept};
    let mut out = Vec::new();
    for o in 0..i.len() {
        out.push(AboxAssertion::ConceptAssertion(Concept::Top, i.object_name(o).to_owned()));
    }
    for c in i.concept_names() {
        for o in i.concept_ext(c) {
            out.push(AboxAssertion::concept(c, i.object_name(o)));
        }
    }
    for r in i.role_names() {
        for (a, b) in i.role_ext(&role(r)) {
            out.push(AboxAssertion::role(r, i.object_name(a), i.object_name(b)));
        }
    }
    out
}

/// Answer tuples restricted to the given individuals.
pub fn restrict(
    answers: BTreeSet<Vec<String>>,
    inds: &BTreeSet<String>,
) -> BTreeSet<Vec<String>> {
    answers.into_iter().filter(|t| t.iter().all(|a| inds.contains(a))).collect()
}

/// Whether `o` is an instance of `c` in `i`.
pub fn holds(c: &nrpq::kb::Concept, i: &FiniteInterpretation, o: usize) -> bool {
    use nrpq::kb::Concept;
    match c {
        Concept::Top => true,
        Concept::Bot => false,
        Concept::Name(n) => i.has_concept(n, o),
        Concept::Exists(r, f) => (0..i.len()).any(|p| i.has_role(r, o, p) && holds(f, i, p)),
        Concept::And(a, b) => holds(a, i, o) && holds(b, i, o),
    }
}

pub fn is_model(tbox: &[nrpq::kb::TBoxAxiom], i: &FiniteInterpretation) -> bool {
    use nrpq::kb::TBoxAxiom;
    let n = i.len();
    tbox.iter().all(|ax| match ax {
        TBoxAxiom::ConceptInclusion(c, d) => (0..n).all(|o| !holds(c, i, o) || holds(d, i, o)),
        TBoxAxiom::RoleInclusion(r, s) => i.role_ext(r).iter().all(|&(o, p)| i.has_role(s, o, p)),
        TBoxAxiom::DisjointRoles(r, s) => i.role_ext(r).iter().all(|&(o, p)| !i.has_role(s, o, p)),
    })
}

/// The interpretation over `n` objects encoded by the bits of `mask`:
/// concept memberships first, then role edges.
pub fn interpretation_from_bits(concepts: &[String], roles: &[String], n: usize, mask: u64) -> FiniteInterpretation {
    let mut i = FiniteInterpretation::new();
    let objs: Vec<usize> = (0..n).map(|k| i.add_object(&format!("o{k}"))).collect();
    let mut bit = 0;
    let mut next = || {
        let b = mask >> bit & 1 == 1;
        bit += 1;
        b
    };
    for c in concepts {
        for &o in &objs {
            if next() {
                i.add_concept(c, o);
            }
        }
    }
    for r in roles {
        for &o in &objs {
            for &p in &objs {
                if next() {
                    i.add_role(r, o, p);
                }
            }
        }
    }
    i
}

/// Models of `tbox`: every one over at most two objects, then those among
/// `samples` random three-object interpretations.
pub fn small_models(
    tbox: &[nrpq::kb::TBoxAxiom],
    concepts: &[String],
    roles: &[String],
    rng: &mut impl rand::Rng,
    samples: usize,
) -> Vec<FiniteInterpretation> {
    let mut out = Vec::new();
    for n in 1..=2 {
        let bits = concepts.len() * n + roles.len() * n * n;
        for mask in 0..1u64 << bits {
            let i = interpretation_from_bits(concepts, roles, n, mask);
            if is_model(tbox, &i) {
                out.push(i);
            }
        }
    }
    let bits = concepts.len() * 3 + roles.len() * 9;
    for _ in 0..samples {
        let i = interpretation_from_bits(concepts, roles, 3, rng.gen::<u64>() & ((1 << bits) - 1));
        if is_model(tbox, &i) {
            out.push(i);
        }
    }
    out
}

/// Whether some model refutes `c <= d`.
pub fn refuted(models: &[FiniteInterpretation], c: &nrpq::kb::Concept, d: &nrpq::kb::Concept) -> bool {
    models.iter().any(|i| (0..i.len()).any(|o| holds(c, i, o) && !holds(d, i, o)))
}

/// `kb` plus a `top` assertion for every individual the query names, so
/// that materializations interpret them as every model does.
pub fn with_query_individuals(kb: &nrpq::kb::KnowledgeBase, q: &nrpq::query::Cn2rpq) -> nrpq::kb::KnowledgeBase {
    use nrpq::kb::{AboxAssertion, Concept};
    let mut out = kb.clone();
    out.abox.extend(q.individuals().into_iter().map(|a| AboxAssertion::ConceptAssertion(Concept::Top, a)));
    out
}
