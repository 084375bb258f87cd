// SPDX-License-Identifier: Apache-2.0
//! Seeded random instances for differential testing and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kb::{AboxAssertion, Concept, KnowledgeBase, RoleExpr, TBoxAxiom};
use crate::query::{compile_nre, reduce_nnfa, Atom, Cn2rpq, Nre, NnfaBuilder, Term};
use crate::reasoner::{materialize_canonical, prepare, FiniteInterpretation};

/// Vocabulary and size bounds for generated instances.
#[derive(Clone, Debug)]
pub struct Signature {
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
    pub individuals: Vec<String>,
}

impl Signature {
    /// `A, B, ...`, `r, s, ...` and `a, b, ...` with the given counts.
    pub fn small(concepts: usize, roles: usize, individuals: usize) -> Self {
        let letters = |base: u8, n: usize| (0..n).map(|i| ((base + i as u8) as char).to_string()).collect();
        Signature { concepts: letters(b'A', concepts), roles: letters(b'r', roles), individuals: letters(b'a', individuals) }
    }

    fn concept(&self, rng: &mut impl Rng) -> String {
        self.concepts.choose(rng).unwrap().clone()
    }

    fn role(&self, rng: &mut impl Rng, inverses: bool) -> RoleExpr {
        let r = RoleExpr::new(self.roles.choose(rng).unwrap().clone());
        if inverses && rng.gen_bool(0.4) {
            r.inverse()
        } else {
            r
        }
    }
}

/// One axiom in normal form; `bottom` allows `A <= bot` and disjoint roles.
pub fn random_normal_axiom(rng: &mut impl Rng, sig: &Signature, inverses: bool, bottom: bool) -> TBoxAxiom {
    let name = |rng: &mut _| Concept::name(sig.concept(rng));
    loop {
        let ax = match rng.gen_range(0..100) {
            0..=29 => TBoxAxiom::sub(name(rng), Concept::exists(sig.role(rng, inverses), name(rng))),
            30..=54 => TBoxAxiom::sub(Concept::exists(sig.role(rng, inverses), name(rng)), name(rng)),
            55..=74 => TBoxAxiom::sub(Concept::and(name(rng), name(rng)), name(rng)),
            75..=79 => TBoxAxiom::sub(Concept::Top, name(rng)),
            80..=87 if bottom => TBoxAxiom::sub(name(rng), Concept::Bot),
            88..=94 => TBoxAxiom::RoleInclusion(sig.role(rng, inverses), sig.role(rng, inverses)),
            95..=99 if bottom => TBoxAxiom::DisjointRoles(sig.role(rng, inverses), sig.role(rng, inverses)),
            _ => continue,
        };
        return ax;
    }
}

pub fn random_tbox(rng: &mut impl Rng, sig: &Signature, max_axioms: usize, inverses: bool, bottom: bool) -> Vec<TBoxAxiom> {
    let n = rng.gen_range(0..=max_axioms);
    (0..n).map(|_| random_normal_axiom(rng, sig, inverses, bottom)).collect()
}

/// Atomic assertions over the signature's individuals.
pub fn random_abox(rng: &mut impl Rng, sig: &Signature, max_assertions: usize) -> Vec<AboxAssertion> {
    let n = rng.gen_range(0..=max_assertions);
    let ind = |rng: &mut _| sig.individuals.choose(rng).unwrap().clone();
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.4) {
                AboxAssertion::concept(sig.concept(rng), ind(rng))
            } else {
                AboxAssertion::RoleAssertion(RoleExpr::new(sig.roles.choose(rng).unwrap().clone()), ind(rng), ind(rng))
            }
        })
        .collect()
}

/// A KB that the reasoner finds consistent, retrying until one is drawn.
pub fn random_consistent_kb(rng: &mut impl Rng, sig: &Signature, max_axioms: usize, max_assertions: usize) -> KnowledgeBase {
    loop {
        let kb = KnowledgeBase::new(random_tbox(rng, sig, max_axioms, true, true), random_abox(rng, sig, max_assertions));
        if prepare(&kb.tbox, &kb.abox, [], [], []).model.is_consistent() {
            return kb;
        }
    }
}

/// An NRE with at most `max_ops` operators and nesting depth at most
/// `max_depth`; concept tests use the signature's names and `top`.
pub fn random_nre(rng: &mut impl Rng, sig: &Signature, max_ops: usize, max_depth: usize) -> Nre {
    let ops = rng.gen_range(0..=max_ops);
    nre_with(rng, sig, ops, max_depth)
}

fn nre_with(rng: &mut impl Rng, sig: &Signature, ops: usize, depth: usize) -> Nre {
    if ops == 0 {
        return if rng.gen_bool(0.7) {
            let r = sig.role(rng, true);
            if r.inverted { Nre::inv(&r.name) } else { Nre::role(&r.name) }
        } else if rng.gen_bool(0.85) {
            Nre::concept(&sig.concept(rng))
        } else {
            Nre::epsilon()
        };
    }
    let kinds: &[u8] = if depth > 0 { &[0, 1, 2, 3] } else { &[0, 1, 2] };
    match kinds.choose(rng).unwrap() {
        0 | 1 => {
            let left = rng.gen_range(0..ops);
            let a = nre_with(rng, sig, left, depth);
            let b = nre_with(rng, sig, ops - 1 - left, depth);
            if rng.gen_bool(0.5) { Nre::concat(a, b) } else { Nre::union(a, b) }
        }
        2 => Nre::star(nre_with(rng, sig, ops - 1, depth)),
        _ => Nre::test(nre_with(rng, sig, ops - 1, depth - 1)),
    }
}

/// A closed-world graph with each fact present with probability `density`.
pub fn random_interpretation(rng: &mut impl Rng, sig: &Signature, objects: usize, density: f64) -> FiniteInterpretation {
    let mut i = FiniteInterpretation::new();
    let objs: Vec<usize> = (0..objects).map(|k| i.add_object(&format!("o{k}"))).collect();
    for c in &sig.concepts {
        for &o in &objs {
            if rng.gen_bool(density) {
                i.add_concept(c, o);
            }
        }
    }
    for r in &sig.roles {
        for &o in &objs {
            for &p in &objs {
                if rng.gen_bool(density / 2.0) {
                    i.add_role(r, o, p);
                }
            }
        }
    }
    i
}

/// `q(x, y) <- E(x, y)` for a random `E` whose reduced NNFA has at most
/// `max_states` states.
pub fn random_n2rpq(rng: &mut impl Rng, sig: &Signature, max_ops: usize, max_depth: usize, max_states: usize) -> Cn2rpq {
    loop {
        let e = random_nre(rng, sig, max_ops, max_depth);
        let part = compile_nre(&e);
        let nnfa = reduce_nnfa(&part.nnfa);
        if nnfa.num_states() <= max_states {
            return Cn2rpq {
                answer_vars: vec!["x".into(), "y".into()],
                atoms: vec![Atom::Role(part.part, Term::var("x"), Term::var("y"))],
                nnfa: std::sync::Arc::new(nnfa),
            };
        }
    }
}

/// A conjunctive query with up to `max_atoms` atoms over variables
/// `x, y, z` (and occasionally an individual); answer variables are a
/// random subset of those used.
pub fn random_cn2rpq(rng: &mut impl Rng, sig: &Signature, max_atoms: usize, max_ops: usize, max_depth: usize) -> Cn2rpq {
    fn term(rng: &mut impl Rng, sig: &Signature) -> Term {
        if !sig.individuals.is_empty() && rng.gen_bool(0.1) {
            Term::ind(sig.individuals.choose(rng).unwrap())
        } else {
            Term::var(["x", "y", "z"].choose(rng).unwrap())
        }
    }
    let mut b = NnfaBuilder::new();
    let mut atoms = Vec::new();
    for _ in 0..rng.gen_range(1..=max_atoms) {
        let t = term(rng, sig);
        atoms.push(match rng.gen_range(0..10) {
            0 => Atom::Concept(sig.concept(rng), t),
            1 => Atom::Test(b.add_nre(&random_nre(rng, sig, max_ops, max_depth)), t),
            _ => {
                let e = random_nre(rng, sig, max_ops, max_depth);
                Atom::Role(b.add_nre(&e), t, term(rng, sig))
            }
        });
    }
    let q = Cn2rpq { answer_vars: Vec::new(), atoms, nnfa: std::sync::Arc::new(b.finish()) };
    let answer_vars = q.variables().into_iter().filter(|_| rng.gen_bool(0.6)).collect();
    Cn2rpq { answer_vars, ..q }
}

/// The smallest depth at which materializing `kb` stops growing, if it
/// is at most `cap`; `None` for KBs with unbounded anonymous parts.
pub fn dependency_depth(kb: &KnowledgeBase, cap: usize) -> Option<usize> {
    let prepared = prepare(&kb.tbox, &kb.abox, [], [], []);
    if !prepared.model.is_consistent() {
        return None;
    }
    let mut prev = materialize_canonical(&prepared, 0).ok()?.len();
    for d in 1..=cap + 1 {
        let size = materialize_canonical(&prepared, d).ok()?.len();
        if size == prev {
            return Some(d - 1);
        }
        prev = size;
    }
    None
}
