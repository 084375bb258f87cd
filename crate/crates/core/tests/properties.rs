// SPDX-License-Identifier: Apache-2.0
//! Invariants checked over generated inputs.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{nre_pairs, refuted, restrict, rng, small_models, with_query_individuals, RunSearch};
use nrpq::eval::{
    answers_on_interpretation, certain_answers, certain_answers_with, eval_atom, AtomEvaluator, EvalOptions,
    GraphEvaluator, Target,
};
use nrpq::kb::{normalize, parse_kb, AboxAssertion, Concept, KnowledgeBase, RoleExpr, TBoxAxiom};
use nrpq::loops::LoopTables;
use nrpq::query::{compile_nre, level_of, reduce_nnfa, Atom, Cn2rpq, Label, PartRef, StateId, Term};
use nrpq::random::{
    dependency_depth, random_cn2rpq, random_consistent_kb, random_interpretation, random_n2rpq, random_nre,
    random_tbox, Signature,
};
use nrpq::reasoner::{materialize_canonical, prepare};
use nrpq::reductions::horn::{gen_horn_instance, horn_entails, random_horn_theory};
use nrpq::reductions::{answer_via_reduction, translate_cn2rpq};
use nrpq::rewrite::{canonical_query_form, rewrite};
use proptest::prelude::*;
use rand::seq::SliceRandom;

const NAMES: [&str; 3] = ["A", "B", "C"];
const ROLES: [&str; 2] = ["r", "s"];

fn role() -> impl Strategy<Value = RoleExpr> {
    (prop::sample::select(&ROLES[..]), any::<bool>())
        .prop_map(|(r, inv)| if inv { RoleExpr::inv(r) } else { RoleExpr::new(r) })
}

fn concept() -> impl Strategy<Value = Concept> {
    let leaf = prop_oneof![
        1 => Just(Concept::Top),
        4 => prop::sample::select(&NAMES[..]).prop_map(Concept::name),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (role(), inner.clone()).prop_map(|(r, c)| Concept::exists(r, c)),
            (inner.clone(), inner).prop_map(|(a, b)| Concept::and(a, b)),
        ]
    })
}

fn axiom() -> impl Strategy<Value = TBoxAxiom> {
    prop_oneof![
        6 => (concept(), concept()).prop_map(|(c, d)| TBoxAxiom::sub(c, d)),
        1 => concept().prop_map(|c| TBoxAxiom::sub(c, Concept::Bot)),
        1 => (role(), role()).prop_map(|(r, s)| TBoxAxiom::RoleInclusion(r, s)),
        1 => (role(), role()).prop_map(|(r, s)| TBoxAxiom::DisjointRoles(r, s)),
    ]
}

fn assertion() -> impl Strategy<Value = AboxAssertion> {
    let ind = || prop::sample::select(&["a", "b"][..]);
    prop_oneof![
        (concept(), ind()).prop_map(|(c, a)| AboxAssertion::ConceptAssertion(c, a.to_owned())),
        (prop::sample::select(&ROLES[..]), ind(), ind()).prop_map(|(r, a, b)| AboxAssertion::role(r, a, b)),
    ]
}

fn kb() -> impl Strategy<Value = KnowledgeBase> {
    (prop::collection::vec(axiom(), 0..6), prop::collection::vec(assertion(), 0..6))
        .prop_map(|(t, a)| KnowledgeBase::new(t, a))
}

fn concept_occurrences(ax: &TBoxAxiom) -> usize {
    match ax {
        TBoxAxiom::ConceptInclusion(c, d) => c.size() + d.size(),
        // no concepts, two role occurrences
        TBoxAxiom::RoleInclusion(..) | TBoxAxiom::DisjointRoles(..) => 2,
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kb_print_parse_round_trip(kb in kb()) {
        let first = parse_kb(&kb.to_string()).expect("printed KB parses");
        let second = parse_kb(&first.to_string()).expect("reprinted KB parses");
        prop_assert_eq!(second, first);
    }

    #[test]
    fn normalized_axiom_count_is_bounded(tbox in prop::collection::vec(axiom(), 0..8)) {
        let (t, _) = normalize(&tbox, &[]);
        let occurrences: usize = tbox.iter().map(concept_occurrences).sum();
        prop_assert!(t.axioms.len() <= 4 * occurrences, "{} axioms from {} occurrences", t.axioms.len(), occurrences);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Saturation over the normalized TBox never claims a subsumption that a
    /// small model of the original TBox refutes.
    #[test]
    fn saturation_sound_against_small_models(tbox in prop::collection::vec(axiom(), 0..4), seed in any::<u64>()) {
        let concepts = strings(&NAMES);
        let roles = strings(&ROLES);
        let models = small_models(&tbox, &concepts, &roles, &mut rng(seed), 200);
        let kb = prepare(&tbox, &[], NAMES, ROLES, []);
        let mut unresolved = 0;
        for x in NAMES {
            for y in NAMES {
                let entailed = kb.sat.entails_subsumption(&[kb.sat.concept_id(x).unwrap()], &[kb.sat.concept_id(y).unwrap()]);
                let refutes = refuted(&models, &Concept::name(x), &Concept::name(y));
                prop_assert!(!(entailed && refutes), "{x} <= {y} claimed but refuted");
                unresolved += usize::from(!entailed && !refutes);
            }
        }
        if unresolved > 0 {
            // Horn logics need not have small countermodels.
            eprintln!("{unresolved} non-entailments without a small countermodel");
        }
    }

    #[test]
    fn adding_axioms_keeps_entailments(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 2);
        let base = random_tbox(&mut r, &sig, 6, true, true);
        let mut more = base.clone();
        more.extend(random_tbox(&mut r, &sig, 3, true, true));
        let abox = nrpq::random::random_abox(&mut r, &sig, 4);
        let small = prepare(&base, &abox, NAMES, ROLES, ["a", "b"]);
        let large = prepare(&more, &abox, NAMES, ROLES, ["a", "b"]);
        prop_assert!(small.model.is_consistent() || !large.model.is_consistent());
        for x in NAMES {
            for y in NAMES {
                let id = |k: &nrpq::reasoner::PreparedKb, n: &str| k.sat.concept_id(n).unwrap();
                if small.sat.entails_subsumption(&[id(&small, x)], &[id(&small, y)]) {
                    prop_assert!(large.sat.entails_subsumption(&[id(&large, x)], &[id(&large, y)]));
                }
            }
            for a in ["a", "b"] {
                if small.model.entails_assertion(x, a) {
                    prop_assert!(large.model.entails_assertion(x, a));
                }
            }
        }
    }

    #[test]
    fn materialization_embeds_into_deeper(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 3);
        let kb = random_consistent_kb(&mut r, &sig, 6, 6);
        let p = prepare(&kb.tbox, &kb.abox, [], [], []);
        let mut prev = materialize_canonical(&p, 0).unwrap();
        for d in 1..=3 {
            let next = materialize_canonical(&p, d).unwrap();
            let map: Vec<usize> = (0..prev.len()).map(|o| next.object(prev.object_name(o)).expect("object kept")).collect();
            let names: BTreeSet<&str> = prev.concept_names().chain(next.concept_names()).collect();
            for c in names {
                for (o, &mo) in map.iter().enumerate() {
                    prop_assert_eq!(prev.has_concept(c, o), next.has_concept(c, mo));
                }
            }
            let roles: BTreeSet<&str> = prev.role_names().chain(next.role_names()).collect();
            for rn in roles {
                let rr = RoleExpr::new(rn);
                for (o, &mo) in map.iter().enumerate() {
                    for (q, &mq) in map.iter().enumerate() {
                        prop_assert_eq!(prev.has_role(&rr, o, q), next.has_role(&rr, mo, mq));
                    }
                }
            }
            prev = next;
        }
    }

    #[test]
    fn nre_and_nnfa_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature { concepts: vec!["A".into()], roles: vec!["r".into(), "s".into()], individuals: vec![] };
        let e = random_nre(&mut r, &sig, 8, 2);
        let compiled = compile_nre(&e);
        let reduced = reduce_nnfa(&compiled.nnfa);
        let g = random_interpretation(&mut r, &sig, 5, 0.3);
        let direct = nre_pairs(&e, &g);
        prop_assert_eq!(&direct, &GraphEvaluator::new(&g, &compiled.nnfa).pairs(&compiled.part));
        prop_assert_eq!(&direct, &GraphEvaluator::new(&g, &reduced).pairs(&compiled.part));
    }

    #[test]
    fn compiled_nnfas_respect_index_and_levels(seed in any::<u64>()) {
        let sig = Signature::small(2, 2, 0);
        let e = random_nre(&mut rng(seed), &sig, 10, 3);
        let compiled = compile_nre(&e);
        for n in [(*compiled.nnfa).clone(), reduce_nnfa(&compiled.nnfa)] {
            prop_assert!(n.satisfies_index_constraint());
            let level = level_of(&n);
            for (j, a) in n.automata.iter().enumerate() {
                for (_, l, _) in &a.transitions {
                    if let Label::Test(ks) = l {
                        for &k in ks {
                            prop_assert!(k > j && level[k] < level[j]);
                        }
                    }
                }
            }
        }
    }

    /// Loop membership only grows with more pending obligations and with a
    /// stronger start conjunction.
    #[test]
    fn loops_monotone_in_gamma_and_conjunction(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 0);
        let tbox = random_tbox(&mut r, &sig, 6, true, false);
        let q = random_n2rpq(&mut r, &sig, 6, 2, 8);
        let nnfa = q.nnfa.clone();
        let kb = prepare(&tbox, &[], NAMES, ROLES, []);
        let loops = LoopTables::new(nnfa.clone(), kb.sat.tbox.clone()).unwrap();
        let id = |n: &str| kb.sat.concept_id(n).unwrap();
        for (i, a) in nnfa.automata.iter().enumerate() {
            let below: Vec<StateId> = nnfa.descendants(i).into_iter().filter(|&j| j != i)
                .flat_map(|j| nnfa.automata[j].states.clone()).collect();
            let gamma: Vec<StateId> = below.iter().copied().filter(|_| rand::Rng::gen_bool(&mut r, 0.4)).collect();
            for x in NAMES {
                let c = [id(x)];
                let stronger: Vec<[nrpq::kb::ConceptId; 1]> = NAMES.iter()
                    .filter(|y| kb.sat.entails_subsumption(&[id(y)], &c))
                    .map(|y| [id(y)]).collect();
                for &s1 in &a.states {
                    let fl = loops.in_floop(&c, s1, &a.finals, &gamma);
                    if fl {
                        prop_assert!(loops.in_floop(&c, s1, &a.finals, &below));
                        for c2 in &stronger {
                            prop_assert!(loops.in_floop(c2, s1, &a.finals, &gamma));
                        }
                    }
                    for &s2 in &a.states {
                        if loops.in_loop(&c, s1, s2, &gamma) {
                            prop_assert!(loops.in_loop(&c, s1, s2, &below));
                            for c2 in &stronger {
                                prop_assert!(loops.in_loop(c2, s1, s2, &gamma));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Every run the oracle finds in the depth-3 materialization of `{A(a)}`
    /// is a Loop member.
    #[test]
    fn runs_in_materialization_are_loops(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 0);
        let tbox = random_tbox(&mut r, &sig, 6, true, false);
        let q = random_n2rpq(&mut r, &sig, 5, 1, 8);
        let nnfa = q.nnfa.clone();
        let x = *NAMES.choose(&mut r).unwrap();
        let kb = prepare(&tbox, &[AboxAssertion::concept(x, "a")], NAMES, ROLES, []);
        let loops = LoopTables::new(nnfa.clone(), kb.sat.tbox.clone()).unwrap();
        let mat = materialize_canonical(&kb, 3).unwrap();
        let a = mat.object("a").unwrap();
        let c = [kb.sat.concept_id(x).unwrap()];
        let mut runs = RunSearch::new(&nnfa, &mat, a, &[]);
        for aut in &nnfa.automata {
            for &s1 in &aut.states {
                for &s2 in &aut.states {
                    if runs.targets(&PartRef::new(s1, [s2]), a).contains(&a) {
                        prop_assert!(loops.in_loop(&c, s1, s2, &[]));
                    }
                }
            }
        }
    }

    #[test]
    fn rewriting_never_adds_terms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 2);
        let tbox = random_tbox(&mut r, &sig, 5, true, false);
        let q = random_cn2rpq(&mut r, &sig, 2, 4, 1);
        let (t, _) = normalize(&tbox, &[]);
        let terms = q.terms();
        for q2 in rewrite(&q, &t).unwrap() {
            prop_assert!(q2.terms().is_subset(&terms), "{} has new terms", q2);
        }
    }

    #[test]
    fn canonical_key_ignores_order_and_renaming(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(2, 2, 2);
        let q = random_cn2rpq(&mut r, &sig, 3, 3, 1);
        let evars = q.existential_vars();
        let rename = |t: &Term| match t {
            Term::Var(v) if evars.contains(v) => Term::Var(format!("{v}_renamed")),
            t => t.clone(),
        };
        let mut atoms: Vec<Atom> = q.atoms.iter().map(|a| a.map_terms(rename)).collect();
        atoms.shuffle(&mut r);
        let q2 = Cn2rpq { answer_vars: q.answer_vars.clone(), atoms, nnfa: q.nnfa.clone() };
        prop_assert_eq!(canonical_query_form(&q), canonical_query_form(&q2));
    }

    #[test]
    fn memo_is_transparent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 4);
        let kb = random_consistent_kb(&mut r, &sig, 8, 8);
        let q = random_cn2rpq(&mut r, &sig, 2, 5, 2);
        let off = EvalOptions { memo: false, ..EvalOptions::default() };
        prop_assert_eq!(certain_answers(&q, &kb).unwrap(), certain_answers_with(&q, &kb, &off).unwrap());
    }

    #[test]
    fn searches_stay_within_the_step_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 5);
        let kb = random_consistent_kb(&mut r, &sig, 8, 10);
        let q = random_n2rpq(&mut r, &sig, 6, 2, 8);
        let names = q.concept_names();
        let roles = q.role_names();
        let p = prepare(&kb.tbox, &kb.abox, names.iter().map(String::as_str), roles.iter().map(String::as_str), []);
        let loops = Arc::new(LoopTables::new(q.nnfa.clone(), p.sat.tbox.clone()).unwrap());
        let n = p.model.num_individuals();
        let ev = AtomEvaluator::new(p, q.nnfa.clone(), loops, EvalOptions::default());
        let Atom::Role(part, ..) = &q.atoms[0] else { unreachable!() };
        for a in 0..n {
            ev.eval_atom(part, a, Target::Anon);
            ev.targets(part, a);
        }
        let bound = (0..q.nnfa.automata.len()).map(|i| ev.step_bound(i)).max().unwrap();
        prop_assert!(ev.max_search_depth() <= bound);
    }

    /// Answers found in a truncated canonical model are certain; on KBs
    /// whose canonical model is finite they are all the certain answers.
    #[test]
    fn materialization_answers_are_certain(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 4);
        let kb = random_consistent_kb(&mut r, &sig, 6, 8);
        let q = random_cn2rpq(&mut r, &sig, 2, 5, 2);
        let certain = certain_answers(&q, &kb).unwrap();
        let inds = kb.individuals();
        let full = with_query_individuals(&kb, &q);
        let p = prepare(&full.tbox, &full.abox, [], [], []);
        for d in 0..=3 {
            let found = restrict(answers_on_interpretation(&q, &materialize_canonical(&p, d).unwrap()), &inds);
            prop_assert!(found.is_subset(&certain), "depth {d}: {:?} not certain", found.difference(&certain).collect::<Vec<_>>());
        }
        if let Some(depth) = dependency_depth(&full, 4) {
            let found = restrict(answers_on_interpretation(&q, &materialize_canonical(&p, depth).unwrap()), &inds);
            prop_assert_eq!(found, certain);
        }
    }

    #[test]
    fn reduction_agrees_with_eval_atom(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = Signature::small(3, 2, 4);
        let kb = random_consistent_kb(&mut r, &sig, 8, 8);
        let q = random_n2rpq(&mut r, &sig, 6, 2, 6);
        let Atom::Role(part, ..) = &q.atoms[0] else { unreachable!() };
        let part = q.nnfa.part(part.clone());
        for a in kb.individuals() {
            for b in kb.individuals() {
                prop_assert_eq!(
                    answer_via_reduction(&part, &kb, &a, &b).unwrap(),
                    eval_atom(&part, &kb, &a, Some(&b)).unwrap(),
                );
            }
        }
    }

    #[test]
    fn horn_instances_match_forward_chaining(seed in any::<u64>()) {
        let h = random_horn_theory(&mut rng(seed), 6, 8);
        let inst = gen_horn_instance(&h);
        let g = nrpq::reasoner::FiniteInterpretation::from_assertions(&inst.abox).unwrap();
        let member = nrpq::eval::eval_on_interpretation(&compile_nre(&inst.query), &g).contains(&inst.pair);
        prop_assert_eq!(member, horn_entails(&h));
    }

    #[test]
    fn translation_is_linear(seed in any::<u64>()) {
        let sig = Signature::small(3, 2, 2);
        let q = random_cn2rpq(&mut rng(seed), &sig, 3, 6, 2);
        let reduced = reduce_nnfa(&q.nnfa);
        let bound: usize = reduced.automata.iter().map(|a| a.transitions.len() + a.finals.len()).sum();
        prop_assert!(translate_cn2rpq(&q).tbox.len() <= bound);
    }
}
