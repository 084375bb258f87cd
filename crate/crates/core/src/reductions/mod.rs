// SPDX-License-Identifier: Apache-2.0
//! Query-to-TBox translations and hardness-instance generators.
//!
//! [`translate_cn2rpq`] internalizes nested tests into fresh concept names,
//! leaving a plain two-way query. [`reduce_n2rpq_to_instance`] turns a
//! single atom into an instance check, which gives a second answering
//! pipeline independent of the rewriter.

pub mod atm;
pub mod horn;

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::kb::{AboxAssertion, Concept, KnowledgeBase, TBoxAxiom};
use crate::query::{eliminate_nominal_tests, reduce_nnfa, Atom, Cn2rpq, Label, Nnfa, NnfaPart, StateId, Term};
use crate::reasoner::prepare;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("the knowledge base is inconsistent")]
    Inconsistent,
    #[error("{0}")]
    Invalid(String),
}

/// Result of [`translate_cn2rpq`].
#[derive(Clone, Debug)]
pub struct Translation {
    /// The axioms defining one concept per automaton state.
    pub tbox: Vec<TBoxAxiom>,
    /// The query with every nested test replaced by a concept test.
    pub query: Cn2rpq,
    /// Nominal assertions needed when the input mentioned `{a}?`.
    pub abox: Vec<AboxAssertion>,
}

/// Picks fresh concept names of the form `{prefix}{n}` that cannot clash
/// with any name in `used`.
#[derive(Clone, Debug)]
pub struct FreshNames {
    prefix: String,
}

impl FreshNames {
    pub fn new<'a>(base: &str, used: impl IntoIterator<Item = &'a str>) -> Self {
        let used: Vec<&str> = used.into_iter().collect();
        let mut prefix = base.to_owned();
        while used.iter().any(|n| n.starts_with(prefix.as_str())) {
            prefix.push('x');
        }
        FreshNames { prefix }
    }

    pub fn name(&self, n: impl std::fmt::Display) -> String {
        format!("{}{n}", self.prefix)
    }
}

fn concept_of(name: &str) -> Concept {
    if name == "top" {
        Concept::Top
    } else {
        Concept::name(name)
    }
}

fn and_all(cs: impl IntoIterator<Item = Concept>) -> Concept {
    cs.into_iter().reduce(Concept::and).unwrap_or(Concept::Top)
}

/// Axioms for the states of automaton `k`, naming state `s` by `name(s)`.
/// `finals` become `top`-subsumed; `test_name(j)` names the initial state
/// of a tested automaton.
fn automaton_axioms(
    nnfa: &Nnfa,
    k: usize,
    finals: &[StateId],
    name: &dyn Fn(StateId) -> String,
    test_name: &dyn Fn(usize) -> String,
    out: &mut Vec<TBoxAxiom>,
) {
    for &f in finals {
        out.push(TBoxAxiom::sub(Concept::Top, Concept::name(name(f))));
    }
    for (s, l, t) in &nnfa.automata[k].transitions {
        let head = Concept::name(name(*s));
        let next = Concept::name(name(*t));
        let body = match l {
            Label::Role(r) => Concept::exists(r.clone(), next),
            Label::Concept(c) => and_all([next, concept_of(c)]),
            Label::Test(js) => and_all(std::iter::once(next).chain(js.iter().map(|&j| Concept::name(test_name(j))))),
            Label::Nominal(_) => unreachable!("nominal tests are eliminated first"),
        };
        out.push(TBoxAxiom::sub(body, head));
    }
}

fn used_names(q: &Cn2rpq) -> BTreeSet<String> {
    let mut used = q.concept_names();
    used.extend(q.role_names());
    used
}

/// Replaces nested tests by concept names defined in a TBox.
///
/// Certain answers are preserved: `q` over `(T, A)` and the returned query
/// over `(T + tbox, A + abox)` have the same answers.
pub fn translate_cn2rpq(q: &Cn2rpq) -> Translation {
    translate_cn2rpq_avoiding(q, std::iter::empty::<&str>())
}

/// As [`translate_cn2rpq`], also keeping fresh names away from `used`
/// (typically the KB signature).
pub fn translate_cn2rpq_avoiding<'a>(q: &Cn2rpq, used: impl IntoIterator<Item = &'a str>) -> Translation {
    let (q, abox) = eliminate_nominal_tests(q);
    let nnfa = if q.nnfa.is_reduced() { q.nnfa.as_ref().clone() } else { reduce_nnfa(&q.nnfa) };
    let mut avoid = used_names(&q);
    avoid.extend(used.into_iter().map(str::to_owned));
    let fresh = FreshNames::new("As", avoid.iter().map(String::as_str));
    let name = |s: StateId| fresh.name(s);
    let test_name = |j: usize| fresh.name(nnfa.automata[j].initial);
    let mut tbox = Vec::new();
    for k in 0..nnfa.automata.len() {
        let finals = nnfa.automata[k].finals.clone();
        automaton_axioms(&nnfa, k, &finals, &name, &test_name, &mut tbox);
    }
    let plain = nnfa.map_labels(|l| match l {
        Label::Test(js) => {
            debug_assert_eq!(js.len(), 1);
            Label::Concept(test_name(js[0]))
        }
        other => other.clone(),
    });
    let query = Cn2rpq { answer_vars: q.answer_vars.clone(), atoms: q.atoms.clone(), nnfa: Arc::new(plain) };
    Translation { tbox, query, abox }
}

/// An instance check equivalent to one pair of a single-atom query.
#[derive(Clone, Debug)]
pub struct InstanceCheck {
    pub tbox: Vec<TBoxAxiom>,
    /// `A_b(b)`, marking the intended end point.
    pub assertion: AboxAssertion,
    /// The concept whose membership of `a` decides the pair.
    pub target: String,
}

/// Reduces `(a, b)` in the answers of `e` to an instance check of the
/// returned target concept at `a`.
///
/// The main automaton is extended by a test `A_b?` after its finals; the
/// names of its states are kept apart from those of the tested automata so
/// that other parts sharing the NNFA are unaffected. `e` must be free of
/// nominal tests; `used` lists names the fresh ones must avoid.
pub fn reduce_n2rpq_to_instance<'a>(e: &NnfaPart, b: &str, used: impl IntoIterator<Item = &'a str>) -> InstanceCheck {
    let mut avoid: BTreeSet<String> = e.nnfa.concept_names();
    avoid.extend(e.nnfa.role_names());
    avoid.extend(used.into_iter().map(str::to_owned));
    let avoid: Vec<&str> = avoid.iter().map(String::as_str).collect();
    let nested = FreshNames::new("As", avoid.iter().copied());
    let main = FreshNames::new("Ms", avoid.iter().copied().chain([nested.prefix.as_str()]));
    let mark = FreshNames::new("Ab", avoid.iter().copied().chain([nested.prefix.as_str(), main.prefix.as_str()]));
    let mark = mark.name("");

    let nnfa = if e.nnfa.is_reduced() { e.nnfa.as_ref().clone() } else { reduce_nnfa(&e.nnfa) };
    let k0 = nnfa.owner(e.start());
    let test_name = |j: usize| nested.name(nnfa.automata[j].initial);
    let mut tbox = Vec::new();
    for j in nnfa.descendants(k0) {
        if j == k0 {
            continue;
        }
        let finals = nnfa.automata[j].finals.clone();
        automaton_axioms(&nnfa, j, &finals, &|s| nested.name(s), &test_name, &mut tbox);
    }
    // The fresh final state reached from the part's finals through `A_b?`.
    let end = main.name("end");
    tbox.push(TBoxAxiom::sub(Concept::Top, Concept::name(&end)));
    for &f in e.finals() {
        tbox.push(TBoxAxiom::sub(and_all([Concept::name(&end), Concept::name(&mark)]), Concept::name(main.name(f))));
    }
    automaton_axioms(&nnfa, k0, &[], &|s| main.name(s), &test_name, &mut tbox);
    InstanceCheck { tbox, assertion: AboxAssertion::concept(mark, b), target: main.name(e.start()) }
}

/// Decides whether `(a, b)` is a certain answer of `e` over `kb` through
/// the instance-check reduction.
pub fn answer_via_reduction(e: &NnfaPart, kb: &KnowledgeBase, a: &str, b: &str) -> Result<bool, ReductionError> {
    let q = Cn2rpq {
        answer_vars: vec!["x".into(), "y".into()],
        atoms: vec![Atom::Role(e.part.clone(), Term::var("x"), Term::var("y"))],
        nnfa: e.nnfa.clone(),
    };
    let (q, nominals) = eliminate_nominal_tests(&q);
    let mut abox = kb.abox.clone();
    abox.extend(nominals);
    if !prepare(&kb.tbox, &abox, [], [], []).model.is_consistent() {
        return Err(ReductionError::Inconsistent);
    }
    let Atom::Role(part, ..) = &q.atoms[0] else { unreachable!() };
    let e = q.nnfa.part(part.clone());
    let used: BTreeSet<String> = kb.concept_names().into_iter().chain(kb.role_names()).collect();
    let check = reduce_n2rpq_to_instance(&e, b, used.iter().map(String::as_str));
    let mut tbox = kb.tbox.clone();
    tbox.extend(check.tbox);
    abox.push(check.assertion);
    let ext = prepare(&tbox, &abox, [], [], [a, b]);
    Ok(ext.model.entails_assertion(&check.target, a))
}
