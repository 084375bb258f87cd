// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeSet;
use std::sync::Arc;

use super::{Cn2rpq, Label};
use crate::kb::AboxAssertion;

/// The concept name standing for the nominal `{ind}`.
pub fn nominal_concept(ind: &str) -> String {
    format!("__nom_{ind}")
}

/// Replaces every `{a}?` by a test on a fresh name `A_a` and returns the
/// assertions `A_a(a)` that must be added to the ABox.
pub fn eliminate_nominal_tests(q: &Cn2rpq) -> (Cn2rpq, Vec<AboxAssertion>) {
    let mut inds = BTreeSet::new();
    for a in &q.nnfa.automata {
        for (_, l, _) in &a.transitions {
            if let Label::Nominal(i) = l {
                inds.insert(i.clone());
            }
        }
    }
    if inds.is_empty() {
        return (q.clone(), Vec::new());
    }
    let nnfa = q.nnfa.map_labels(|l| match l {
        Label::Nominal(i) => Label::Concept(nominal_concept(i)),
        other => other.clone(),
    });
    let ext = inds.iter().map(|i| AboxAssertion::concept(nominal_concept(i), i.as_str())).collect();
    (Cn2rpq { answer_vars: q.answer_vars.clone(), atoms: q.atoms.clone(), nnfa: Arc::new(nnfa) }, ext)
}
