// SPDX-License-Identifier: Apache-2.0
use fixedbitset::FixedBitSet;

use super::{FiniteInterpretation, PreparedKb};
use crate::kb::{ConceptId, RoleId, TOP};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaterializeError {
    #[error("the knowledge base is inconsistent")]
    Inconsistent,
}

/// The canonical model cut at anonymous depth `depth`.
///
/// Anonymous elements are named `parent·rTail`, where the tail is the
/// successor's core conjunction.
pub fn materialize_canonical(kb: &PreparedKb, depth: usize) -> Result<FiniteInterpretation, MaterializeError> {
    let model = &kb.model;
    if !model.is_consistent() {
        return Err(MaterializeError::Inconsistent);
    }
    let sat = &kb.sat;
    let vocab = &sat.tbox.vocab;
    let mut out = FiniteInterpretation::new();
    let add_type = |out: &mut FiniteInterpretation, o: usize, h: &FixedBitSet| {
        for c in h.ones() {
            if c as ConceptId != TOP {
                out.add_concept(vocab.concept_name(c as ConceptId), o);
            }
        }
    };
    let add_edge = |out: &mut FiniteInterpretation, r: RoleId, a: usize, b: usize| {
        for s in sat.index.role_supers(r) {
            let name = vocab.role_name(s.name_index());
            if s.is_inverse() {
                out.add_role(name, b, a);
            } else {
                out.add_role(name, a, b);
            }
        }
    };

    let mut frontier: Vec<(usize, FixedBitSet)> = Vec::new();
    for i in 0..model.num_individuals() {
        let o = out.add_object(model.individual(i));
        add_type(&mut out, o, model.type_of(i));
        frontier.push((o, model.type_of(i).clone()));
    }
    for i in 0..model.num_individuals() {
        for &(r, j) in model.asserted_from(i) {
            add_edge(&mut out, r, i, j);
        }
    }
    for _ in 0..depth {
        let mut next = Vec::new();
        for (o, h) in frontier {
            for (r, core) in sat.successors_of_type(&h) {
                let tail = match core.len() {
                    0 => "top".to_owned(),
                    1 => vocab.concept_name(core[0]).to_owned(),
                    _ => format!(
                        "({})",
                        core.iter().map(|&c| vocab.concept_name(c)).collect::<Vec<_>>().join("&")
                    ),
                };
                let name = format!("{}·{}{}", out.object_name(o), vocab.role_expr(r), tail);
                let child = out.add_object(&name);
                let ht = sat.supers(&core).names;
                add_type(&mut out, child, &ht);
                add_edge(&mut out, r, o, child);
                next.push((child, ht));
            }
        }
        frontier = next;
    }
    Ok(out)
}
