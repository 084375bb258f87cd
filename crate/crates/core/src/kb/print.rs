// SPDX-License-Identifier: Apache-2.0
use std::fmt::{self, Write};

use super::{AboxAssertion, Concept, Fragment, KnowledgeBase, TBoxAxiom};

fn write_concept(c: &Concept, out: &mut String, in_exists: bool) {
    match c {
        Concept::Top => out.push_str("top"),
        Concept::Bot => out.push_str("bot"),
        Concept::Name(n) => out.push_str(n),
        Concept::Exists(r, f) => {
            let _ = write!(out, "exists {r}.");
            write_concept(f, out, true);
        }
        Concept::And(a, b) => {
            if in_exists {
                out.push('(');
            }
            write_concept(a, out, false);
            out.push_str(" & ");
            if matches!(**b, Concept::And(..)) {
                out.push('(');
                write_concept(b, out, false);
                out.push(')');
            } else {
                write_concept(b, out, false);
            }
            if in_exists {
                out.push(')');
            }
        }
    }
}

pub fn concept_to_string(c: &Concept) -> String {
    let mut s = String::new();
    write_concept(c, &mut s, false);
    s
}

pub fn axiom_to_string(ax: &TBoxAxiom) -> String {
    match ax {
        TBoxAxiom::ConceptInclusion(c, d) => format!("{} <= {}", concept_to_string(c), concept_to_string(d)),
        TBoxAxiom::RoleInclusion(r, s) => format!("{r} <= {s}"),
        TBoxAxiom::DisjointRoles(r, s) => format!("{r} & {s} <= bot"),
    }
}

pub fn assertion_to_string(a: &AboxAssertion) -> String {
    match a {
        AboxAssertion::ConceptAssertion(Concept::Name(n), i) => format!("{n}({i})"),
        AboxAssertion::ConceptAssertion(c, i) => format!("({})({i})", concept_to_string(c)),
        AboxAssertion::RoleAssertion(r, a, b) => format!("{r}({a}, {b})"),
    }
}

fn join(names: impl IntoIterator<Item = String>) -> String {
    names.into_iter().collect::<Vec<_>>().join(", ")
}

pub(super) fn write_kb(kb: &KnowledgeBase, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if kb.fragment != Fragment::ElhiBot {
        writeln!(f, "fragment {}", kb.fragment)?;
    }
    let roles = kb.role_names();
    if !roles.is_empty() {
        writeln!(f, "role {}", join(roles))?;
    }
    let concepts = kb.concept_names();
    if !concepts.is_empty() {
        writeln!(f, "concept {}", join(concepts))?;
    }
    for ax in &kb.tbox {
        writeln!(f, "{}", axiom_to_string(ax))?;
    }
    for a in &kb.abox {
        writeln!(f, "{}", assertion_to_string(a))?;
    }
    Ok(())
}
