// SPDX-License-Identifier: Apache-2.0
//! Nested regular expressions, conjunctive queries over them, and their
//! compilation to nested automata.

mod nnfa;
mod nominal;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use nnfa::{compile_nre, level_of, reduce_nnfa, Automaton, Label, Nnfa, NnfaBuilder, NnfaPart, PartRef, StateId};
pub use nominal::{eliminate_nominal_tests, nominal_concept};
pub use parse::{parse_nre, parse_query};

use crate::kb::RoleExpr;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Role(RoleExpr),
    Concept(String),
    Nominal(String),
}

/// Nested regular expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Nre {
    Sym(Symbol),
    Concat(Box<Nre>, Box<Nre>),
    Union(Box<Nre>, Box<Nre>),
    Star(Box<Nre>),
    Test(Box<Nre>),
}

impl Nre {
    pub fn role(name: &str) -> Nre {
        Nre::Sym(Symbol::Role(RoleExpr::new(name)))
    }

    pub fn inv(name: &str) -> Nre {
        Nre::Sym(Symbol::Role(RoleExpr::inv(name)))
    }

    pub fn concept(name: &str) -> Nre {
        Nre::Sym(Symbol::Concept(name.to_owned()))
    }

    pub fn nominal(ind: &str) -> Nre {
        Nre::Sym(Symbol::Nominal(ind.to_owned()))
    }

    /// `top?`, the identity relation.
    pub fn epsilon() -> Nre {
        Nre::concept("top")
    }

    pub fn concat(a: Nre, b: Nre) -> Nre {
        Nre::Concat(Box::new(a), Box::new(b))
    }

    pub fn union(a: Nre, b: Nre) -> Nre {
        Nre::Union(Box::new(a), Box::new(b))
    }

    pub fn star(a: Nre) -> Nre {
        Nre::Star(Box::new(a))
    }

    pub fn test(a: Nre) -> Nre {
        Nre::Test(Box::new(a))
    }

    /// Concatenation of a non-empty sequence.
    pub fn seq(parts: impl IntoIterator<Item = Nre>) -> Nre {
        let mut it = parts.into_iter();
        let first = it.next().expect("empty sequence");
        it.fold(first, Nre::concat)
    }

    /// Union of a non-empty sequence.
    pub fn alt(parts: impl IntoIterator<Item = Nre>) -> Nre {
        let mut it = parts.into_iter();
        let first = it.next().expect("empty union");
        it.fold(first, Nre::union)
    }

    /// Number of operators (symbols excluded).
    pub fn operators(&self) -> usize {
        match self {
            Nre::Sym(_) => 0,
            Nre::Concat(a, b) | Nre::Union(a, b) => 1 + a.operators() + b.operators(),
            Nre::Star(a) | Nre::Test(a) => 1 + a.operators(),
        }
    }

    pub fn nesting_depth(&self) -> usize {
        match self {
            Nre::Sym(_) => 0,
            Nre::Concat(a, b) | Nre::Union(a, b) => a.nesting_depth().max(b.nesting_depth()),
            Nre::Star(a) => a.nesting_depth(),
            Nre::Test(a) => 1 + a.nesting_depth(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // 0: union, 1: concat, 2: star operand
        match self {
            Nre::Sym(Symbol::Role(r)) => write!(f, "{r}"),
            Nre::Sym(Symbol::Concept(c)) => write!(f, "{c}?"),
            Nre::Sym(Symbol::Nominal(a)) => write!(f, "{{{a}}}?"),
            Nre::Test(e) => write!(f, "<{e}>"),
            Nre::Star(e) => {
                e.fmt_prec(f, 2)?;
                f.write_str("*")
            }
            Nre::Concat(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 1)?;
                f.write_str(" . ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Nre::Union(a, b) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 0)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Nre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Ind(String),
}

impl Term {
    pub fn var(v: &str) -> Term {
        Term::Var(v.to_owned())
    }

    pub fn ind(a: &str) -> Term {
        Term::Ind(a.to_owned())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Ind(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Ind(a) => write!(f, "'{a}'"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Concept(String, Term),
    Role(PartRef, Term, Term),
    /// Holds at `t` when the part reaches a final state from `t` somewhere.
    Test(PartRef, Term),
}

impl Atom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Concept(_, t) | Atom::Test(_, t) => vec![t],
            Atom::Role(_, t, u) => vec![t, u],
        }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Atom {
        match self {
            Atom::Concept(c, t) => Atom::Concept(c.clone(), f(t)),
            Atom::Role(p, t, u) => Atom::Role(p.clone(), f(t), f(u)),
            Atom::Test(p, t) => Atom::Test(p.clone(), f(t)),
        }
    }
}

/// Conjunctive nested two-way regular path query.
///
/// All role and test atoms refer to parts of one shared [`Nnfa`].
#[derive(Clone, Debug)]
pub struct Cn2rpq {
    pub answer_vars: Vec<String>,
    pub atoms: Vec<Atom>,
    pub nnfa: Arc<Nnfa>,
}

impl Cn2rpq {
    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    pub fn terms(&self) -> BTreeSet<Term> {
        self.atoms.iter().flat_map(|a| a.terms().into_iter().cloned()).collect()
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.terms().into_iter().filter_map(|t| t.as_var().map(str::to_owned)).collect()
    }

    pub fn existential_vars(&self) -> BTreeSet<String> {
        let mut v = self.variables();
        for x in &self.answer_vars {
            v.remove(x);
        }
        v
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .terms()
            .into_iter()
            .filter_map(|t| match t {
                Term::Ind(a) => Some(a),
                Term::Var(_) => None,
            })
            .collect();
        for a in &self.nnfa.automata {
            for (_, l, _) in &a.transitions {
                if let Label::Nominal(i) = l {
                    out.insert(i.clone());
                }
            }
        }
        out
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .atoms
            .iter()
            .filter_map(|a| match a {
                Atom::Concept(c, _) => Some(c.clone()),
                _ => None,
            })
            .collect();
        out.extend(self.nnfa.concept_names());
        out
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        self.nnfa.role_names()
    }

    /// Substitutes individuals for answer variables, yielding a Boolean query.
    pub fn ground_answer_vars(&self, tuple: &[String]) -> Cn2rpq {
        assert_eq!(tuple.len(), self.answer_vars.len());
        let sub = |t: &Term| match t {
            Term::Var(v) => match self.answer_vars.iter().position(|x| x == v) {
                Some(i) => Term::Ind(tuple[i].clone()),
                None => t.clone(),
            },
            Term::Ind(_) => t.clone(),
        };
        Cn2rpq {
            answer_vars: Vec::new(),
            atoms: self.atoms.iter().map(|a| a.map_terms(sub)).collect(),
            nnfa: self.nnfa.clone(),
        }
    }

    pub fn atom_to_string(&self, atom: &Atom) -> String {
        match atom {
            Atom::Concept(c, t) => format!("{c}({t})"),
            Atom::Role(p, t, u) => match self.nnfa.part_to_nre(p) {
                e @ (Nre::Union(..) | Nre::Concat(..)) => format!("({e})({t}, {u})"),
                e => format!("{e}({t}, {u})"),
            },
            Atom::Test(p, t) => format!("<{}>({t})", self.nnfa.part_to_nre(p)),
        }
    }
}

impl fmt::Display for Cn2rpq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q({}) <-", self.answer_vars.join(", "))?;
        if !self.atoms.is_empty() {
            f.write_str(" ")?;
        }
        let atoms: Vec<String> = self.atoms.iter().map(|a| self.atom_to_string(a)).collect();
        f.write_str(&atoms.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("answer variable `{0}` is not a variable")]
    UndeclaredAnswerVar(String),
    #[error("answer variable `{0}` does not occur in the body")]
    UnusedAnswerVar(String),
    #[error("answer variable `{0}` is listed twice")]
    DuplicateAnswerVar(String),
}
