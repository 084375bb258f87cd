// SPDX-License-Identifier: Apache-2.0
//! Knowledge bases: surface syntax, text format and normal form.

mod normalize;
mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

pub use normalize::{normalize, ConceptId, NormalAbox, NormalAxiom, NormalizedTBox, RoleId, Vocabulary, TOP};
pub use parse::{parse_kb, parse_kb_with_roles};

/// A role name or its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleExpr {
    pub name: String,
    pub inverted: bool,
}

impl RoleExpr {
    pub fn new(name: impl Into<String>) -> Self {
        RoleExpr { name: name.into(), inverted: false }
    }

    pub fn inv(name: impl Into<String>) -> Self {
        RoleExpr { name: name.into(), inverted: true }
    }

    pub fn inverse(&self) -> Self {
        RoleExpr { name: self.name.clone(), inverted: !self.inverted }
    }
}

impl fmt::Display for RoleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}-", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// ELHI-bottom concept.
///
/// Equality and hashing treat `And` as an associative, commutative and
/// idempotent operator.
#[derive(Clone, Debug)]
pub enum Concept {
    Top,
    Bot,
    Name(String),
    Exists(RoleExpr, Box<Concept>),
    And(Box<Concept>, Box<Concept>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum CanonConcept {
    Top,
    Bot,
    Name(String),
    Exists(RoleExpr, Box<CanonConcept>),
    And(BTreeSet<CanonConcept>),
}

impl Concept {
    pub fn name(n: impl Into<String>) -> Self {
        Concept::Name(n.into())
    }

    pub fn exists(r: RoleExpr, c: Concept) -> Self {
        Concept::Exists(r, Box::new(c))
    }

    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }

    fn canon(&self) -> CanonConcept {
        match self {
            Concept::Top => CanonConcept::Top,
            Concept::Bot => CanonConcept::Bot,
            Concept::Name(n) => CanonConcept::Name(n.clone()),
            Concept::Exists(r, c) => CanonConcept::Exists(r.clone(), Box::new(c.canon())),
            Concept::And(..) => {
                let mut parts = BTreeSet::new();
                self.collect_conjuncts(&mut parts);
                if parts.len() == 1 {
                    parts.into_iter().next().unwrap()
                } else {
                    CanonConcept::And(parts)
                }
            }
        }
    }

    fn collect_conjuncts(&self, out: &mut BTreeSet<CanonConcept>) {
        match self {
            Concept::And(a, b) => {
                a.collect_conjuncts(out);
                b.collect_conjuncts(out);
            }
            other => {
                out.insert(other.canon());
            }
        }
    }

    /// Flattened list of conjuncts (a non-conjunction yields itself).
    pub fn conjuncts(&self) -> Vec<&Concept> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            match c {
                Concept::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                other => out.push(other),
            }
        }
        out
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Concept::Name(_))
    }

    pub fn concept_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Concept::Name(n) => {
                out.insert(n.clone());
            }
            Concept::Exists(_, c) => c.concept_names(out),
            Concept::And(a, b) => {
                a.concept_names(out);
                b.concept_names(out);
            }
            Concept::Top | Concept::Bot => {}
        }
    }

    pub fn role_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Concept::Exists(r, c) => {
                out.insert(r.name.clone());
                c.role_names(out);
            }
            Concept::And(a, b) => {
                a.role_names(out);
                b.role_names(out);
            }
            _ => {}
        }
    }

    pub fn mentions_bot(&self) -> bool {
        match self {
            Concept::Bot => true,
            Concept::Exists(_, c) => c.mentions_bot(),
            Concept::And(a, b) => a.mentions_bot() || b.mentions_bot(),
            _ => false,
        }
    }

    pub fn mentions_inverse(&self) -> bool {
        match self {
            Concept::Exists(r, c) => r.inverted || c.mentions_inverse(),
            Concept::And(a, b) => a.mentions_inverse() || b.mentions_inverse(),
            _ => false,
        }
    }

    /// Number of sub-concept occurrences.
    pub fn size(&self) -> usize {
        match self {
            Concept::Exists(_, c) => 1 + c.size(),
            Concept::And(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }
}

impl PartialEq for Concept {
    fn eq(&self, other: &Self) -> bool {
        self.canon() == other.canon()
    }
}

impl Eq for Concept {}

impl std::hash::Hash for Concept {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canon().hash(state)
    }
}

#[derive(Clone, Debug)]
pub enum TBoxAxiom {
    ConceptInclusion(Concept, Concept),
    RoleInclusion(RoleExpr, RoleExpr),
    DisjointRoles(RoleExpr, RoleExpr),
}

impl TBoxAxiom {
    pub fn sub(c: Concept, d: Concept) -> Self {
        TBoxAxiom::ConceptInclusion(c, d)
    }

    fn key(&self) -> (u8, Option<(&Concept, &Concept)>, Option<(&RoleExpr, &RoleExpr)>) {
        match self {
            TBoxAxiom::ConceptInclusion(c, d) => (0, Some((c, d)), None),
            TBoxAxiom::RoleInclusion(r, s) => (1, None, Some((r, s))),
            TBoxAxiom::DisjointRoles(r, s) => (2, None, Some(if r <= s { (r, s) } else { (s, r) })),
        }
    }
}

impl PartialEq for TBoxAxiom {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for TBoxAxiom {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AboxAssertion {
    ConceptAssertion(Concept, String),
    RoleAssertion(RoleExpr, String, String),
}

impl AboxAssertion {
    pub fn concept(c: impl Into<String>, a: impl Into<String>) -> Self {
        AboxAssertion::ConceptAssertion(Concept::Name(c.into()), a.into())
    }

    pub fn role(r: impl Into<String>, a: impl Into<String>, b: impl Into<String>) -> Self {
        AboxAssertion::RoleAssertion(RoleExpr::new(r), a.into(), b.into())
    }

    pub fn individuals(&self) -> Vec<&str> {
        match self {
            AboxAssertion::ConceptAssertion(_, a) => vec![a],
            AboxAssertion::RoleAssertion(_, a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Fragment {
    #[default]
    ElhiBot,
    Elhi,
    Elh,
    Eli,
    El,
    DlLiteR,
    DlLiteCore,
    Plain,
}

impl Fragment {
    pub const ALL: [Fragment; 8] = [
        Fragment::ElhiBot,
        Fragment::Elhi,
        Fragment::Elh,
        Fragment::Eli,
        Fragment::El,
        Fragment::DlLiteR,
        Fragment::DlLiteCore,
        Fragment::Plain,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Fragment::ElhiBot => "elhi-bot",
            Fragment::Elhi => "elhi",
            Fragment::Elh => "elh",
            Fragment::Eli => "eli",
            Fragment::El => "el",
            Fragment::DlLiteR => "dl-lite-r",
            Fragment::DlLiteCore => "dl-lite-core",
            Fragment::Plain => "plain",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Fragment> {
        Fragment::ALL.into_iter().find(|f| f.tag() == tag)
    }

    /// Checks one TBox axiom; returns a reason when it falls outside the fragment.
    pub fn check(self, ax: &TBoxAxiom) -> Result<(), &'static str> {
        use Fragment::*;
        match self {
            ElhiBot => Ok(()),
            Plain => Err("plain graphs have no TBox"),
            Elhi | Elh | Eli | El => {
                let (bot, inv, incl) = match ax {
                    TBoxAxiom::ConceptInclusion(c, d) => {
                        (c.mentions_bot() || d.mentions_bot(), c.mentions_inverse() || d.mentions_inverse(), false)
                    }
                    TBoxAxiom::RoleInclusion(r, s) => (false, r.inverted || s.inverted, true),
                    TBoxAxiom::DisjointRoles(..) => (true, false, false),
                };
                if bot {
                    return Err("bottom and negative role inclusions are not allowed");
                }
                if inv && matches!(self, Elh | El) {
                    return Err("inverse roles are not allowed");
                }
                if incl && matches!(self, Eli | El) {
                    return Err("role inclusions are not allowed");
                }
                Ok(())
            }
            DlLiteR | DlLiteCore => match ax {
                TBoxAxiom::RoleInclusion(..) | TBoxAxiom::DisjointRoles(..) if self == DlLiteCore => {
                    Err("role inclusions are not allowed")
                }
                TBoxAxiom::RoleInclusion(..) | TBoxAxiom::DisjointRoles(..) => Ok(()),
                TBoxAxiom::ConceptInclusion(c, d) => {
                    let basic = |c: &Concept| match c {
                        Concept::Name(_) => true,
                        Concept::Exists(_, f) => matches!(**f, Concept::Top),
                        _ => false,
                    };
                    let ok = match (c, d) {
                        (Concept::And(a, b), Concept::Bot) => basic(a) && basic(b),
                        (c, Concept::Bot) => basic(c),
                        (c, d) => basic(c) && basic(d),
                    };
                    if ok {
                        Ok(())
                    } else {
                        Err("concept inclusions must be B1 <= B2 or B1 & B2 <= bot with basic concepts")
                    }
                }
            },
        }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub fragment: Fragment,
    pub tbox: Vec<TBoxAxiom>,
    pub abox: Vec<AboxAssertion>,
}

impl KnowledgeBase {
    pub fn new(tbox: Vec<TBoxAxiom>, abox: Vec<AboxAssertion>) -> Self {
        KnowledgeBase { fragment: Fragment::ElhiBot, tbox, abox }
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        self.abox.iter().flat_map(|a| a.individuals()).map(str::to_owned).collect()
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ax in &self.tbox {
            match ax {
                TBoxAxiom::ConceptInclusion(c, d) => {
                    c.role_names(&mut out);
                    d.role_names(&mut out);
                }
                TBoxAxiom::RoleInclusion(r, s) | TBoxAxiom::DisjointRoles(r, s) => {
                    out.insert(r.name.clone());
                    out.insert(s.name.clone());
                }
            }
        }
        for a in &self.abox {
            match a {
                AboxAssertion::ConceptAssertion(c, _) => c.role_names(&mut out),
                AboxAssertion::RoleAssertion(r, ..) => {
                    out.insert(r.name.clone());
                }
            }
        }
        out
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ax in &self.tbox {
            if let TBoxAxiom::ConceptInclusion(c, d) = ax {
                c.concept_names(&mut out);
                d.concept_names(&mut out);
            }
        }
        for a in &self.abox {
            if let AboxAssertion::ConceptAssertion(c, _) = a {
                c.concept_names(&mut out);
            }
        }
        out
    }

    /// Validates every axiom against the declared fragment.
    pub fn validate(&self) -> Result<(), KbError> {
        for ax in &self.tbox {
            if let Err(reason) = self.fragment.check(ax) {
                return Err(KbError::Fragment {
                    fragment: self.fragment,
                    axiom: print::axiom_to_string(ax),
                    reason,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_kb(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KbError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("axiom `{axiom}` is outside fragment {fragment}: {reason}")]
    Fragment { fragment: Fragment, axiom: String, reason: &'static str },
}

pub use print::{axiom_to_string, concept_to_string};
