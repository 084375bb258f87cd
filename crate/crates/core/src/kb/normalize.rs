// SPDX-License-Identifier: Apache-2.0
//! Normal form with interned symbols.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexSet;

use super::{AboxAssertion, Concept, RoleExpr, TBoxAxiom};

pub type ConceptId = u32;

/// Concept id reserved for `top`; it belongs to every type.
pub const TOP: ConceptId = 0;

/// Interned role expression: `2 * name + inverted`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleId(pub u32);

impl RoleId {
    pub fn new(name: u32, inverted: bool) -> Self {
        RoleId(2 * name + inverted as u32)
    }

    pub fn name_index(self) -> u32 {
        self.0 / 2
    }

    pub fn is_inverse(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn inverse(self) -> Self {
        RoleId(self.0 ^ 1)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Concept and role names of a TBox, queries and ABoxes over it.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    concepts: IndexSet<String>,
    roles: IndexSet<String>,
    fresh_counter: usize,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let mut concepts = IndexSet::new();
        concepts.insert("top".to_owned());
        Vocabulary { concepts, roles: IndexSet::new(), fresh_counter: 0 }
    }
}

impl Vocabulary {
    pub fn concept(&mut self, name: &str) -> ConceptId {
        if let Some(i) = self.concepts.get_index_of(name) {
            return i as ConceptId;
        }
        self.concepts.insert(name.to_owned());
        (self.concepts.len() - 1) as ConceptId
    }

    pub fn lookup_concept(&self, name: &str) -> Option<ConceptId> {
        self.concepts.get_index_of(name).map(|i| i as ConceptId)
    }

    pub fn concept_name(&self, id: ConceptId) -> &str {
        &self.concepts[id as usize]
    }

    pub fn role_name_index(&mut self, name: &str) -> u32 {
        if let Some(i) = self.roles.get_index_of(name) {
            return i as u32;
        }
        self.roles.insert(name.to_owned());
        (self.roles.len() - 1) as u32
    }

    pub fn role(&mut self, r: &RoleExpr) -> RoleId {
        RoleId::new(self.role_name_index(&r.name), r.inverted)
    }

    pub fn lookup_role(&self, r: &RoleExpr) -> Option<RoleId> {
        self.roles.get_index_of(r.name.as_str()).map(|i| RoleId::new(i as u32, r.inverted))
    }

    pub fn role_expr(&self, id: RoleId) -> RoleExpr {
        RoleExpr { name: self.roles[id.name_index() as usize].clone(), inverted: id.is_inverse() }
    }

    pub fn role_name(&self, index: u32) -> &str {
        &self.roles[index as usize]
    }

    /// Number of concept ids, including [`TOP`].
    pub fn num_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn num_role_names(&self) -> usize {
        self.roles.len()
    }

    /// Number of role ids (names and their inverses).
    pub fn num_role_ids(&self) -> usize {
        2 * self.roles.len()
    }

    /// Interns a new name `{prefix}{k}` that is not yet in use.
    pub fn fresh_concept(&mut self, prefix: &str) -> ConceptId {
        loop {
            let name = format!("{prefix}{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.concepts.contains(&name) {
                return self.concept(&name);
            }
        }
    }

    pub fn concept_names(&self) -> impl Iterator<Item = (ConceptId, &str)> {
        self.concepts.iter().enumerate().map(|(i, n)| (i as ConceptId, n.as_str()))
    }

    pub fn role_names(&self) -> impl Iterator<Item = &str> {
        self.roles.iter().map(String::as_str)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalAxiom {
    /// `A <= bot`
    Bottom(ConceptId),
    /// `A <= exists r.B`
    Exists { lhs: ConceptId, role: RoleId, filler: ConceptId },
    /// `top <= A`
    Top(ConceptId),
    /// `B1 & B2 <= A`
    Conj(ConceptId, ConceptId, ConceptId),
    /// `exists r.B <= A`
    ExistsLeft { role: RoleId, filler: ConceptId, rhs: ConceptId },
    RoleIncl(RoleId, RoleId),
    RoleDisjoint(RoleId, RoleId),
}

#[derive(Clone, Debug, Default)]
pub struct NormalizedTBox {
    pub vocab: Vocabulary,
    pub axioms: Vec<NormalAxiom>,
    /// Fresh names and the complex concepts they abbreviate.
    pub registry: BTreeMap<ConceptId, Concept>,
}

/// ABox with atomic assertions only; role assertions use role names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalAbox {
    pub concepts: Vec<(String, String)>,
    pub roles: Vec<(String, String, String)>,
}

impl NormalAbox {
    pub fn individuals(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        for (_, a) in &self.concepts {
            out.insert(a.clone());
        }
        for (_, a, b) in &self.roles {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.concepts.len() + self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_assertions(&self) -> Vec<AboxAssertion> {
        let mut out: Vec<AboxAssertion> =
            self.concepts.iter().map(|(c, a)| AboxAssertion::concept(c.as_str(), a.as_str())).collect();
        out.extend(self.roles.iter().map(|(r, a, b)| AboxAssertion::role(r.as_str(), a.as_str(), b.as_str())));
        out
    }
}

impl NormalizedTBox {
    pub fn from_axioms(vocab: Vocabulary, axioms: Vec<NormalAxiom>) -> Self {
        NormalizedTBox { vocab, axioms, registry: BTreeMap::new() }
    }

    pub fn push(&mut self, ax: NormalAxiom) {
        self.axioms.push(ax);
    }

    /// Interns names that occur outside the TBox, e.g. in an ABox or a query.
    pub fn intern<'a>(
        &mut self,
        concepts: impl IntoIterator<Item = &'a str>,
        roles: impl IntoIterator<Item = &'a str>,
    ) {
        for c in concepts {
            self.vocab.concept(c);
        }
        for r in roles {
            self.vocab.role_name_index(r);
        }
    }

    fn role_str(&self, r: RoleId) -> String {
        self.vocab.role_expr(r).to_string()
    }

    fn c(&self, c: ConceptId) -> String {
        self.vocab.concept_name(c).to_owned()
    }

    pub fn axiom_to_string(&self, ax: &NormalAxiom) -> String {
        match *ax {
            NormalAxiom::Bottom(a) => format!("{} <= bot", self.c(a)),
            NormalAxiom::Exists { lhs, role, filler } => {
                format!("{} <= exists {}.{}", self.c(lhs), self.role_str(role), self.c(filler))
            }
            NormalAxiom::Top(a) => format!("top <= {}", self.c(a)),
            NormalAxiom::Conj(b1, b2, a) => format!("{} & {} <= {}", self.c(b1), self.c(b2), self.c(a)),
            NormalAxiom::ExistsLeft { role, filler, rhs } => {
                format!("exists {}.{} <= {}", self.role_str(role), self.c(filler), self.c(rhs))
            }
            NormalAxiom::RoleIncl(r, s) => format!("{} <= {}", self.role_str(r), self.role_str(s)),
            NormalAxiom::RoleDisjoint(r, s) => format!("{} & {} <= bot", self.role_str(r), self.role_str(s)),
        }
    }

    fn surface_concept(&self, c: ConceptId) -> Concept {
        if c == TOP {
            Concept::Top
        } else {
            Concept::Name(self.c(c))
        }
    }

    /// The axioms as surface syntax.
    pub fn to_surface(&self) -> Vec<TBoxAxiom> {
        self.axioms
            .iter()
            .map(|ax| match *ax {
                NormalAxiom::Bottom(a) => TBoxAxiom::sub(self.surface_concept(a), Concept::Bot),
                NormalAxiom::Exists { lhs, role, filler } => TBoxAxiom::sub(
                    self.surface_concept(lhs),
                    Concept::exists(self.vocab.role_expr(role), self.surface_concept(filler)),
                ),
                NormalAxiom::Top(a) => TBoxAxiom::sub(Concept::Top, self.surface_concept(a)),
                NormalAxiom::Conj(b1, b2, a) => {
                    let lhs = if b1 == b2 {
                        self.surface_concept(b1)
                    } else {
                        Concept::and(self.surface_concept(b1), self.surface_concept(b2))
                    };
                    TBoxAxiom::sub(lhs, self.surface_concept(a))
                }
                NormalAxiom::ExistsLeft { role, filler, rhs } => TBoxAxiom::sub(
                    Concept::exists(self.vocab.role_expr(role), self.surface_concept(filler)),
                    self.surface_concept(rhs),
                ),
                NormalAxiom::RoleIncl(r, s) => TBoxAxiom::RoleInclusion(self.vocab.role_expr(r), self.vocab.role_expr(s)),
                NormalAxiom::RoleDisjoint(r, s) => {
                    TBoxAxiom::DisjointRoles(self.vocab.role_expr(r), self.vocab.role_expr(s))
                }
            })
            .collect()
    }
}

const FRESH_PREFIX: &str = "__n";

struct Normalizer {
    out: NormalizedTBox,
    names: HashMap<Concept, ConceptId>,
    lhs_done: HashSet<ConceptId>,
    rhs_done: HashSet<ConceptId>,
}

fn simplify(c: &Concept) -> Concept {
    match c {
        Concept::Exists(r, f) => match simplify(f) {
            Concept::Bot => Concept::Bot,
            f => Concept::Exists(r.clone(), Box::new(f)),
        },
        Concept::And(a, b) => match (simplify(a), simplify(b)) {
            (Concept::Bot, _) | (_, Concept::Bot) => Concept::Bot,
            (Concept::Top, x) | (x, Concept::Top) => x,
            (x, y) => Concept::And(Box::new(x), Box::new(y)),
        },
        other => other.clone(),
    }
}

impl Normalizer {
    fn name_for(&mut self, c: &Concept) -> ConceptId {
        if let Some(&id) = self.names.get(c) {
            return id;
        }
        let id = self.out.vocab.fresh_concept(FRESH_PREFIX);
        self.names.insert(c.clone(), id);
        self.out.registry.insert(id, c.clone());
        id
    }

    fn atom(&mut self, c: &Concept) -> Option<ConceptId> {
        match c {
            Concept::Top => Some(TOP),
            Concept::Bot => None,
            Concept::Name(n) => Some(self.out.vocab.concept(n)),
            _ => None,
        }
    }

    /// A name X with `c <= X` entailed; `None` for an unsatisfiable `c`.
    fn lhs_atom(&mut self, c: &Concept) -> Option<ConceptId> {
        match c {
            Concept::Top | Concept::Bot | Concept::Name(_) => self.atom(c),
            _ => {
                let x = self.name_for(c);
                if self.lhs_done.insert(x) {
                    self.lhs_into(c, x);
                }
                Some(x)
            }
        }
    }

    fn lhs_into(&mut self, c: &Concept, target: ConceptId) {
        match c {
            Concept::Top => self.out.push(NormalAxiom::Top(target)),
            Concept::Bot => {}
            Concept::Name(_) => {
                let a = self.atom(c).unwrap();
                if a != target {
                    self.out.push(NormalAxiom::Conj(a, a, target));
                }
            }
            Concept::Exists(r, f) => {
                if let Some(fx) = self.lhs_atom(f) {
                    let role = self.out.vocab.role(r);
                    self.out.push(NormalAxiom::ExistsLeft { role, filler: fx, rhs: target });
                }
            }
            Concept::And(a, b) => {
                if let (Some(x), Some(y)) = (self.lhs_atom(a), self.lhs_atom(b)) {
                    self.out.push(NormalAxiom::Conj(x, y, target));
                }
            }
        }
    }

    fn rhs_name(&mut self, d: &Concept) -> ConceptId {
        match d {
            Concept::Top | Concept::Name(_) => self.atom(d).unwrap(),
            _ => {
                let x = self.name_for(d);
                if self.rhs_done.insert(x) {
                    self.rhs_from(x, d);
                }
                x
            }
        }
    }

    fn rhs_from(&mut self, src: ConceptId, d: &Concept) {
        match d {
            Concept::Top => {}
            Concept::Bot => self.out.push(NormalAxiom::Bottom(src)),
            Concept::Name(_) => {
                let b = self.atom(d).unwrap();
                if b != src {
                    self.out.push(if src == TOP { NormalAxiom::Top(b) } else { NormalAxiom::Conj(src, src, b) });
                }
            }
            Concept::Exists(r, f) => {
                let filler = self.rhs_name(f);
                let role = self.out.vocab.role(r);
                self.out.push(NormalAxiom::Exists { lhs: src, role, filler });
            }
            Concept::And(a, b) => {
                self.rhs_from(src, a);
                self.rhs_from(src, b);
            }
        }
    }

    fn inclusion(&mut self, c: &Concept, d: &Concept) {
        let (c, d) = (simplify(c), simplify(d));
        if matches!(c, Concept::Bot) || matches!(d, Concept::Top) {
            return;
        }
        match (&c, &d) {
            (Concept::Name(_) | Concept::Top, _) => {
                let src = self.atom(&c).unwrap();
                self.rhs_from(src, &d);
            }
            (_, Concept::Name(_)) => {
                let target = self.atom(&d).unwrap();
                self.lhs_into(&c, target);
            }
            _ => {
                if let Some(src) = self.lhs_atom(&c) {
                    self.rhs_from(src, &d);
                }
            }
        }
    }
}

/// Normalizes a TBox and ABox together.
///
/// Complex ABox assertions `C(a)` become `X(a)` with `X <= C` added to the TBox.
pub fn normalize(tbox: &[TBoxAxiom], abox: &[AboxAssertion]) -> (NormalizedTBox, NormalAbox) {
    let mut n = Normalizer {
        out: NormalizedTBox::default(),
        names: HashMap::new(),
        lhs_done: HashSet::new(),
        rhs_done: HashSet::new(),
    };
    let mut concept_names = std::collections::BTreeSet::new();
    let mut role_names = std::collections::BTreeSet::new();
    for ax in tbox {
        match ax {
            TBoxAxiom::ConceptInclusion(c, d) => {
                c.concept_names(&mut concept_names);
                d.concept_names(&mut concept_names);
                c.role_names(&mut role_names);
                d.role_names(&mut role_names);
            }
            TBoxAxiom::RoleInclusion(r, s) | TBoxAxiom::DisjointRoles(r, s) => {
                role_names.insert(r.name.clone());
                role_names.insert(s.name.clone());
            }
        }
    }
    for name in &concept_names {
        n.out.vocab.concept(name);
    }
    for name in &role_names {
        n.out.vocab.role_name_index(name);
    }

    for ax in tbox {
        match ax {
            TBoxAxiom::ConceptInclusion(c, d) => n.inclusion(c, d),
            TBoxAxiom::RoleInclusion(r, s) => {
                let (r, s) = (n.out.vocab.role(r), n.out.vocab.role(s));
                if r != s {
                    n.out.push(NormalAxiom::RoleIncl(r, s));
                }
            }
            TBoxAxiom::DisjointRoles(r, s) => {
                let (r, s) = (n.out.vocab.role(r), n.out.vocab.role(s));
                n.out.push(NormalAxiom::RoleDisjoint(r.min(s), r.max(s)));
            }
        }
    }

    let mut abox_out = NormalAbox::default();
    for a in abox {
        match a {
            AboxAssertion::ConceptAssertion(c, ind) => match simplify(c) {
                Concept::Name(name) => abox_out.concepts.push((name, ind.clone())),
                Concept::Top => {
                    abox_out.concepts.push(("top".to_owned(), ind.clone()));
                }
                Concept::Bot => {
                    let x = n.name_for(&Concept::Bot);
                    if n.rhs_done.insert(x) {
                        n.out.push(NormalAxiom::Bottom(x));
                    }
                    abox_out.concepts.push((n.out.vocab.concept_name(x).to_owned(), ind.clone()));
                }
                c => {
                    let x = n.rhs_name(&c);
                    abox_out.concepts.push((n.out.vocab.concept_name(x).to_owned(), ind.clone()));
                }
            },
            AboxAssertion::RoleAssertion(r, a, b) => {
                n.out.vocab.role_name_index(&r.name);
                if r.inverted {
                    abox_out.roles.push((r.name.clone(), b.clone(), a.clone()));
                } else {
                    abox_out.roles.push((r.name.clone(), a.clone(), b.clone()));
                }
            }
        }
    }
    n.out.axioms.sort();
    n.out.axioms.dedup();
    (n.out, abox_out)
}
