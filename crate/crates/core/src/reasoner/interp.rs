// SPDX-License-Identifier: Apache-2.0
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexSet;

use crate::kb::{AboxAssertion, Concept, RoleExpr};

/// An explicit finite interpretation. Objects are named; an individual
/// denotes the object of the same name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiniteInterpretation {
    objects: IndexSet<String>,
    concepts: BTreeMap<String, BTreeSet<usize>>,
    roles: BTreeMap<String, BTreeSet<(usize, usize)>>,
}

impl FiniteInterpretation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads atomic assertions as a closed-world graph.
    ///
    /// Complex concept assertions are rejected with the offending text.
    pub fn from_assertions(abox: &[AboxAssertion]) -> Result<Self, String> {
        let mut i = FiniteInterpretation::new();
        for a in abox {
            match a {
                AboxAssertion::ConceptAssertion(Concept::Name(c), x) => {
                    let o = i.add_object(x);
                    i.add_concept(c, o);
                }
                AboxAssertion::ConceptAssertion(Concept::Top, x) => {
                    i.add_object(x);
                }
                AboxAssertion::ConceptAssertion(c, x) => {
                    return Err(format!("complex assertion ({})({x}) in a plain graph", crate::kb::concept_to_string(c)))
                }
                AboxAssertion::RoleAssertion(r, x, y) => {
                    let (ox, oy) = (i.add_object(x), i.add_object(y));
                    if r.inverted {
                        i.add_role(&r.name, oy, ox);
                    } else {
                        i.add_role(&r.name, ox, oy);
                    }
                }
            }
        }
        Ok(i)
    }

    pub fn add_object(&mut self, name: &str) -> usize {
        match self.objects.get_index_of(name) {
            Some(o) => o,
            None => {
                self.objects.insert(name.to_owned());
                self.objects.len() - 1
            }
        }
    }

    pub fn add_concept(&mut self, name: &str, o: usize) {
        self.concepts.entry(name.to_owned()).or_default().insert(o);
    }

    pub fn add_role(&mut self, name: &str, o: usize, p: usize) {
        self.roles.entry(name.to_owned()).or_default().insert((o, p));
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object(&self, name: &str) -> Option<usize> {
        self.objects.get_index_of(name)
    }

    pub fn object_name(&self, o: usize) -> &str {
        &self.objects[o]
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(String::as_str)
    }

    /// Membership in a concept name; `top` holds everywhere.
    pub fn has_concept(&self, name: &str, o: usize) -> bool {
        name == "top" || self.concepts.get(name).is_some_and(|s| s.contains(&o))
    }

    pub fn concept_ext(&self, name: &str) -> BTreeSet<usize> {
        if name == "top" {
            return (0..self.len()).collect();
        }
        self.concepts.get(name).cloned().unwrap_or_default()
    }

    /// Pairs of a role expression; inverses are derived.
    pub fn role_ext(&self, r: &RoleExpr) -> BTreeSet<(usize, usize)> {
        let base = self.roles.get(&r.name).cloned().unwrap_or_default();
        if r.inverted {
            base.into_iter().map(|(a, b)| (b, a)).collect()
        } else {
            base
        }
    }

    pub fn has_role(&self, r: &RoleExpr, o: usize, p: usize) -> bool {
        let pair = if r.inverted { (p, o) } else { (o, p) };
        self.roles.get(&r.name).is_some_and(|s| s.contains(&pair))
    }

    pub fn concept_names(&self) -> impl Iterator<Item = &str> {
        self.concepts.keys().map(String::as_str)
    }

    pub fn role_names(&self) -> impl Iterator<Item = &str> {
        self.roles.keys().map(String::as_str)
    }

    /// Successor lists per role expression, for repeated traversal.
    pub fn adjacency(&self) -> Adjacency {
        let mut out: BTreeMap<RoleExpr, Vec<Vec<usize>>> = BTreeMap::new();
        for (name, pairs) in &self.roles {
            let mut fwd = vec![Vec::new(); self.len()];
            let mut bwd = vec![Vec::new(); self.len()];
            for &(a, b) in pairs {
                fwd[a].push(b);
                bwd[b].push(a);
            }
            out.insert(RoleExpr::new(name.as_str()), fwd);
            out.insert(RoleExpr::inv(name.as_str()), bwd);
        }
        Adjacency { succ: out, empty: Vec::new() }
    }

    /// The sub-interpretation induced by the objects satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> FiniteInterpretation {
        let mut out = FiniteInterpretation::new();
        let mut map = vec![None; self.len()];
        for (o, name) in self.objects.iter().enumerate() {
            if keep(name) {
                map[o] = Some(out.add_object(name));
            }
        }
        for (c, ext) in &self.concepts {
            for &o in ext {
                if let Some(n) = map[o] {
                    out.add_concept(c, n);
                }
            }
        }
        for (r, ext) in &self.roles {
            for &(a, b) in ext {
                if let (Some(x), Some(y)) = (map[a], map[b]) {
                    out.add_role(r, x, y);
                }
            }
        }
        out
    }
}

/// Successor lists of a [`FiniteInterpretation`].
#[derive(Debug)]
pub struct Adjacency {
    succ: BTreeMap<RoleExpr, Vec<Vec<usize>>>,
    empty: Vec<usize>,
}

impl Adjacency {
    pub fn successors(&self, r: &RoleExpr, o: usize) -> &[usize] {
        self.succ.get(r).map_or(&self.empty, |v| &v[o])
    }
}

/// Plain-graph text: one atomic assertion per line.
impl fmt::Display for FiniteInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut mentioned = vec![false; self.len()];
        for (c, ext) in &self.concepts {
            for &o in ext {
                mentioned[o] = true;
                writeln!(f, "{c}({})", self.objects[o])?;
            }
        }
        for (r, ext) in &self.roles {
            for &(a, b) in ext {
                mentioned[a] = true;
                mentioned[b] = true;
                writeln!(f, "{r}({}, {})", self.objects[a], self.objects[b])?;
            }
        }
        for (o, m) in mentioned.iter().enumerate() {
            if !m {
                writeln!(f, "top({})", self.objects[o])?;
            }
        }
        Ok(())
    }
}
