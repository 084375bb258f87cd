// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use indexmap::IndexSet;

use super::{saturate, SaturatedTBox};
use crate::kb::{normalize, AboxAssertion, ConceptId, NormalAbox, RoleExpr, RoleId, TBoxAxiom, TOP};

/// Entailed types and role edges of the named part of the canonical model.
#[derive(Debug)]
pub struct AboxModel {
    sat: Arc<SaturatedTBox>,
    inds: IndexSet<String>,
    types: Vec<FixedBitSet>,
    /// Asserted edges in both orientations: `p(a,b)` gives `(p, b)` at `a`
    /// and `(p-, a)` at `b`.
    asserted: Vec<Vec<(RoleId, usize)>>,
    /// Asserted edges closed under the role hierarchy.
    edges: Vec<Vec<(RoleId, usize)>>,
    consistent: bool,
}

impl AboxModel {
    /// Builds the model; every ABox name must already be interned in the
    /// saturated TBox. `extra_inds` joins the individual domain without
    /// assertions.
    pub fn new(sat: Arc<SaturatedTBox>, abox: &NormalAbox, extra_inds: impl IntoIterator<Item = String>) -> Self {
        let mut inds: IndexSet<String> = IndexSet::new();
        let mut all: Vec<String> = abox.individuals().into_iter().collect();
        all.extend(extra_inds);
        all.sort();
        for a in all {
            inds.insert(a);
        }
        let n = inds.len();
        let idx = &sat.index;
        let mut types: Vec<FixedBitSet> = vec![idx.empty_set(); n];
        for (c, a) in &abox.concepts {
            let id = sat.tbox.vocab.lookup_concept(c).unwrap_or_else(|| panic!("concept `{c}` not interned"));
            types[inds.get_index_of(a).unwrap()].insert(id as usize);
        }
        let mut asserted: Vec<Vec<(RoleId, usize)>> = vec![Vec::new(); n];
        for (r, a, b) in &abox.roles {
            let role = sat.tbox.vocab.lookup_role(&RoleExpr::new(r.as_str())).unwrap_or_else(|| panic!("role `{r}` not interned"));
            let (ia, ib) = (inds.get_index_of(a).unwrap(), inds.get_index_of(b).unwrap());
            asserted[ia].push((role, ib));
            asserted[ib].push((role.inverse(), ia));
        }
        for v in &mut asserted {
            v.sort_unstable();
            v.dedup();
        }
        let edges: Vec<Vec<(RoleId, usize)>> = asserted
            .iter()
            .map(|v| {
                let mut out: Vec<(RoleId, usize)> =
                    v.iter().flat_map(|&(r, b)| idx.role_supers(r).map(move |s| (s, b))).collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();

        let mut consistent = true;
        for v in &asserted {
            let mut by_target: BTreeMap<usize, Vec<RoleId>> = BTreeMap::new();
            for &(r, b) in v {
                by_target.entry(b).or_default().extend(idx.role_supers(r));
            }
            if by_target.into_values().any(|roles| idx.roles_clash(roles)) {
                consistent = false;
            }
        }

        // fixpoint over named neighbours and anonymous successors
        let mut changed = true;
        while changed && consistent {
            changed = false;
            for a in 0..n {
                let mut h = types[a].clone();
                let before = h.count_ones(..);
                loop {
                    idx.close_local(&mut h);
                    let round = h.count_ones(..);
                    for &(r, b) in &asserted[a] {
                        for &(bc, ac) in idx.up_rules(r) {
                            if types[b].contains(bc as usize) || (b == a && h.contains(bc as usize)) {
                                h.insert(ac as usize);
                            }
                        }
                    }
                    for (r, core) in sat.successors_of_type(&h) {
                        let child = sat.supers(&core);
                        if child.bot || idx.role_clashes(r) {
                            consistent = false;
                        }
                        for &(bc, ac) in idx.up_rules(r) {
                            if child.names.contains(bc as usize) {
                                h.insert(ac as usize);
                            }
                        }
                    }
                    if h.count_ones(..) == round {
                        break;
                    }
                }
                if idx.is_bottom(&h) {
                    consistent = false;
                }
                if h.count_ones(..) != before {
                    types[a] = h;
                    changed = true;
                }
            }
        }
        AboxModel { sat, inds, types, asserted, edges, consistent }
    }

    pub fn saturated(&self) -> &Arc<SaturatedTBox> {
        &self.sat
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn num_individuals(&self) -> usize {
        self.inds.len()
    }

    pub fn individuals(&self) -> impl Iterator<Item = &str> {
        self.inds.iter().map(String::as_str)
    }

    pub fn individual(&self, i: usize) -> &str {
        &self.inds[i]
    }

    pub fn ind_index(&self, name: &str) -> Option<usize> {
        self.inds.get_index_of(name)
    }

    /// Entailed concept names of individual `i`.
    pub fn type_of(&self, i: usize) -> &FixedBitSet {
        &self.types[i]
    }

    pub fn has_concept(&self, i: usize, c: ConceptId) -> bool {
        c == TOP || self.types[i].contains(c as usize)
    }

    /// `T, A |= name(ind)`; unknown names hold nowhere except `top`, and an
    /// inconsistent KB entails every assertion.
    pub fn entails_assertion(&self, name: &str, ind: &str) -> bool {
        if !self.consistent {
            return true;
        }
        match (self.sat.concept_id(name), self.ind_index(ind)) {
            (Some(c), Some(i)) => self.has_concept(i, c),
            (None, Some(_)) => name == "top",
            _ => false,
        }
    }

    /// Entailed edges `(s, b)` leaving individual `i`.
    pub fn edges_from(&self, i: usize) -> &[(RoleId, usize)] {
        &self.edges[i]
    }

    /// Asserted edges leaving `i` in both orientations.
    pub fn asserted_from(&self, i: usize) -> &[(RoleId, usize)] {
        &self.asserted[i]
    }

    pub fn entailed_role_edge(&self, r: RoleId, a: usize, b: usize) -> bool {
        self.edges[a].binary_search(&(r, b)).is_ok()
    }
}

/// A knowledge base ready for reasoning and query answering.
#[derive(Debug, Clone)]
pub struct PreparedKb {
    pub sat: Arc<SaturatedTBox>,
    pub model: Arc<AboxModel>,
    pub abox: NormalAbox,
}

/// Normalizes, interns the extra signature, saturates and builds the ABox
/// model. Extra names typically come from a query.
pub fn prepare<'a>(
    tbox: &[TBoxAxiom],
    abox: &[AboxAssertion],
    concepts: impl IntoIterator<Item = &'a str>,
    roles: impl IntoIterator<Item = &'a str>,
    inds: impl IntoIterator<Item = &'a str>,
) -> PreparedKb {
    let (mut t, a) = normalize(tbox, abox);
    t.intern(a.concepts.iter().map(|(c, _)| c.as_str()), a.roles.iter().map(|(r, ..)| r.as_str()));
    t.intern(concepts, roles);
    let sat = Arc::new(saturate(t));
    let model = Arc::new(AboxModel::new(sat.clone(), &a, inds.into_iter().map(str::to_owned)));
    PreparedKb { sat, model, abox: a }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_kb;

    fn kb(text: &str) -> PreparedKb {
        let kb = parse_kb(text).unwrap();
        prepare(&kb.tbox, &kb.abox, [], [], [])
    }

    #[test]
    fn direct_clash() {
        assert!(!kb("A & B <= bot\nA(a)\nB(a)").model.is_consistent());
    }

    #[test]
    fn role_clash() {
        assert!(!kb("r & s <= bot\nr(a, b)\ns(a, b)").model.is_consistent());
        assert!(kb("r & s <= bot\nr(a, b)\ns(b, a)").model.is_consistent());
        assert!(!kb("r & s- <= bot\nr(a, b)\ns(b, a)").model.is_consistent());
    }

    #[test]
    fn clash_in_anonymous_part() {
        assert!(!kb("A <= exists r.B\nB <= bot\nA(a)").model.is_consistent());
    }

    #[test]
    fn instance_checks() {
        let k = kb("exists r.B <= A\nr(a, b)\nB(b)");
        assert!(k.model.entails_assertion("A", "a"));
        assert!(!k.model.entails_assertion("A", "b"));
        let k = kb("A <= exists r.B\nexists r.top <= D\nA(a)");
        assert!(k.model.entails_assertion("D", "a"));
    }

    #[test]
    fn inconsistent_kb_entails_everything() {
        let k = kb("r & r <= bot\nr(a, a)\nB(b)");
        assert!(k.model.entails_assertion("A", "a"));
        assert!(k.model.entails_assertion("Z", "b"));
    }

    #[test]
    fn role_edges_follow_hierarchy_and_inversion() {
        let k = kb("role p, s\np <= s\np(a, b)");
        let v = &k.sat.tbox.vocab;
        let p = v.lookup_role(&RoleExpr::new("p")).unwrap();
        let s = v.lookup_role(&RoleExpr::new("s")).unwrap();
        let (a, b) = (k.model.ind_index("a").unwrap(), k.model.ind_index("b").unwrap());
        assert!(k.model.entailed_role_edge(p, a, b));
        assert!(k.model.entailed_role_edge(p.inverse(), b, a));
        assert!(k.model.entailed_role_edge(s, a, b));
        assert!(!k.model.entailed_role_edge(p, b, a));
    }
}
