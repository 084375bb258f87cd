// SPDX-License-Identifier: Apache-2.0
//! ABox-independent query rewriting.
//!
//! One rewriting step picks existential variables to merge into a single
//! variable `y`, assumes `y` is an anonymous element generated below some
//! element `p`, and replaces every atom touching `y` by atoms over `p`.
//! Paths that dip into the subtree of `y` and come back are discharged
//! through the Loop and FLoop tables. The fixpoint over canonical forms is
//! the rewritten set.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::kb::{ConceptId, NormalizedTBox, RoleId, TOP};
use crate::loops::{LoopError, LoopTables};
use crate::query::{Atom, Cn2rpq, Label, Nnfa, PartRef, StateId, Term};
use crate::reasoner::{conjunction, saturate, Conjunction, SaturatedTBox};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("rewriting produced more than {0} queries")]
    TooManyQueries(usize),
}

#[derive(Clone, Debug)]
pub struct RewriteOptions {
    /// Upper bound on the size of the rewritten set.
    pub max_queries: usize,
    /// Expand each frontier of the fixpoint in parallel.
    pub parallel: bool,
}

impl Default for RewriteOptions {
    fn default() -> Self {
        RewriteOptions { max_queries: 100_000, parallel: false }
    }
}

/// An anonymous successor shape: every element in `d` has an
/// `role`-successor whose type includes `c`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Witness {
    role: RoleId,
    c: Conjunction,
    d: Conjunction,
}

/// Subsets of candidate premises beyond this many are only enumerated up
/// to pairs.
const FULL_SUBSETS: usize = 8;
/// Gamma candidate sets beyond this many states are only enumerated up to
/// triples.
const FULL_GAMMA: usize = 12;

fn subsets<T: Clone>(items: &[T], full_limit: usize, small: usize) -> Vec<Vec<T>> {
    let n = items.len();
    if n <= full_limit {
        return (0..1usize << n)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| items[i].clone()).collect())
            .collect();
    }
    let mut idx: Vec<Vec<usize>> = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..small {
        let mut next = Vec::new();
        for s in &layer {
            for i in s.last().map_or(0, |l| l + 1)..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        idx.extend(next.iter().cloned());
        layer = next;
    }
    idx.into_iter().map(|s| s.into_iter().map(|i| items[i].clone()).collect()).collect()
}

fn witnesses(sat: &SaturatedTBox) -> Vec<Witness> {
    let idx = &sat.index;
    let mut out = BTreeSet::new();
    for a in 0..sat.num_concepts() as ConceptId {
        for &(r, b) in idx.exists_of(a) {
            let base = sat.supers(&[a]);
            if base.bot {
                continue;
            }
            let premises: Vec<ConceptId> = idx
                .down_rules(r)
                .iter()
                .map(|&(x, _)| x)
                .filter(|&x| !base.names.contains(x as usize))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for extra in subsets(&premises, FULL_SUBSETS, 2) {
                let d = conjunction(std::iter::once(a).chain(extra));
                let h = sat.supers(&d);
                if h.bot {
                    continue;
                }
                let c = idx.successor_core(&h.names, r, b);
                out.insert(Witness { role: r, c, d });
            }
        }
    }
    // drop shapes dominated by a smaller D with a larger C
    let all: Vec<Witness> = out.into_iter().collect();
    all.iter()
        .filter(|w| {
            !all.iter().any(|o| {
                o != *w
                    && o.role == w.role
                    && o.d.iter().all(|x| w.d.contains(x))
                    && w.c.iter().all(|x| o.c.contains(x))
            })
        })
        .cloned()
        .collect()
}

/// The end of a decomposed path piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Piece {
    /// `A_{u,s}(t, y)`: enters `y` from a term other than `y`.
    Into(StateId, StateId),
    /// `A_{u,s}(y, y)`.
    Stay(StateId, StateId),
    /// `A_{u,F}(y, t)`: leaves `y` towards another term.
    Out(StateId),
    /// `<A_{u,F}>(y)`.
    Test(StateId),
}

type OptionCache = HashMap<(Piece, Vec<StateId>, Term), Vec<Vec<Atom>>>;

/// The rewriting machinery for one query NNFA over one saturated TBox.
pub struct Rewriter<'a> {
    sat: &'a SaturatedTBox,
    loops: &'a LoopTables,
    nnfa: Arc<Nnfa>,
    witnesses: Vec<Witness>,
    /// Per state: outgoing role transitions.
    role_out: Vec<Vec<(Option<RoleId>, StateId)>>,
    /// Per state: incoming role transitions.
    role_in: Vec<Vec<(Option<RoleId>, StateId)>>,
}

impl<'a> Rewriter<'a> {
    pub fn new(sat: &'a SaturatedTBox, loops: &'a LoopTables) -> Self {
        let nnfa = loops.nnfa().clone();
        let mut role_ids = HashMap::new();
        let mut role_out = vec![Vec::new(); nnfa.state_bound()];
        let mut role_in = vec![Vec::new(); nnfa.state_bound()];
        for a in &nnfa.automata {
            for (s, l, t) in &a.transitions {
                if let Label::Role(r) = l {
                    let id = *role_ids.entry(r.clone()).or_insert_with(|| sat.tbox.vocab.lookup_role(r));
                    role_out[*s as usize].push((id, *t));
                    role_in[*t as usize].push((id, *s));
                }
            }
        }
        Rewriter { sat, loops, nnfa, witnesses: witnesses(sat), role_out, role_in }
    }

    fn finals_of(&self, s: StateId) -> &[StateId] {
        &self.nnfa.automata[self.nnfa.owner(s)].finals
    }

    /// States `v` with `(u, rho, v)` and `T |= r <= rho-`: one step from
    /// the child up to its parent.
    fn up(&self, r: RoleId, u: StateId) -> Vec<StateId> {
        let idx = &self.sat.index;
        let mut v: Vec<StateId> = self.role_out[u as usize]
            .iter()
            .filter(|(rho, _)| rho.is_some_and(|rho| idx.entails_role_inclusion(r, rho.inverse())))
            .map(|&(_, v)| v)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// States `w` with `(w, rho, s)` and `T |= r <= rho`: one step from the
    /// parent down to the child.
    fn down(&self, r: RoleId, s: StateId) -> Vec<StateId> {
        let idx = &self.sat.index;
        let mut v: Vec<StateId> = self.role_in[s as usize]
            .iter()
            .filter(|(rho, _)| rho.is_some_and(|rho| idx.entails_role_inclusion(r, rho)))
            .map(|&(_, w)| w)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn gamma_candidates(&self, s: StateId) -> Vec<StateId> {
        let i = self.nnfa.owner(s);
        let mut out: Vec<StateId> =
            self.nnfa.descendants(i).into_iter().flat_map(|j| self.nnfa.automata[j].states.iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// Inclusion-minimal gamma sets satisfying `holds`.
    fn minimal_gammas(&self, s: StateId, holds: impl Fn(&[StateId]) -> bool) -> Vec<Vec<StateId>> {
        let cands = self.gamma_candidates(s);
        if !holds(&cands) {
            return Vec::new();
        }
        let mut all = subsets(&cands, FULL_GAMMA, 3);
        all.sort_by_key(Vec::len);
        let mut found: Vec<Vec<StateId>> = Vec::new();
        for g in all {
            if found.iter().any(|f| f.iter().all(|x| g.contains(x))) {
                continue;
            }
            if holds(&g) {
                found.push(g);
            }
        }
        if found.is_empty() {
            found.push(cands);
        }
        found
    }

    fn gamma_atoms(&self, gamma: &[StateId], y: &Term) -> Vec<Atom> {
        gamma
            .iter()
            .map(|&g| Atom::Test(PartRef::new(g, self.finals_of(g).iter().copied()), y.clone()))
            .collect()
    }

    /// Alternative replacements for one piece; `finals` is the final set
    /// of a piece leaving `y` or ending in a test.
    fn piece_options(&self, w: &Witness, p: Piece, finals: &[StateId], t: &Term, y: &Term) -> Vec<Vec<Atom>> {
        let r = w.role;
        let mut out = Vec::new();
        match p {
            Piece::Into(u, s) => {
                for v in self.down(r, s) {
                    out.push(vec![Atom::Role(PartRef::new(u, [v]), t.clone(), y.clone())]);
                }
            }
            Piece::Stay(u, s) => {
                for g in self.minimal_gammas(u, |g| self.loops.in_loop(&w.c, u, s, g)) {
                    out.push(self.gamma_atoms(&g, y));
                }
                let downs = self.down(r, s);
                for v in self.up(r, u) {
                    for &x in &downs {
                        out.push(vec![Atom::Role(PartRef::new(v, [x]), y.clone(), y.clone())]);
                    }
                }
            }
            Piece::Out(u) => {
                for v in self.up(r, u) {
                    out.push(vec![Atom::Role(PartRef::new(v, finals.iter().copied()), y.clone(), t.clone())]);
                }
            }
            Piece::Test(u) => {
                for g in self.minimal_gammas(u, |g| self.loops.in_floop(&w.c, u, finals, g)) {
                    out.push(self.gamma_atoms(&g, y));
                }
                for v in self.up(r, u) {
                    out.push(vec![Atom::Test(PartRef::new(v, finals.iter().copied()), y.clone())]);
                }
            }
        }
        out
    }

    /// Replacement alternatives for one atom touching `y`: every split into
    /// pieces through distinct intermediate states, each piece replaced by
    /// one of its options.
    fn atom_options(&self, w: &Witness, atom: &Atom, y: &Term, cache: &mut OptionCache) -> BTreeSet<Vec<Atom>> {
        let (part, from, to, test) = match atom {
            Atom::Role(p, t, u) => (p, t, Some(u), false),
            Atom::Test(p, t) => (p, t, None, true),
            Atom::Concept(..) => unreachable!("concept atoms are not split"),
        };
        let states = &self.nnfa.automata[self.nnfa.owner(part.start)].states;
        let enters = from != y;
        let leaves = to.is_some_and(|u| u != y);
        let other = if enters { from.clone() } else { to.cloned().unwrap_or_else(|| y.clone()) };
        let mut options = |p: Piece, finals: &[StateId]| -> Vec<Vec<Atom>> {
            cache
                .entry((p, finals.to_vec(), other.clone()))
                .or_insert_with(|| self.piece_options(w, p, finals, &other, y))
                .clone()
        };
        let mut out = BTreeSet::new();
        let mut emit = |per_piece: &[Vec<Vec<Atom>>], last: Vec<Vec<Atom>>| {
            let mut all = per_piece.to_vec();
            all.push(last);
            for combo in product(&all) {
                let mut atoms = combo;
                atoms.sort();
                atoms.dedup();
                out.insert(atoms);
            }
        };
        let mut stack: Vec<(StateId, Vec<StateId>, Vec<Vec<Vec<Atom>>>)> = vec![(part.start, Vec::new(), Vec::new())];
        while let Some((u, visited, per_piece)) = stack.pop() {
            let into = per_piece.is_empty() && enters;
            let stay = |u, s| if into { Piece::Into(u, s) } else { Piece::Stay(u, s) };
            if test || leaves {
                if !into {
                    let p = if test { Piece::Test(u) } else { Piece::Out(u) };
                    let last = options(p, &part.finals);
                    if !last.is_empty() {
                        emit(&per_piece, last);
                    }
                }
            } else {
                for &f in &part.finals {
                    let last = options(stay(u, f), &[]);
                    if !last.is_empty() {
                        emit(&per_piece, last);
                    }
                }
            }
            for &s in states {
                if visited.contains(&s) {
                    continue;
                }
                let opts = options(stay(u, s), &[]);
                if opts.is_empty() {
                    continue;
                }
                let mut p = per_piece.clone();
                p.push(opts);
                let mut v = visited.clone();
                v.push(s);
                stack.push((s, v, p));
            }
        }
        out
    }

    /// All queries obtained from `q` by one rewriting step.
    pub fn step(&self, q: &Cn2rpq) -> Vec<Cn2rpq> {
        let evars: Vec<String> = q.existential_vars().into_iter().collect();
        let mut out = Vec::new();
        let n = evars.len();
        for mask in 1..(1usize << n) {
            let leaf: Vec<&String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &evars[i]).collect();
            let y = Term::Var(leaf[0].clone());
            let merged: BTreeSet<Atom> = q
                .atoms
                .iter()
                .map(|a| a.map_terms(|t| match t {
                    Term::Var(v) if leaf.contains(&v) => y.clone(),
                    t => t.clone(),
                }))
                .collect();
            let mut required: Vec<Option<ConceptId>> = Vec::new();
            let mut keep: Vec<Atom> = Vec::new();
            let mut touching: Vec<Atom> = Vec::new();
            for a in merged {
                match &a {
                    Atom::Concept(b, t) if *t == y => required.push(self.sat.concept_id(b).or((b == "top").then_some(TOP))),
                    Atom::Concept(..) => keep.push(a),
                    _ if a.terms().contains(&&y) => touching.push(a),
                    _ => keep.push(a),
                }
            }
            for w in &self.witnesses {
                let c_supers = self.sat.supers(&w.c);
                if !required.iter().all(|b| b.is_some_and(|b| c_supers.contains(b))) {
                    continue;
                }
                let mut cache = HashMap::new();
                let mut per_atom: Vec<Vec<Vec<Atom>>> = Vec::new();
                let mut dead = false;
                for a in &touching {
                    let opts: Vec<Vec<Atom>> = self.atom_options(w, a, &y, &mut cache).into_iter().collect();
                    if opts.is_empty() {
                        dead = true;
                        break;
                    }
                    per_atom.push(opts);
                }
                if dead {
                    continue;
                }
                let d_atoms: Vec<Atom> = w
                    .d
                    .iter()
                    .map(|&c| Atom::Concept(self.sat.tbox.vocab.concept_name(c).to_owned(), y.clone()))
                    .collect();
                for combo in product(&per_atom) {
                    let mut atoms: Vec<Atom> = keep.iter().cloned().chain(combo).collect();
                    atoms.extend(d_atoms.iter().cloned());
                    atoms.sort();
                    atoms.dedup();
                    out.push(Cn2rpq { answer_vars: q.answer_vars.clone(), atoms, nnfa: q.nnfa.clone() });
                }
            }
        }
        out
    }
}

fn product<T: Clone>(lists: &[Vec<Vec<T>>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for l in lists {
        let mut next = Vec::with_capacity(acc.len() * l.len());
        for a in &acc {
            for x in l {
                let mut v = a.clone();
                v.extend(x.iter().cloned());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Key identifying a query up to atom order and renaming of existential
/// variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryKey {
    answer_vars: Vec<String>,
    atoms: Vec<Atom>,
}

const EXACT_KEY_VARS: usize = 7;

fn renamed(q: &Cn2rpq, names: &BTreeMap<&str, String>) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = q
        .atoms
        .iter()
        .map(|a| a.map_terms(|t| match t {
            Term::Var(v) => Term::Var(names.get(v.as_str()).cloned().unwrap_or_else(|| v.clone())),
            t => t.clone(),
        }))
        .collect();
    atoms.sort();
    atoms.dedup();
    atoms
}

/// The canonical key of `q`.
///
/// Exact for up to seven existential variables; beyond that variables are
/// numbered by first occurrence, which may separate equivalent queries
/// but never merges different ones.
pub fn canonical_query_form(q: &Cn2rpq) -> QueryKey {
    let evars: Vec<String> = q.existential_vars().into_iter().collect();
    let slot = |i: usize| format!("#{i}");
    let best = if evars.len() <= EXACT_KEY_VARS {
        let mut perm: Vec<usize> = (0..evars.len()).collect();
        let mut best: Option<Vec<Atom>> = None;
        loop {
            let names: BTreeMap<&str, String> =
                evars.iter().enumerate().map(|(i, v)| (v.as_str(), slot(perm[i]))).collect();
            let atoms = renamed(q, &names);
            if best.as_ref().is_none_or(|b| atoms < *b) {
                best = Some(atoms);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap()
    } else {
        let blank: BTreeMap<&str, String> = evars.iter().map(|v| (v.as_str(), "#".to_owned())).collect();
        let mut order: Vec<(Atom, usize)> = q
            .atoms
            .iter()
            .enumerate()
            .map(|(k, a)| {
                (
                    a.map_terms(|t| match t {
                        Term::Var(v) if blank.contains_key(v.as_str()) => Term::Var("#".to_owned()),
                        t => t.clone(),
                    }),
                    k,
                )
            })
            .collect();
        order.sort();
        let mut names: BTreeMap<&str, String> = BTreeMap::new();
        for (_, k) in order {
            for t in q.atoms[k].terms() {
                if let Term::Var(v) = t {
                    if blank.contains_key(v.as_str()) && !names.contains_key(v.as_str()) {
                        let n = names.len();
                        names.insert(v.as_str(), slot(n));
                    }
                }
            }
        }
        renamed(q, &names)
    };
    QueryKey { answer_vars: q.answer_vars.clone(), atoms: best }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// The rewritten set of `q` over the tables' TBox, sorted by canonical key.
pub fn rewrite_with(
    q: &Cn2rpq,
    sat: &SaturatedTBox,
    loops: &LoopTables,
    opts: &RewriteOptions,
) -> Result<Vec<Cn2rpq>, RewriteError> {
    let rw = Rewriter::new(sat, loops);
    let mut seen: BTreeMap<QueryKey, Cn2rpq> = BTreeMap::new();
    let mut frontier = vec![q.clone()];
    seen.insert(canonical_query_form(q), q.clone());
    while !frontier.is_empty() {
        let next: Vec<Cn2rpq> = if opts.parallel {
            crate::par::flat_map(frontier, |q| rw.step(&q))
        } else {
            frontier.iter().flat_map(|q| rw.step(q)).collect()
        };
        frontier = Vec::new();
        for q2 in next {
            let key = canonical_query_form(&q2);
            if let std::collections::btree_map::Entry::Vacant(e) = seen.entry(key) {
                e.insert(q2.clone());
                frontier.push(q2);
                if seen.len() > opts.max_queries {
                    return Err(RewriteError::TooManyQueries(opts.max_queries));
                }
            }
        }
    }
    Ok(seen.into_values().collect())
}

fn tables(q: &Cn2rpq, t: &NormalizedTBox) -> Result<(SaturatedTBox, LoopTables), RewriteError> {
    let mut t = t.clone();
    t.intern(q.concept_names().iter().map(String::as_str), q.role_names().iter().map(String::as_str));
    let loops = LoopTables::new(q.nnfa.clone(), t.clone())?;
    Ok((saturate(t), loops))
}

/// The rewritten set of `q` over `t`.
pub fn rewrite(q: &Cn2rpq, t: &NormalizedTBox) -> Result<Vec<Cn2rpq>, RewriteError> {
    let (sat, loops) = tables(q, t)?;
    rewrite_with(q, &sat, &loops, &RewriteOptions::default())
}

/// Queries produced by a single rewriting step, `q` itself excluded.
pub fn rewrite_step(q: &Cn2rpq, t: &NormalizedTBox) -> Result<Vec<Cn2rpq>, RewriteError> {
    let (sat, loops) = tables(q, t)?;
    let mut by_key: BTreeMap<QueryKey, Cn2rpq> = BTreeMap::new();
    for q2 in Rewriter::new(&sat, &loops).step(q) {
        by_key.entry(canonical_query_form(&q2)).or_insert(q2);
    }
    Ok(by_key.into_values().collect())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{normalize, parse_kb};
    use crate::query::parse_query;

    fn tbox(text: &str) -> NormalizedTBox {
        let kb = parse_kb(text).unwrap();
        normalize(&kb.tbox, &kb.abox).0
    }

    fn printed(qs: &[Cn2rpq]) -> Vec<String> {
        qs.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn empty_tbox_is_a_fixpoint() {
        let q = parse_query("q(x, y) <- p(x, y)").unwrap();
        assert_eq!(printed(&rewrite(&q, &tbox("")).unwrap()), vec!["q(x, y) <- p(x, y)"]);
        let q = parse_query("q() <- p('a', 'b')").unwrap();
        assert_eq!(rewrite(&q, &tbox("")).unwrap().len(), 1);
    }

    #[test]
    fn existential_witness() {
        let q = parse_query("q() <- B(y)").unwrap();
        let out = printed(&rewrite(&q, &tbox("A <= exists r.B")).unwrap());
        assert!(out.contains(&"q() <- A(y)".to_owned()), "{out:?}");
    }

    #[test]
    fn path_into_witness() {
        let q = parse_query("q(x) <- r(x, y), B(y)").unwrap();
        let out = printed(&rewrite(&q, &tbox("A <= exists r.B")).unwrap());
        assert!(out.contains(&"q(x) <- A(y), top?(x, y)".to_owned()), "{out:?}");
    }

    #[test]
    fn terms_never_grow() {
        let q = parse_query("q(x) <- (r . s-)(x, y), <t>(y), C(z), s(y, z)").unwrap();
        let t = tbox("A <= exists r.B\nB <= exists s.C\nexists t.top <= A");
        let terms = q.terms();
        for q2 in rewrite(&q, &t).unwrap() {
            assert!(q2.terms().is_subset(&terms), "{q2}");
        }
    }

    #[test]
    fn canonical_form() {
        let key = |s: &str| canonical_query_form(&parse_query(s).unwrap());
        assert_eq!(key("q(x) <- p(x, y), A(y)"), key("q(x) <- A(y), p(x, y)"));
        assert_eq!(key("q() <- A(y)"), key("q() <- A(z)"));
        assert_ne!(key("q(x) <- p(x, x)"), key("q(x) <- p(x, y)"));
    }

    #[test]
    fn subsets_small_mode() {
        assert_eq!(subsets(&[1, 2, 3], 8, 1).len(), 8);
        assert_eq!(subsets(&[1, 2, 3], 2, 2).len(), 7);
    }
}
