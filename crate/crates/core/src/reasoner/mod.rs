// SPDX-License-Identifier: Apache-2.0
//! Consequence-based saturation for normalized ELHI-bottom TBoxes.
//!
//! Reasoning is organised around contexts: one per conjunction of concept
//! names (its core). A context stands for an element whose type is forced
//! by its core, its anonymous successors, and nothing else. Successor
//! cores already carry whatever the parent pushes down through inverse
//! existentials, so contexts never need to look upwards.

mod abox;
mod canonical;
mod interp;

use std::collections::HashMap;
use std::sync::Mutex;

use fixedbitset::FixedBitSet;

use crate::kb::{ConceptId, NormalAxiom, NormalizedTBox, RoleId, TOP};

pub use abox::{prepare, AboxModel, PreparedKb};
pub use canonical::{materialize_canonical, MaterializeError};
pub use interp::{Adjacency, FiniteInterpretation};

/// A conjunction of concept names as a sorted list; empty means `top`.
pub type Conjunction = Vec<ConceptId>;

/// Sorts and deduplicates names, dropping `top`.
pub fn conjunction(names: impl IntoIterator<Item = ConceptId>) -> Conjunction {
    let mut v: Vec<ConceptId> = names.into_iter().filter(|&c| c != TOP).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Axioms of a normalized TBox indexed for rule application.
#[derive(Debug)]
pub struct TBoxIndex {
    num_concepts: usize,
    /// `role_sup[r]` holds every `s` with `T |= r <= s`.
    role_sup: Vec<FixedBitSet>,
    tops: Vec<ConceptId>,
    bottoms: FixedBitSet,
    /// `conj[b]` holds `(b2, a)` for each `b & b2 <= a`.
    conj: Vec<Vec<(ConceptId, ConceptId)>>,
    exists: Vec<Vec<(RoleId, ConceptId)>>,
    up: Vec<Vec<(ConceptId, ConceptId)>>,
    down: Vec<Vec<(ConceptId, ConceptId)>>,
    role_clash: FixedBitSet,
    disjoint: Vec<(RoleId, RoleId)>,
}

impl TBoxIndex {
    pub fn new(t: &NormalizedTBox) -> Self {
        let nc = t.vocab.num_concepts();
        let nr = t.vocab.num_role_ids();
        let mut incl: Vec<Vec<usize>> = vec![Vec::new(); nr];
        let mut tops = Vec::new();
        let mut bottoms = FixedBitSet::with_capacity(nc);
        let mut conj = vec![Vec::new(); nc];
        let mut exists = vec![Vec::new(); nc];
        let mut left = Vec::new();
        let mut disjoint = Vec::new();
        for ax in &t.axioms {
            match *ax {
                NormalAxiom::Bottom(a) => bottoms.insert(a as usize),
                NormalAxiom::Exists { lhs, role, filler } => exists[lhs as usize].push((role, filler)),
                NormalAxiom::Top(a) => tops.push(a),
                NormalAxiom::Conj(b1, b2, a) => {
                    conj[b1 as usize].push((b2, a));
                    if b1 != b2 {
                        conj[b2 as usize].push((b1, a));
                    }
                }
                NormalAxiom::ExistsLeft { role, filler, rhs } => left.push((role, filler, rhs)),
                NormalAxiom::RoleIncl(r, s) => {
                    incl[r.index()].push(s.index());
                    incl[r.inverse().index()].push(s.inverse().index());
                }
                NormalAxiom::RoleDisjoint(r, s) => disjoint.push((r, s)),
            }
        }
        let role_sup: Vec<FixedBitSet> = (0..nr)
            .map(|r| {
                let mut seen = FixedBitSet::with_capacity(nr);
                let mut stack = vec![r];
                seen.insert(r);
                while let Some(x) = stack.pop() {
                    for &y in &incl[x] {
                        if !seen.put(y) {
                            stack.push(y);
                        }
                    }
                }
                seen
            })
            .collect();
        let mut up = vec![Vec::new(); nr];
        let mut down = vec![Vec::new(); nr];
        for r in 0..nr {
            let inv = RoleId(r as u32).inverse().index();
            for &(s, b, a) in &left {
                if role_sup[r].contains(s.index()) {
                    up[r].push((b, a));
                }
                if role_sup[inv].contains(s.index()) {
                    down[r].push((b, a));
                }
            }
            up[r].sort_unstable();
            up[r].dedup();
            down[r].sort_unstable();
            down[r].dedup();
        }
        let mut idx = TBoxIndex {
            num_concepts: nc,
            role_sup,
            tops,
            bottoms,
            conj,
            exists,
            up,
            down,
            role_clash: FixedBitSet::with_capacity(nr),
            disjoint,
        };
        for r in 0..nr {
            if idx.roles_clash(idx.role_sup[r].ones().map(|s| RoleId(s as u32))) {
                idx.role_clash.insert(r);
            }
        }
        idx
    }

    pub fn num_concepts(&self) -> usize {
        self.num_concepts
    }

    pub fn num_role_ids(&self) -> usize {
        self.role_sup.len()
    }

    pub fn entails_role_inclusion(&self, r: RoleId, s: RoleId) -> bool {
        self.role_sup[r.index()].contains(s.index())
    }

    /// Every `s` with `T |= r <= s`.
    pub fn role_supers(&self, r: RoleId) -> impl Iterator<Item = RoleId> + '_ {
        self.role_sup[r.index()].ones().map(|s| RoleId(s as u32))
    }

    /// Existentials `A <= exists r.B` with left side `a`.
    pub fn exists_of(&self, a: ConceptId) -> &[(RoleId, ConceptId)] {
        &self.exists[a as usize]
    }

    /// Pairs `(B, A)` such that an `r`-successor in `B` puts its origin in `A`.
    pub fn up_rules(&self, r: RoleId) -> &[(ConceptId, ConceptId)] {
        &self.up[r.index()]
    }

    /// Pairs `(B, A)` such that an origin in `B` puts its `r`-successor in `A`.
    pub fn down_rules(&self, r: RoleId) -> &[(ConceptId, ConceptId)] {
        &self.down[r.index()]
    }

    /// Whether a single edge labelled with all these roles violates a
    /// negative role inclusion.
    pub fn roles_clash(&self, roles: impl IntoIterator<Item = RoleId>) -> bool {
        let mut set = FixedBitSet::with_capacity(self.role_sup.len());
        for r in roles {
            set.insert(r.index());
        }
        self.disjoint.iter().any(|&(p, q)| {
            (set.contains(p.index()) && set.contains(q.index()))
                || (set.contains(p.inverse().index()) && set.contains(q.inverse().index()))
        })
    }

    /// Whether an edge generated by `r` alone violates a negative role inclusion.
    pub fn role_clashes(&self, r: RoleId) -> bool {
        self.role_clash.contains(r.index())
    }

    pub fn is_bottom(&self, h: &FixedBitSet) -> bool {
        !h.is_disjoint(&self.bottoms)
    }

    /// Closes `h` under `top <= A` and `B1 & B2 <= A`.
    pub fn close_local(&self, h: &mut FixedBitSet) {
        let mut stack: Vec<ConceptId> = Vec::new();
        for &a in &self.tops {
            if !h.put(a as usize) {
                stack.push(a);
            }
        }
        if !h.put(TOP as usize) {
            stack.push(TOP);
        }
        stack.extend(h.ones().map(|c| c as ConceptId));
        while let Some(b) = stack.pop() {
            for &(b2, a) in &self.conj[b as usize] {
                if h.contains(b2 as usize) && !h.put(a as usize) {
                    stack.push(a);
                }
            }
        }
    }

    /// Core of the `r`-successor created for an element of type `h` by
    /// an axiom with filler `filler`.
    pub fn successor_core(&self, h: &FixedBitSet, r: RoleId, filler: ConceptId) -> Conjunction {
        conjunction(
            std::iter::once(filler)
                .chain(self.down[r.index()].iter().filter(|(b, _)| h.contains(*b as usize)).map(|&(_, a)| a)),
        )
    }

    pub fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.num_concepts)
    }

    pub fn set_of(&self, names: &[ConceptId]) -> FixedBitSet {
        let mut h = self.empty_set();
        for &c in names {
            h.insert(c as usize);
        }
        h
    }
}

#[derive(Debug)]
struct Context {
    core: Conjunction,
    h: FixedBitSet,
    bot: bool,
    succ: Vec<(RoleId, usize)>,
    preds: Vec<usize>,
    queued: bool,
}

#[derive(Debug, Default)]
struct Contexts {
    ctxs: Vec<Context>,
    by_core: HashMap<Conjunction, usize>,
}

/// Entailed super-names of a conjunction.
#[derive(Clone, Debug)]
pub struct Supers {
    pub names: FixedBitSet,
    /// The conjunction is unsatisfiable.
    pub bot: bool,
}

impl Supers {
    pub fn contains(&self, c: ConceptId) -> bool {
        self.bot || self.names.contains(c as usize)
    }
}

/// A normalized TBox with its saturation, grown on demand.
///
/// Contexts are registered lazily behind a mutex; registration is
/// monotone, so answers never change once computed.
#[derive(Debug)]
pub struct SaturatedTBox {
    pub tbox: NormalizedTBox,
    pub index: TBoxIndex,
    contexts: Mutex<Contexts>,
}

pub fn saturate(tbox: NormalizedTBox) -> SaturatedTBox {
    let index = TBoxIndex::new(&tbox);
    SaturatedTBox { tbox, index, contexts: Mutex::new(Contexts::default()) }
}

impl Contexts {
    fn get_or_add(&mut self, core: Conjunction, idx: &TBoxIndex, queue: &mut Vec<usize>) -> usize {
        if let Some(&i) = self.by_core.get(&core) {
            return i;
        }
        let i = self.ctxs.len();
        self.by_core.insert(core.clone(), i);
        self.ctxs.push(Context { core, h: idx.empty_set(), bot: false, succ: Vec::new(), preds: Vec::new(), queued: true });
        queue.push(i);
        i
    }

    fn run(&mut self, idx: &TBoxIndex, mut queue: Vec<usize>) {
        while let Some(c) = queue.pop() {
            self.ctxs[c].queued = false;
            let mut h = self.ctxs[c].h.clone();
            let old_len = h.count_ones(..);
            let old_bot = self.ctxs[c].bot;
            let mut bot = old_bot;
            for &a in &self.ctxs[c].core {
                h.insert(a as usize);
            }
            loop {
                idx.close_local(&mut h);
                let before = h.count_ones(..);
                let mut gens = Vec::new();
                for a in h.ones() {
                    for &(r, b) in idx.exists_of(a as ConceptId) {
                        gens.push((r, idx.successor_core(&h, r, b)));
                    }
                }
                for (r, core) in gens {
                    if idx.role_clashes(r) {
                        bot = true;
                    }
                    let child = self.get_or_add(core, idx, &mut queue);
                    if !self.ctxs[c].succ.contains(&(r, child)) {
                        self.ctxs[c].succ.push((r, child));
                        self.ctxs[child].preds.push(c);
                    }
                }
                for &(r, child) in &self.ctxs[c].succ {
                    let ch = &self.ctxs[child];
                    bot |= ch.bot;
                    for &(b, a) in idx.up_rules(r) {
                        if ch.h.contains(b as usize) {
                            h.insert(a as usize);
                        }
                    }
                }
                if h.count_ones(..) == before {
                    break;
                }
            }
            bot |= idx.is_bottom(&h);
            if h.count_ones(..) != old_len || bot != old_bot {
                let ctx = &mut self.ctxs[c];
                ctx.h = h;
                ctx.bot = bot;
                let preds = ctx.preds.clone();
                for p in preds {
                    if !self.ctxs[p].queued {
                        self.ctxs[p].queued = true;
                        queue.push(p);
                    }
                }
            }
        }
    }
}

impl SaturatedTBox {
    pub fn num_concepts(&self) -> usize {
        self.index.num_concepts()
    }

    fn context(&self, core: &[ConceptId]) -> Supers {
        let core = conjunction(core.iter().copied());
        let mut ctxs = self.contexts.lock().expect("saturation lock poisoned");
        if let Some(&i) = ctxs.by_core.get(&core) {
            let c = &ctxs.ctxs[i];
            return Supers { names: c.h.clone(), bot: c.bot };
        }
        let mut queue = Vec::new();
        let i = ctxs.get_or_add(core, &self.index, &mut queue);
        ctxs.run(&self.index, queue);
        let c = &ctxs.ctxs[i];
        Supers { names: c.h.clone(), bot: c.bot }
    }

    /// Every name `A` with `T |= C <= A`.
    pub fn supers(&self, c: &[ConceptId]) -> Supers {
        self.context(c)
    }

    pub fn is_satisfiable(&self, c: &[ConceptId]) -> bool {
        !self.context(c).bot
    }

    pub fn entails_subsumption(&self, c: &[ConceptId], d: &[ConceptId]) -> bool {
        let s = self.context(c);
        s.bot || d.iter().all(|&a| s.names.contains(a as usize))
    }

    pub fn entails_role_inclusion(&self, r: RoleId, s: RoleId) -> bool {
        self.index.entails_role_inclusion(r, s)
    }

    /// Anonymous successors of an element of type `h`: role and core,
    /// deduplicated.
    pub fn successors_of_type(&self, h: &FixedBitSet) -> Vec<(RoleId, Conjunction)> {
        let mut out: Vec<(RoleId, Conjunction)> = Vec::new();
        for a in h.ones() {
            for &(r, b) in self.index.exists_of(a as ConceptId) {
                out.push((r, self.index.successor_core(h, r, b)));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Number of registered contexts.
    pub fn num_contexts(&self) -> usize {
        self.contexts.lock().expect("saturation lock poisoned").ctxs.len()
    }

    pub fn concept_id(&self, name: &str) -> Option<ConceptId> {
        self.tbox.vocab.lookup_concept(name)
    }

    /// Names of a set, in vocabulary order.
    pub fn names_of(&self, h: &FixedBitSet) -> Vec<String> {
        h.ones().map(|c| self.tbox.vocab.concept_name(c as ConceptId).to_owned()).collect()
    }
}
