// SPDX-License-Identifier: Apache-2.0
//! Backtracking join of query atoms over object relations.

use std::collections::BTreeSet;

use crate::query::{Atom, Cn2rpq, PartRef, Term};

/// Atom relations over objects `0..num_objects()`.
pub trait Relations: Sync {
    fn num_objects(&self) -> usize;
    /// The object an individual denotes, if any.
    fn individual(&self, name: &str) -> Option<usize>;
    fn concept(&self, name: &str, o: usize) -> bool;
    /// Some path of `part` leaves `o` and reaches a final state.
    fn test(&self, part: &PartRef, o: usize) -> bool;
    /// Objects `x` with `(o, x)` in the pair set of `part`.
    fn targets(&self, part: &PartRef, o: usize) -> Vec<usize>;
    fn holds(&self, part: &PartRef, o: usize, x: usize) -> bool {
        self.targets(part, o).contains(&x)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum T {
    Var(usize),
    Obj(usize),
    Missing,
}

enum A<'q> {
    Concept(&'q str, T),
    Test(&'q PartRef, T),
    Role(&'q PartRef, T, T),
}

impl A<'_> {
    fn terms(&self) -> Vec<T> {
        match self {
            A::Concept(_, t) | A::Test(_, t) => vec![*t],
            A::Role(_, t, u) => vec![*t, *u],
        }
    }
}

type Asg = Vec<Option<usize>>;

struct Ctx<'a, R: Relations> {
    rel: &'a R,
    atoms: Vec<A<'a>>,
    answer: Vec<usize>,
}

fn value(t: T, asg: &Asg) -> Option<usize> {
    match t {
        T::Var(v) => asg[v],
        T::Obj(o) => Some(o),
        T::Missing => None,
    }
}

fn bound(t: T, asg: &Asg) -> bool {
    !matches!(t, T::Var(v) if asg[v].is_none())
}

impl<R: Relations> Ctx<'_, R> {
    /// Assignments extending `asg` that satisfy atom `i`.
    fn expand(&self, i: usize, asg: &Asg) -> Vec<Asg> {
        let n = self.rel.num_objects();
        let bind = |t: T, o: usize| {
            let mut a = asg.clone();
            if let T::Var(v) = t {
                a[v] = Some(o);
            }
            a
        };
        let unary = |t: T, ok: &dyn Fn(usize) -> bool| -> Vec<Asg> {
            if matches!(t, T::Missing) {
                return Vec::new();
            }
            match value(t, asg) {
                Some(o) => if ok(o) { vec![asg.clone()] } else { Vec::new() },
                None => (0..n).filter(|&o| ok(o)).map(|o| bind(t, o)).collect(),
            }
        };
        match &self.atoms[i] {
            A::Concept(c, t) => unary(*t, &|o| self.rel.concept(c, o)),
            A::Test(p, t) => unary(*t, &|o| self.rel.test(p, o)),
            A::Role(p, t, u) => {
                if matches!(t, T::Missing) || matches!(u, T::Missing) {
                    return Vec::new();
                }
                match (value(*t, asg), value(*u, asg)) {
                    (Some(a), Some(b)) => {
                        if self.rel.holds(p, a, b) {
                            vec![asg.clone()]
                        } else {
                            Vec::new()
                        }
                    }
                    (Some(a), None) => self.rel.targets(p, a).into_iter().map(|x| bind(*u, x)).collect(),
                    (None, Some(b)) => (0..n).filter(|&o| self.rel.holds(p, o, b)).map(|o| bind(*t, o)).collect(),
                    (None, None) if t == u => (0..n).filter(|&o| self.rel.holds(p, o, o)).map(|o| bind(*t, o)).collect(),
                    (None, None) => (0..n)
                        .flat_map(|o| {
                            let first = bind(*t, o);
                            self.rel.targets(p, o).into_iter().map(move |x| {
                                let mut a = first.clone();
                                if let T::Var(v) = u {
                                    a[*v] = Some(x);
                                }
                                a
                            })
                        })
                        .collect(),
                }
            }
        }
    }

    fn pick(&self, remaining: &[usize], asg: &Asg) -> usize {
        let score = |&i: &usize| self.atoms[i].terms().iter().filter(|t| bound(**t, asg)).count() * 2
            + usize::from(matches!(self.atoms[i], A::Concept(..)));
        let best = remaining.iter().max_by_key(|i| (score(i), std::cmp::Reverse(**i))).unwrap();
        remaining.iter().position(|i| i == best).unwrap()
    }

    fn solve(&self, mut remaining: Vec<usize>, asg: Asg, out: &mut BTreeSet<Vec<usize>>, first_only: bool) -> bool {
        if remaining.is_empty() {
            out.insert(self.answer.iter().map(|&v| asg[v].expect("answer variable unbound")).collect());
            return first_only;
        }
        let k = self.pick(&remaining, &asg);
        let i = remaining.swap_remove(k);
        for a in self.expand(i, &asg) {
            if self.solve(remaining.clone(), a, out, first_only) {
                return true;
            }
        }
        false
    }
}

/// All answer tuples of `q`; Boolean queries yield `{[]}` or `{}`.
///
/// With `parallel` (and the `parallel` feature) the first join level is
/// split across threads; the result does not depend on the schedule.
pub fn join<R: Relations>(rel: &R, q: &Cn2rpq, parallel: bool) -> BTreeSet<Vec<usize>> {
    let vars: Vec<String> = q.variables().into_iter().collect();
    let var = |v: &str| vars.iter().position(|x| x == v).unwrap();
    let term = |t: &Term| match t {
        Term::Var(v) => T::Var(var(v)),
        Term::Ind(a) => rel.individual(a).map_or(T::Missing, T::Obj),
    };
    let atoms: Vec<A> = q
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Concept(c, t) => A::Concept(c.as_str(), term(t)),
            Atom::Test(p, t) => A::Test(p, term(t)),
            Atom::Role(p, t, u) => A::Role(p, term(t), term(u)),
        })
        .collect();
    let ctx = Ctx { rel, atoms, answer: q.answer_vars.iter().map(|v| var(v)).collect() };
    let first_only = q.answer_vars.is_empty();
    let mut out = BTreeSet::new();
    let remaining: Vec<usize> = (0..ctx.atoms.len()).collect();
    let asg: Asg = vec![None; vars.len()];
    if remaining.is_empty() || !parallel {
        ctx.solve(remaining, asg, &mut out, first_only);
        return out;
    }
    let mut rest = remaining;
    let k = ctx.pick(&rest, &asg);
    let i = rest.swap_remove(k);
    let seeds = ctx.expand(i, &asg);
    out.extend(crate::par::flat_map(seeds, |a| {
        let mut local = BTreeSet::new();
        ctx.solve(rest.clone(), a, &mut local, first_only);
        local.into_iter().collect()
    }));
    out
}
