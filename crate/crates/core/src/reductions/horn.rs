// SPDX-License-Identifier: Apache-2.0
//! Propositional definite Horn theories encoded as graph queries.
//!
//! Each rule becomes a chain of `p_v` edges ending in an `s` edge to `f`;
//! `t` edges link body positions to the rules deriving them. The nested
//! query `E_n` walks a derivation tree of the goal of depth at most `n`.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::kb::AboxAssertion;
use crate::query::Nre;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornRule {
    pub body: Vec<String>,
    pub head: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornTheory {
    pub vars: BTreeSet<String>,
    pub rules: Vec<HornRule>,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HornError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `goal` line")]
    NoGoal,
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl HornTheory {
    pub fn new(rules: Vec<HornRule>, goal: &str) -> Self {
        let mut vars: BTreeSet<String> = rules.iter().flat_map(|r| r.body.iter().chain([&r.head]).cloned()).collect();
        vars.insert(goal.to_owned());
        HornTheory { vars, rules, goal: goal.to_owned() }
    }

    /// Reads `goal g` plus rules `a & b -> c` and facts `-> c`; `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self, HornError> {
        let mut goal = None;
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let err = |msg: &str| HornError::Syntax { line: i + 1, msg: msg.to_owned() };
            if line.is_empty() {
                continue;
            }
            if let Some(g) = line.strip_prefix("goal ") {
                let g = g.trim();
                if !is_ident(g) {
                    return Err(err("goal must be an identifier"));
                }
                goal = Some(g.to_owned());
                continue;
            }
            let (body, head) = line.split_once("->").ok_or_else(|| err("expected `->`"))?;
            let head = head.trim();
            if !is_ident(head) {
                return Err(err("rule head must be one identifier"));
            }
            let body: Vec<String> = if body.trim().is_empty() {
                Vec::new()
            } else {
                body.split('&').map(|v| v.trim().to_owned()).collect()
            };
            if let Some(bad) = body.iter().find(|v| !is_ident(v)) {
                return Err(err(&format!("bad body variable `{bad}`")));
            }
            rules.push(HornRule { body, head: head.to_owned() });
        }
        let goal = goal.ok_or(HornError::NoGoal)?;
        Ok(HornTheory::new(rules, &goal))
    }

    /// The theory with `goal -> goal` as its first rule.
    pub fn with_goal_loop_first(&self) -> Self {
        let lp = HornRule { body: vec![self.goal.clone()], head: self.goal.clone() };
        let mut rules = vec![lp.clone()];
        rules.extend(self.rules.iter().filter(|r| **r != lp).cloned());
        HornTheory { vars: self.vars.clone(), rules, goal: self.goal.clone() }
    }
}

impl fmt::Display for HornTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal {}", self.goal)?;
        for r in &self.rules {
            if r.body.is_empty() {
                writeln!(f, "-> {}", r.head)?;
            } else {
                writeln!(f, "{} -> {}", r.body.join(" & "), r.head)?;
            }
        }
        Ok(())
    }
}

/// Least-fixpoint forward chaining.
pub fn horn_entails(h: &HornTheory) -> bool {
    let mut known: BTreeSet<&str> = BTreeSet::new();
    loop {
        let before = known.len();
        for r in &h.rules {
            if r.body.iter().all(|v| known.contains(v.as_str())) {
                known.insert(&r.head);
            }
        }
        if known.len() == before {
            return known.contains(h.goal.as_str());
        }
    }
}

#[derive(Clone, Debug)]
pub struct HornInstance {
    pub abox: Vec<AboxAssertion>,
    pub query: Nre,
    /// The pair whose membership decides entailment of the goal.
    pub pair: (String, String),
}

fn node(i: usize, l: usize) -> String {
    format!("e{i}_{l}")
}

fn p(v: &str) -> String {
    format!("p_{v}")
}

/// Builds the graph and query; the goal is entailed iff the pair is an
/// answer of the query over the graph (with an empty TBox).
pub fn gen_horn_instance(h: &HornTheory) -> HornInstance {
    let h = h.with_goal_loop_first();
    let mut abox = Vec::new();
    for (i, r) in h.rules.iter().enumerate() {
        let i = i + 1;
        let m = r.body.len();
        // p_{v_l}(e_l, e_{l-1}) for l = m+1 (the head) down to 1.
        for l in (1..=m + 1).rev() {
            let v = if l == m + 1 { &r.head } else { &r.body[l - 1] };
            abox.push(AboxAssertion::role(p(v), node(i, l), node(i, l - 1)));
        }
        abox.push(AboxAssertion::role("s", node(i, 0), "f"));
    }
    for (i, r) in h.rules.iter().enumerate() {
        for (l, v) in r.body.iter().enumerate() {
            for (j, rj) in h.rules.iter().enumerate() {
                if rj.head == *v {
                    abox.push(AboxAssertion::role("t", node(i + 1, l), node(j + 1, rj.body.len() + 1)));
                }
            }
        }
    }
    let any_p = || Nre::alt(h.vars.iter().map(|v| Nre::role(&p(v))));
    let step = || Nre::alt(h.vars.iter().map(|v| Nre::seq([Nre::role(&p(v)), Nre::role("t"), Nre::role(&p(v))])));
    let mut e = Nre::concat(step(), Nre::role("s"));
    for _ in 1..h.vars.len() {
        let inner = Nre::star(Nre::concat(Nre::test(e), any_p()));
        e = Nre::seq([step(), inner, Nre::role("s")]);
    }
    HornInstance { abox, query: e, pair: (node(1, 1), "f".into()) }
}

/// A random theory over `v0..v{vars-1}` with goal `v0`; bodies have at
/// most two atoms and about a quarter of the rules are facts.
pub fn random_horn_theory(rng: &mut impl Rng, max_vars: usize, max_rules: usize) -> HornTheory {
    let n = rng.gen_range(1..=max_vars);
    let k = rng.gen_range(1..=max_rules);
    let var = |rng: &mut dyn rand::RngCore| format!("v{}", rng.gen_range(0..n));
    let rules = (0..k)
        .map(|_| {
            let len = if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=2) };
            HornRule { body: (0..len).map(|_| var(rng)).collect(), head: var(rng) }
        })
        .collect();
    let mut h = HornTheory::new(rules, "v0");
    h.vars.extend((0..n).map(|i| format!("v{i}")));
    h
}
