// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use nrpq::eval::{answers_on_interpretation, certain_answers_with, EvalError, EvalOptions, Parallelism, PreparedQuery};
use nrpq::kb::{parse_kb, AboxAssertion, Concept, KnowledgeBase, TOP};
use nrpq::loops::LoopTables;
use nrpq::query::{eliminate_nominal_tests, parse_query, reduce_nnfa, Atom, Cn2rpq, Term};
use nrpq::reasoner::{materialize_canonical, prepare, FiniteInterpretation};
use nrpq::reductions::atm::{corpus, gen_atm_instance, simulate_atm, AtmSpec, TBoxFlavor};
use nrpq::reductions::horn::{gen_horn_instance, horn_entails, random_horn_theory, HornTheory};
use nrpq::reductions::{answer_via_reduction, translate_cn2rpq_avoiding, ReductionError};
use nrpq::rewrite::RewriteError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{AnswerArgs, Command, Engine, Failure, Flavor, GenCommand};

type Answers = BTreeSet<Vec<String>>;

pub fn run(cmd: &Command, out: &mut String) -> Result<(), Failure> {
    match cmd {
        Command::Answer(args) => answer(args, out),
        Command::CheckSat { kb } => {
            let kb = load_kb(kb)?;
            let sat = prepare(&kb.tbox, &kb.abox, [], [], []).model.is_consistent();
            writeln!(out, "{}", if sat { "sat" } else { "unsat" }).unwrap();
            Ok(())
        }
        Command::Rewrite { kb, query } => {
            let kb = load_kb(kb)?;
            let q = load_query(query)?;
            let prepared = PreparedQuery::new(&q, &kb.tbox, EvalOptions::default()).map_err(eval_failure)?;
            for q2 in prepared.rewritten() {
                writeln!(out, "{q2}").unwrap();
            }
            Ok(())
        }
        Command::Translate { query, kb } => {
            let q = load_query(query)?;
            let used = match kb {
                Some(path) => {
                    let kb = load_kb(path)?;
                    kb.concept_names().into_iter().chain(kb.role_names()).collect()
                }
                None => BTreeSet::new(),
            };
            let t = translate_cn2rpq_avoiding(&q, used.iter().map(String::as_str));
            write!(out, "{}", KnowledgeBase::new(t.tbox, t.abox)).unwrap();
            writeln!(out, "# query\n{}", t.query).unwrap();
            Ok(())
        }
        Command::Gen(GenCommand::Horn { theory, seed, out: dir }) => gen_horn(theory.as_deref(), *seed, dir, out),
        Command::Gen(GenCommand::Atm { machine, corpus, flavor, out: dir }) => {
            gen_atm(machine.as_deref(), corpus.as_deref(), *flavor, dir, out)
        }
        Command::EvalGraph { graph, query, json } => {
            let kb = load_kb(graph)?;
            if !kb.tbox.is_empty() {
                return Err(Failure::User(anyhow!("{}: a graph file holds facts only", graph.display())));
            }
            if !is_atomic(&kb.abox) {
                return Err(Failure::User(anyhow!("{}: graph facts must be atomic", graph.display())));
            }
            let q = load_query(query)?;
            let start = Instant::now();
            let g = FiniteInterpretation::from_assertions(&kb.abox).map_err(|e| anyhow!(e))?;
            let answers = answers_on_interpretation(&q, &g);
            report(&q, "graph", &answers, start, *json, out);
            Ok(())
        }
        Command::DumpLoops { kb, query } => dump_loops(&load_kb(kb)?, &load_query(query)?, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(Failure::User)
}

fn load_kb(path: &Path) -> Result<KnowledgeBase, Failure> {
    let kb = parse_kb(&read(path)?).with_context(|| path.display().to_string())?;
    kb.validate().with_context(|| path.display().to_string())?;
    Ok(kb)
}

fn load_query(path: &Path) -> Result<Cn2rpq, Failure> {
    Ok(parse_query(&read(path)?).with_context(|| path.display().to_string())?)
}

fn write_file(path: PathBuf, text: &str, out: &mut String) -> Result<(), Failure> {
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    writeln!(out, "wrote {}", path.display()).unwrap();
    Ok(())
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Rewrite(RewriteError::TooManyQueries(n)) => {
            Failure::User(anyhow!("rewriting produced more than {n} queries; raise --max-rewritings"))
        }
        e => Failure::Internal(e.into()),
    }
}

fn is_atomic(abox: &[AboxAssertion]) -> bool {
    abox.iter().all(|a| {
        matches!(a, AboxAssertion::RoleAssertion(..))
            || matches!(a, AboxAssertion::ConceptAssertion(Concept::Name(_) | Concept::Top, _))
    })
}

/// Every tuple of `k` individuals, the answer set of an inconsistent KB.
fn all_tuples(inds: &BTreeSet<String>, k: usize) -> Answers {
    let mut out: Answers = BTreeSet::from([Vec::new()]);
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| inds.iter().map(move |a| [t.clone(), vec![a.clone()]].concat())).collect();
    }
    out
}

fn answer(args: &AnswerArgs, out: &mut String) -> Result<(), Failure> {
    let kb = load_kb(&args.kb)?;
    let q = load_query(&args.query)?;
    let start = Instant::now();
    let (answers, engine) = match args.engine {
        Engine::Rewrite => {
            let opts = EvalOptions {
                parallelism: if args.parallel { Parallelism::Parallel } else { Parallelism::Sequential },
                max_rewritings: args.max_rewritings,
                ..EvalOptions::default()
            };
            (certain_answers_with(&q, &kb, &opts).map_err(eval_failure)?, "rewrite")
        }
        Engine::Reduction => (by_reduction(&q, &kb)?, "reduction"),
        Engine::Graph => (by_graph(&q, &kb, args.depth)?, "graph"),
    };
    report(&q, engine, &answers, start, args.json, out);
    Ok(())
}

/// Answers of a single-atom query, one instance check per tuple.
fn by_reduction(q: &Cn2rpq, kb: &KnowledgeBase) -> Result<Answers, Failure> {
    let [atom] = q.atoms.as_slice() else {
        return Err(Failure::User(anyhow!(
            "the reduction engine needs a single-atom query; this one has {} atoms",
            q.atoms.len()
        )));
    };
    let inds = kb.individuals();
    if !prepare(&kb.tbox, &kb.abox, [], [], []).model.is_consistent() {
        return Ok(all_tuples(&inds, q.answer_vars.len()));
    }
    let endpoint = |t: &Term| -> Result<(), Failure> {
        match t {
            Term::Var(v) if !q.answer_vars.contains(v) => Err(Failure::User(anyhow!(
                "the reduction engine needs answer variables or individuals at both ends; `{v}` is existential"
            ))),
            _ => Ok(()),
        }
    };
    let value = |t: &Term, tuple: &[String]| match t {
        Term::Ind(a) => a.clone(),
        Term::Var(v) => tuple[q.answer_vars.iter().position(|x| x == v).unwrap()].clone(),
    };
    let mut answers = Answers::new();
    match atom {
        Atom::Role(part, t, u) => {
            endpoint(t)?;
            endpoint(u)?;
            let e = q.nnfa.part(part.clone());
            for tuple in all_tuples(&inds, q.answer_vars.len()) {
                let holds = answer_via_reduction(&e, kb, &value(t, &tuple), &value(u, &tuple)).map_err(|e| match e {
                    ReductionError::Inconsistent => Failure::Internal(e.into()),
                    ReductionError::Invalid(_) => Failure::User(e.into()),
                })?;
                if holds {
                    answers.insert(tuple);
                }
            }
        }
        Atom::Concept(c, t) => {
            endpoint(t)?;
            for tuple in all_tuples(&inds, q.answer_vars.len()) {
                let a = value(t, &tuple);
                let model = prepare(&kb.tbox, &kb.abox, [c.as_str()], [], [a.as_str()]).model;
                if model.entails_assertion(c, &a) {
                    answers.insert(tuple);
                }
            }
        }
        Atom::Test(..) => {
            return Err(Failure::User(anyhow!(
                "the reduction engine answers path atoms `E(s, t)` and concept atoms, not test atoms"
            )))
        }
    }
    Ok(answers)
}

/// Answers over the ABox itself, or over the canonical model cut at
/// `depth`, which may miss answers needing deeper anonymous elements.
fn by_graph(q: &Cn2rpq, kb: &KnowledgeBase, depth: Option<usize>) -> Result<Answers, Failure> {
    if depth.is_none() && !(kb.tbox.is_empty() && is_atomic(&kb.abox)) {
        return Err(Failure::User(anyhow!(
            "the graph engine needs an empty TBox and atomic facts, or --depth to materialize"
        )));
    }
    let inds = kb.individuals();
    let mut full = kb.clone();
    full.abox.extend(q.individuals().into_iter().map(|a| AboxAssertion::ConceptAssertion(Concept::Top, a)));
    let p = prepare(&full.tbox, &full.abox, [], [], []);
    if !p.model.is_consistent() {
        return Ok(all_tuples(&inds, q.answer_vars.len()));
    }
    let g = materialize_canonical(&p, depth.unwrap_or(0)).map_err(|e| Failure::Internal(e.into()))?;
    Ok(answers_on_interpretation(q, &g).into_iter().filter(|t| t.iter().all(|a| inds.contains(a))).collect())
}

#[derive(Serialize)]
struct Report<'a> {
    engine: &'a str,
    answer_vars: &'a [String],
    /// Set for Boolean queries only.
    boolean: Option<bool>,
    answers: &'a Answers,
    timings: Timings,
}

#[derive(Serialize)]
struct Timings {
    total_ms: f64,
}

fn report(q: &Cn2rpq, engine: &str, answers: &Answers, start: Instant, json: bool, out: &mut String) {
    let boolean = q.is_boolean().then_some(!answers.is_empty());
    if json {
        let r = Report {
            engine,
            answer_vars: &q.answer_vars,
            boolean,
            answers,
            timings: Timings { total_ms: start.elapsed().as_secs_f64() * 1e3 },
        };
        writeln!(out, "{}", serde_json::to_string_pretty(&r).expect("report serializes")).unwrap();
    } else if let Some(b) = boolean {
        writeln!(out, "{b}").unwrap();
    } else {
        for t in answers {
            writeln!(out, "{}", t.join(",")).unwrap();
        }
    }
}

fn gen_horn(theory: Option<&Path>, seed: u64, dir: &Path, out: &mut String) -> Result<(), Failure> {
    let h = match theory {
        Some(path) => HornTheory::parse(&read(path)?).with_context(|| path.display().to_string())?,
        None => random_horn_theory(&mut ChaCha8Rng::seed_from_u64(seed), 6, 8),
    };
    let inst = gen_horn_instance(&h);
    let (a, b) = &inst.pair;
    // Printed from the expression: going through the automaton would make
    // the text exponential in the nesting.
    let q = format!("q() <- ({})({}, {})", inst.query, Term::ind(a), Term::ind(b));
    parse_query(&q).map_err(|e| Failure::Internal(anyhow!("generated query does not parse: {e}")))?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_file(dir.join("horn.txt"), &h.to_string(), out)?;
    write_file(dir.join("horn.dl"), &KnowledgeBase::new(Vec::new(), inst.abox).to_string(), out)?;
    write_file(dir.join("horn.nrpq"), &format!("{q}\n"), out)?;
    writeln!(out, "goal entailed: {}", horn_entails(&h)).unwrap();
    Ok(())
}

fn gen_atm(
    machine: Option<&Path>,
    name: Option<&str>,
    flavor: Flavor,
    dir: &Path,
    out: &mut String,
) -> Result<(), Failure> {
    let m: AtmSpec = match (machine, name) {
        (Some(path), None) => AtmSpec::parse(&read(path)?).with_context(|| path.display().to_string())?,
        (None, Some(name)) => {
            let all = corpus();
            let names: Vec<&str> = all.iter().map(|(n, _)| *n).collect();
            match all.iter().find(|(n, _)| *n == name) {
                Some((_, m)) => m.clone(),
                None => return Err(Failure::User(anyhow!("no corpus machine `{name}`; known: {}", names.join(", ")))),
            }
        }
        _ => return Err(Failure::User(anyhow!("give either a machine file or --corpus NAME"))),
    };
    let flavor = match flavor {
        Flavor::DlLite => TBoxFlavor::DlLiteCore,
        Flavor::El => TBoxFlavor::El,
    };
    let inst = gen_atm_instance(&m, flavor)?;
    let q = inst.as_query().ground_answer_vars(std::slice::from_ref(&inst.individual));
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_file(dir.join("atm.dl"), &inst.kb.to_string(), out)?;
    write_file(dir.join("atm.nrpq"), &format!("{q}\n"), out)?;
    let sim = simulate_atm(&m)?;
    for w in &sim.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    writeln!(out, "machine accepts: {}", sim.accepts).unwrap();
    Ok(())
}

fn dump_loops(kb: &KnowledgeBase, q: &Cn2rpq, out: &mut String) -> Result<(), Failure> {
    let (q, ext) = eliminate_nominal_tests(q);
    let nnfa = Arc::new(if q.nnfa.is_reduced() { q.nnfa.as_ref().clone() } else { reduce_nnfa(&q.nnfa) });
    let mut abox = kb.abox.clone();
    abox.extend(ext);
    let names = nnfa.concept_names();
    let roles = nnfa.role_names();
    let p = prepare(&kb.tbox, &abox, names.iter().map(String::as_str), roles.iter().map(String::as_str), []);
    let loops = LoopTables::new(nnfa.clone(), p.sat.tbox.clone()).map_err(|e| Failure::Internal(e.into()))?;
    let mut keys: Vec<Vec<u32>> = vec![Vec::new()];
    keys.extend(
        p.sat.tbox.vocab.concept_names().filter(|(c, n)| *c != TOP && !n.starts_with("__")).map(|(c, _)| vec![c]),
    );
    for (i, a) in nnfa.automata.iter().enumerate() {
        writeln!(out, "# automaton {i}: states {:?}, initial {}, finals {:?}", a.states, a.initial, a.finals).unwrap();
        for c in &keys {
            for &s1 in &a.states {
                loops.in_floop(c, s1, &a.finals, &[]);
                for &s2 in &a.states {
                    loops.in_loop(c, s1, s2, &[]);
                }
            }
        }
    }
    out.push_str(&loops.dump());
    Ok(())
}
