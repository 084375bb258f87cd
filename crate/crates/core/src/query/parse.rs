// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeSet;
use std::sync::Arc;

use super::{Atom, Cn2rpq, NnfaBuilder, Nre, QueryError, Symbol, Term};
use crate::kb::RoleExpr;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bar,
    Star,
    Question,
    LAngle,
    RAngle,
    LBrace,
    RBrace,
    Minus,
    Arrow,
}

type Spanned = (Tok, usize, usize);

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> QueryError {
    QueryError::Syntax { line, col, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let mut out = Vec::new();
    for (lno, raw) in text.lines().enumerate() {
        let line = lno + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '|' => Tok::Bar,
                '*' => Tok::Star,
                '?' => Tok::Question,
                '>' => Tok::RAngle,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '-' => Tok::Minus,
                '<' if chars.get(i + 1) == Some(&'-') => {
                    i += 1;
                    Tok::Arrow
                }
                '<' => Tok::LAngle,
                '\'' | '"' => {
                    let close = chars[i + 1..].iter().position(|&x| x == c).ok_or_else(|| {
                        syntax(line, col, "unterminated quoted individual")
                    })?;
                    let name: String = chars[i + 1..i + 1 + close].iter().collect();
                    if name.is_empty() || !name.chars().all(|x| x.is_ascii_alphanumeric() || x == '_') {
                        return Err(syntax(line, col, "malformed individual name"));
                    }
                    i += close + 1;
                    Tok::Quoted(name)
                }
                c if c.is_ascii_alphabetic() => {
                    let start = i;
                    while i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_') {
                        i += 1;
                    }
                    Tok::Ident(chars[start..=i].iter().collect())
                }
                other => return Err(syntax(line, col, format!("unexpected character `{other}`"))),
            };
            out.push((tok, line, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.i).or(self.toks.last()) {
            Some((_, l, c)) => (*l, *c),
            None => (1, 1),
        }
    }

    fn error(&self, msg: impl Into<String>) -> QueryError {
        let (l, c) = self.here();
        syntax(l, c, msg)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), QueryError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn nre(&mut self) -> Result<Nre, QueryError> {
        let mut e = self.seq()?;
        while self.eat(&Tok::Bar) {
            let r = self.seq()?;
            e = Nre::union(e, r);
        }
        Ok(e)
    }

    fn seq(&mut self) -> Result<Nre, QueryError> {
        let mut e = self.star()?;
        while self.eat(&Tok::Dot) {
            let r = self.star()?;
            e = Nre::concat(e, r);
        }
        Ok(e)
    }

    fn star(&mut self) -> Result<Nre, QueryError> {
        let mut e = self.base()?;
        while self.eat(&Tok::Star) {
            e = Nre::star(e);
        }
        Ok(e)
    }

    fn base(&mut self) -> Result<Nre, QueryError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.i += 1;
                if self.eat(&Tok::Minus) {
                    Ok(Nre::Sym(Symbol::Role(RoleExpr::inv(name))))
                } else if self.eat(&Tok::Question) {
                    Ok(Nre::Sym(Symbol::Concept(name)))
                } else {
                    Ok(Nre::Sym(Symbol::Role(RoleExpr::new(name))))
                }
            }
            Some(Tok::LBrace) => {
                self.i += 1;
                let ind = match self.peek().cloned() {
                    Some(Tok::Ident(a)) | Some(Tok::Quoted(a)) => {
                        self.i += 1;
                        a
                    }
                    _ => return Err(self.error("expected an individual")),
                };
                self.expect(Tok::RBrace, "`}`")?;
                self.expect(Tok::Question, "`?` after nominal")?;
                Ok(Nre::Sym(Symbol::Nominal(ind)))
            }
            Some(Tok::LAngle) => {
                self.i += 1;
                let e = self.nre()?;
                self.expect(Tok::RAngle, "`>`")?;
                Ok(Nre::test(e))
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let e = self.nre()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.error("expected a role, test or `(`")),
        }
    }

    fn term(&mut self) -> Result<Term, QueryError> {
        match self.peek().cloned() {
            Some(Tok::Ident(v)) => {
                self.i += 1;
                Ok(Term::Var(v))
            }
            Some(Tok::Quoted(a)) => {
                self.i += 1;
                Ok(Term::Ind(a))
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

/// Parses a bare NRE.
pub fn parse_nre(text: &str) -> Result<Nre, QueryError> {
    let mut p = Parser { toks: lex(text)?, i: 0 };
    let e = p.nre()?;
    if p.i < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

enum RawAtom {
    Concept(String, Term),
    Path(Nre, Term, Term),
    Test(Nre, Term),
}

/// Parses `q(x, ...) <- atom, ...` and compiles every path atom.
pub fn parse_query(text: &str) -> Result<Cn2rpq, QueryError> {
    let mut p = Parser { toks: lex(text)?, i: 0 };
    match p.peek() {
        Some(Tok::Ident(_)) => p.i += 1,
        _ => return Err(p.error("expected a query head")),
    }
    p.expect(Tok::LParen, "`(`")?;
    let mut head = Vec::new();
    if !p.eat(&Tok::RParen) {
        loop {
            match p.term()? {
                Term::Var(v) => head.push(v),
                Term::Ind(a) => return Err(QueryError::UndeclaredAnswerVar(a)),
            }
            if p.eat(&Tok::RParen) {
                break;
            }
            p.expect(Tok::Comma, "`,` or `)`")?;
        }
    }
    p.expect(Tok::Arrow, "`<-`")?;
    let mut raw = Vec::new();
    while p.peek().is_some() {
        let e = p.nre()?;
        p.expect(Tok::LParen, "`(` before atom terms")?;
        let t = p.term()?;
        let u = if p.eat(&Tok::Comma) { Some(p.term()?) } else { None };
        p.expect(Tok::RParen, "`)`")?;
        raw.push(match (e, u) {
            (e, Some(u)) => RawAtom::Path(e, t, u),
            (Nre::Sym(Symbol::Role(r)), None) if !r.inverted => RawAtom::Concept(r.name, t),
            (Nre::Test(e), None) => RawAtom::Test(*e, t),
            _ => return Err(p.error("a one-term atom must be a concept name or a test")),
        });
        if p.peek().is_some() {
            p.expect(Tok::Comma, "`,` between atoms")?;
        }
    }

    let mut seen = BTreeSet::new();
    for v in &head {
        if !seen.insert(v.clone()) {
            return Err(QueryError::DuplicateAnswerVar(v.clone()));
        }
    }
    let mut b = NnfaBuilder::new();
    let atoms: Vec<Atom> = raw
        .into_iter()
        .map(|a| match a {
            RawAtom::Concept(c, t) => Atom::Concept(c, t),
            RawAtom::Path(e, t, u) => Atom::Role(b.add_nre(&e), t, u),
            RawAtom::Test(e, t) => Atom::Test(b.add_nre(&e), t),
        })
        .collect();
    let q = Cn2rpq { answer_vars: head, atoms, nnfa: Arc::new(b.finish()) };
    let vars = q.variables();
    for v in &q.answer_vars {
        if !vars.contains(v) {
            return Err(QueryError::UnusedAnswerVar(v.clone()));
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::Label;

    #[test]
    fn advisor_query() {
        let q = parse_query("q(x,y) <- (advisor . <wrote . topic . Physics?>)* (x,y)").unwrap();
        assert_eq!(q.answer_vars, vec!["x", "y"]);
        assert_eq!(q.atoms.len(), 1);
        assert!(matches!(q.atoms[0], Atom::Role(..)));
        assert_eq!(q.nnfa.automata.len(), 2);
        assert_eq!(q.nnfa.part_to_nre(match &q.atoms[0] {
            Atom::Role(p, ..) => p,
            _ => unreachable!(),
        }).to_string(), "(advisor . <wrote . topic . Physics?>)*");
    }

    #[test]
    fn boolean_concept_query() {
        let q = parse_query("q() <- B(y)").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.atoms, vec![Atom::Concept("B".into(), Term::var("y"))]);
        assert_eq!(q.existential_vars().into_iter().collect::<Vec<_>>(), vec!["y"]);
    }

    #[test]
    fn self_loop_atom() {
        let q = parse_query("q(x) <- p*(x,x)").unwrap();
        match &q.atoms[0] {
            Atom::Role(_, t, u) => assert_eq!(t, u),
            _ => panic!(),
        }
    }

    #[test]
    fn individuals_and_nominals() {
        let q = parse_query("q(x) <- (r . {usa}?)(x, 'b'), A('c')").unwrap();
        assert_eq!(q.individuals().into_iter().collect::<Vec<_>>(), vec!["b", "c", "usa"]);
        assert!(q.nnfa.automata[0].transitions.iter().any(|t| t.1 == Label::Nominal("usa".into())));
    }

    #[test]
    fn answer_variable_errors() {
        assert_eq!(parse_query("q(x) <- A(y)").unwrap_err(), QueryError::UnusedAnswerVar("x".into()));
        assert_eq!(parse_query("q('a') <- A(y)").unwrap_err(), QueryError::UndeclaredAnswerVar("a".into()));
        assert!(matches!(parse_query("q(x) <- (p . (x,y)"), Err(QueryError::Syntax { .. })));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse_nre("a . b* | c").unwrap(), Nre::union(Nre::concat(Nre::role("a"), Nre::star(Nre::role("b"))), Nre::role("c")));
    }

    #[test]
    fn printing_round_trip() {
        let text = "q(x) <- (r- . <s | A?>)*(x, y), B(y), <t>(x)";
        let q = parse_query(text).unwrap();
        let q2 = parse_query(&q.to_string()).unwrap();
        assert_eq!(q2.atoms.len(), 3);
        assert_eq!(q2.answer_vars, q.answer_vars);
    }

    #[test]
    fn empty_body() {
        let q = parse_query("q() <-").unwrap();
        assert!(q.atoms.is_empty());
        assert_eq!(q.to_string(), "q() <-");
    }
}
