// SPDX-License-Identifier: Apache-2.0
//! Line-oriented KB reader.
//!
//! Whether a bare name is a role or a concept is decided in this order:
//! `role` / `concept` declaration lines, usage (`exists r.`, `r-`, binary
//! assertions, non-atomic concept contexts), then capitalization.

use std::collections::HashMap;

use super::{AboxAssertion, Concept, Fragment, KbError, KnowledgeBase, RoleExpr, TBoxAxiom};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Minus,
    Dot,
    Amp,
    LParen,
    RParen,
    Comma,
    Le,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

fn err(p: Pos, msg: impl Into<String>) -> KbError {
    KbError::Syntax { line: p.line, col: p.col, msg: msg.into() }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(line: &str, lineno: usize) -> Result<Vec<(Tok, Pos)>, KbError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line: lineno, col: i + 1 };
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '-' => Tok::Minus,
            '.' => Tok::Dot,
            '&' => Tok::Amp,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '<' if chars.get(i + 1) == Some(&'=') => {
                i += 1;
                Tok::Le
            }
            c if is_ident_start(c) => {
                let start = i;
                while i + 1 < chars.len() && is_ident_char(chars[i + 1]) {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(err(pos, format!("unexpected character `{other}`"))),
        };
        out.push((tok, pos));
        i += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
struct RawRole {
    name: String,
    inverted: bool,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum Raw {
    Top,
    Bot,
    Ident(String, Pos),
    Inv(String, Pos),
    Exists(RawRole, Box<Raw>),
    And(Box<Raw>, Box<Raw>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sort {
    Role,
    Concept,
}

enum Line {
    Fragment(String, Pos),
    Decl(Sort, Vec<(String, Pos)>),
    Incl(Raw, Raw, Pos),
    Assert1(Raw, String),
    Assert2(RawRole, String, String),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.1).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.i).map(|t| t.0.clone());
        self.i += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), KbError> {
        let p = self.pos();
        if self.bump().as_ref() == Some(&t) {
            Ok(())
        } else {
            Err(err(p, format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), KbError> {
        let p = self.pos();
        match self.bump() {
            Some(Tok::Ident(s)) if !is_keyword(&s) => Ok((s, p)),
            _ => Err(err(p, format!("expected {what}"))),
        }
    }

    fn role(&mut self) -> Result<RawRole, KbError> {
        let (name, pos) = self.ident("role name")?;
        let inverted = if self.peek() == Some(&Tok::Minus) {
            self.i += 1;
            true
        } else {
            false
        };
        Ok(RawRole { name, inverted, pos })
    }

    fn concept(&mut self) -> Result<Raw, KbError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.i += 1;
            let rhs = self.unary()?;
            lhs = Raw::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Raw, KbError> {
        let p = self.pos();
        match self.bump() {
            Some(Tok::Ident(s)) if s == "top" => Ok(Raw::Top),
            Some(Tok::Ident(s)) if s == "bot" => Ok(Raw::Bot),
            Some(Tok::Ident(s)) if s == "exists" => {
                let r = self.role()?;
                self.expect(Tok::Dot, "`.` after role")?;
                let body = self.unary()?;
                Ok(Raw::Exists(r, Box::new(body)))
            }
            Some(Tok::Ident(s)) if !is_keyword(&s) => {
                if self.peek() == Some(&Tok::Minus) {
                    self.i += 1;
                    Ok(Raw::Inv(s, p))
                } else {
                    Ok(Raw::Ident(s, p))
                }
            }
            Some(Tok::LParen) => {
                let c = self.concept()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(c)
            }
            _ => Err(err(p, "expected a concept")),
        }
    }

    fn done(&self) -> Result<(), KbError> {
        if self.i < self.toks.len() {
            Err(err(self.pos(), "unexpected trailing input"))
        } else {
            Ok(())
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "top" | "bot" | "exists")
}

fn parse_line(toks: Vec<(Tok, Pos)>, end: Pos) -> Result<Line, KbError> {
    let mut p = Parser { toks, i: 0, end };
    let has_le = p.toks.iter().any(|t| t.0 == Tok::Le);
    if let Some(Tok::Ident(head)) = p.peek().cloned() {
        if !has_le {
            match head.as_str() {
                "fragment" => {
                    p.i += 1;
                    let pos = p.pos();
                    let mut tag = String::new();
                    while let Some(t) = p.bump() {
                        match t {
                            Tok::Ident(s) => tag.push_str(&s),
                            Tok::Minus => tag.push('-'),
                            _ => return Err(err(pos, "malformed fragment tag")),
                        }
                    }
                    return Ok(Line::Fragment(tag, pos));
                }
                "role" | "concept" if matches!(p.toks.get(1).map(|t| &t.0), Some(Tok::Ident(_))) => {
                    let sort = if head == "role" { Sort::Role } else { Sort::Concept };
                    p.i += 1;
                    let mut names = vec![p.ident("name")?];
                    while p.peek() == Some(&Tok::Comma) {
                        p.i += 1;
                        names.push(p.ident("name")?);
                    }
                    p.done()?;
                    return Ok(Line::Decl(sort, names));
                }
                _ => {}
            }
        }
    }
    if has_le {
        let pos = p.pos();
        let lhs = p.concept()?;
        p.expect(Tok::Le, "`<=`")?;
        let rhs = p.concept()?;
        p.done()?;
        return Ok(Line::Incl(lhs, rhs, pos));
    }
    // assertion
    let start = p.pos();
    let subject = if p.peek() == Some(&Tok::LParen) {
        p.i += 1;
        let c = p.concept()?;
        p.expect(Tok::RParen, "`)`")?;
        Err(c)
    } else {
        Ok(p.role()?)
    };
    p.expect(Tok::LParen, "`(`")?;
    let (a, _) = p.ident("individual")?;
    let b = if p.peek() == Some(&Tok::Comma) {
        p.i += 1;
        Some(p.ident("individual")?.0)
    } else {
        None
    };
    p.expect(Tok::RParen, "`)`")?;
    p.done()?;
    match (subject, b) {
        (Err(c), None) => Ok(Line::Assert1(c, a)),
        (Ok(r), Some(b)) => Ok(Line::Assert2(r, a, b)),
        (Ok(r), None) if !r.inverted => Ok(Line::Assert1(Raw::Ident(r.name, r.pos), a)),
        _ => Err(err(start, "malformed assertion")),
    }
}

fn pure_leaves(r: &Raw, out: &mut Vec<(String, Pos, bool)>) -> bool {
    match r {
        Raw::Ident(n, p) => {
            out.push((n.clone(), *p, false));
            true
        }
        Raw::Inv(n, p) => {
            out.push((n.clone(), *p, true));
            true
        }
        Raw::And(a, b) => pure_leaves(a, out) && pure_leaves(b, out),
        _ => false,
    }
}

/// Leaves of an inclusion that reads equally well as a role axiom.
fn ambiguous_leaves(lhs: &Raw, rhs: &Raw) -> Option<Vec<(String, Pos, bool)>> {
    let mut leaves = Vec::new();
    let ok = match rhs {
        Raw::Bot => pure_leaves(lhs, &mut leaves) && (1..=2).contains(&leaves.len()),
        _ => {
            pure_leaves(lhs, &mut leaves) && leaves.len() == 1 && pure_leaves(rhs, &mut leaves) && leaves.len() == 2
        }
    };
    ok.then_some(leaves)
}

struct Sorts {
    map: HashMap<String, Sort>,
}

impl Sorts {
    fn set(&mut self, name: &str, s: Sort, p: Pos) -> Result<bool, KbError> {
        match self.map.get(name) {
            Some(&old) if old != s => Err(err(p, format!("`{name}` is used both as a role and as a concept"))),
            Some(_) => Ok(false),
            None => {
                self.map.insert(name.to_owned(), s);
                Ok(true)
            }
        }
    }

    fn evidence(&mut self, r: &Raw) -> Result<(), KbError> {
        match r {
            Raw::Top | Raw::Bot => Ok(()),
            Raw::Ident(n, p) => self.set(n, Sort::Concept, *p).map(|_| ()),
            Raw::Inv(n, p) => Err(err(*p, format!("inverse role `{n}-` used as a concept"))),
            Raw::Exists(role, body) => {
                self.set(&role.name, Sort::Role, role.pos)?;
                self.evidence(body)
            }
            Raw::And(a, b) => {
                self.evidence(a)?;
                self.evidence(b)
            }
        }
    }

    fn role_hints(&mut self, r: &Raw) -> Result<(), KbError> {
        match r {
            Raw::Exists(role, body) => {
                self.set(&role.name, Sort::Role, role.pos)?;
                self.role_hints(body)
            }
            Raw::Inv(n, p) => self.set(n, Sort::Role, *p).map(|_| ()),
            Raw::And(a, b) => {
                self.role_hints(a)?;
                self.role_hints(b)
            }
            _ => Ok(()),
        }
    }
}

fn to_concept(r: &Raw) -> Concept {
    match r {
        Raw::Top => Concept::Top,
        Raw::Bot => Concept::Bot,
        Raw::Ident(n, _) | Raw::Inv(n, _) => Concept::Name(n.clone()),
        Raw::Exists(role, body) => Concept::Exists(
            RoleExpr { name: role.name.clone(), inverted: role.inverted },
            Box::new(to_concept(body)),
        ),
        Raw::And(a, b) => match (to_concept(a), to_concept(b)) {
            (Concept::Top, c) | (c, Concept::Top) => c,
            (x, y) => Concept::And(Box::new(x), Box::new(y)),
        },
    }
}

/// Parses a KB document and validates it against its fragment header.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, KbError> {
    parse_kb_with_roles(text, &[])
}

/// As [`parse_kb`], with names that must be read as roles even when no
/// usage in the document says so.
pub fn parse_kb_with_roles(text: &str, roles: &[&str]) -> Result<KnowledgeBase, KbError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = lex(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let end = Pos { line: lineno, col: raw.chars().count() + 1 };
        lines.push(parse_line(toks, end)?);
    }

    let mut sorts = Sorts { map: HashMap::new() };
    for r in roles {
        sorts.map.insert((*r).to_owned(), Sort::Role);
    }
    for l in &lines {
        if let Line::Decl(s, names) = l {
            for (n, p) in names {
                sorts.set(n, *s, *p)?;
            }
        }
    }
    // groups of names that must share a sort
    let mut groups: Vec<Vec<(String, Pos, bool)>> = Vec::new();
    for l in &lines {
        match l {
            Line::Incl(lhs, rhs, _) => {
                if let Some(leaves) = ambiguous_leaves(lhs, rhs) {
                    for (n, p, inv) in &leaves {
                        if *inv {
                            sorts.set(n, Sort::Role, *p)?;
                        }
                    }
                    groups.push(leaves);
                } else {
                    sorts.role_hints(lhs)?;
                    sorts.role_hints(rhs)?;
                }
            }
            Line::Assert2(r, ..) => {
                sorts.set(&r.name, Sort::Role, r.pos)?;
            }
            Line::Assert1(c, _) => sorts.role_hints(c)?,
            _ => {}
        }
    }
    for l in &lines {
        match l {
            Line::Incl(lhs, rhs, _) if ambiguous_leaves(lhs, rhs).is_none() => {
                sorts.evidence(lhs)?;
                sorts.evidence(rhs)?;
            }
            Line::Assert1(c, _) => sorts.evidence(c)?,
            _ => {}
        }
    }
    loop {
        let mut changed = false;
        for g in &groups {
            if let Some(s) = g.iter().find_map(|(n, _, _)| sorts.map.get(n).copied()) {
                for (n, p, _) in g {
                    changed |= sorts.set(n, s, *p)?;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for g in &groups {
        let s = if g[0].0.starts_with(|c: char| c.is_ascii_uppercase()) { Sort::Concept } else { Sort::Role };
        for (n, p, _) in g {
            if !sorts.map.contains_key(n) {
                sorts.set(n, s, *p)?;
            }
        }
    }

    let mut kb = KnowledgeBase::default();
    let mut fragment_seen = false;
    for l in lines {
        match l {
            Line::Fragment(tag, pos) => {
                if fragment_seen || !kb.tbox.is_empty() || !kb.abox.is_empty() {
                    return Err(err(pos, "fragment header must come first and only once"));
                }
                kb.fragment = Fragment::from_tag(&tag).ok_or_else(|| err(pos, format!("unknown fragment `{tag}`")))?;
                fragment_seen = true;
            }
            Line::Decl(..) => {}
            Line::Incl(lhs, rhs, pos) => {
                let leaves = ambiguous_leaves(&lhs, &rhs).unwrap_or_default();
                let role_line =
                    !leaves.is_empty() && leaves.iter().all(|(n, _, _)| sorts.map.get(n) == Some(&Sort::Role));
                if role_line {
                    let r = |x: &(String, Pos, bool)| RoleExpr { name: x.0.clone(), inverted: x.2 };
                    match (&rhs, leaves.len()) {
                        (Raw::Bot, 2) => kb.tbox.push(TBoxAxiom::DisjointRoles(r(&leaves[0]), r(&leaves[1]))),
                        (Raw::Bot, 1) => {
                            kb.tbox.push(TBoxAxiom::DisjointRoles(r(&leaves[0]), r(&leaves[0])));
                        }
                        (_, 2) => kb.tbox.push(TBoxAxiom::RoleInclusion(r(&leaves[0]), r(&leaves[1]))),
                        _ => return Err(err(pos, "malformed role axiom")),
                    }
                } else {
                    check_concept_sorts(&lhs, &sorts)?;
                    check_concept_sorts(&rhs, &sorts)?;
                    kb.tbox.push(TBoxAxiom::ConceptInclusion(to_concept(&lhs), to_concept(&rhs)));
                }
            }
            Line::Assert1(c, a) => {
                check_concept_sorts(&c, &sorts)?;
                kb.abox.push(AboxAssertion::ConceptAssertion(to_concept(&c), a));
            }
            Line::Assert2(r, a, b) => {
                kb.abox.push(AboxAssertion::RoleAssertion(RoleExpr { name: r.name, inverted: r.inverted }, a, b));
            }
        }
    }
    kb.validate()?;
    Ok(kb)
}

fn check_concept_sorts(r: &Raw, sorts: &Sorts) -> Result<(), KbError> {
    match r {
        Raw::Ident(n, p) => {
            if sorts.map.get(n) == Some(&Sort::Role) {
                Err(err(*p, format!("role `{n}` used as a concept")))
            } else {
                Ok(())
            }
        }
        Raw::Inv(n, p) => Err(err(*p, format!("inverse role `{n}-` used as a concept"))),
        Raw::Exists(role, body) => {
            if sorts.map.get(&role.name) == Some(&Sort::Concept) {
                return Err(err(role.pos, format!("concept `{}` used as a role", role.name)));
            }
            check_concept_sorts(body, sorts)
        }
        Raw::And(a, b) => {
            check_concept_sorts(a, sorts)?;
            check_concept_sorts(b, sorts)
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_inclusion() {
        let kb = parse_kb("A <= exists r.B").unwrap();
        assert_eq!(
            kb.tbox,
            vec![TBoxAxiom::ConceptInclusion(Concept::name("A"), Concept::exists(RoleExpr::new("r"), Concept::name("B")))]
        );
    }

    #[test]
    fn inverse_role_inclusion() {
        let kb = parse_kb("r- <= s").unwrap();
        assert_eq!(kb.tbox, vec![TBoxAxiom::RoleInclusion(RoleExpr::inv("r"), RoleExpr::new("s"))]);
    }

    #[test]
    fn dl_lite_core_rejects_role_inclusion() {
        let e = parse_kb("fragment dl-lite-core\nr <= s").unwrap_err();
        assert!(matches!(e, KbError::Fragment { .. }), "{e}");
    }

    #[test]
    fn sorts_from_usage_and_case() {
        let kb = parse_kb("p <= q\nA <= B\nA & B <= bot\nr & s <= bot\nq(a, b)").unwrap();
        assert!(matches!(kb.tbox[0], TBoxAxiom::RoleInclusion(..)));
        assert!(matches!(kb.tbox[1], TBoxAxiom::ConceptInclusion(..)));
        assert!(matches!(kb.tbox[2], TBoxAxiom::ConceptInclusion(..)));
        assert!(matches!(kb.tbox[3], TBoxAxiom::DisjointRoles(..)));
        let kb = parse_kb("role P, Q\nP <= Q").unwrap();
        assert!(matches!(kb.tbox[0], TBoxAxiom::RoleInclusion(..)));
        let kb = parse_kb("concept a, b\na <= b").unwrap();
        assert!(matches!(kb.tbox[0], TBoxAxiom::ConceptInclusion(..)));
    }

    #[test]
    fn mixed_use_is_an_error() {
        assert!(parse_kb("A <= exists r.B\nr(a)").is_err());
        assert!(parse_kb("A <= exists B.C").is_ok());
        assert!(parse_kb("A <= exists B.C\nB(a)").is_err());
    }

    #[test]
    fn syntax_error_position() {
        match parse_kb("A <= B\nA <= exists r B") {
            Err(KbError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 15)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn top_conjunct_is_dropped() {
        let kb = parse_kb("A & top <= B").unwrap();
        assert_eq!(kb.tbox, vec![TBoxAxiom::sub(Concept::name("A"), Concept::name("B"))]);
    }

    #[test]
    fn complex_assertions_and_comments() {
        let kb = parse_kb("# c\n\n(exists r.B)(a)  # trailing\nr-(a, b)\nA(b)").unwrap();
        assert_eq!(kb.abox.len(), 3);
        assert_eq!(
            kb.abox[0],
            AboxAssertion::ConceptAssertion(Concept::exists(RoleExpr::new("r"), Concept::name("B")), "a".into())
        );
        assert_eq!(kb.abox[1], AboxAssertion::RoleAssertion(RoleExpr::inv("r"), "a".into(), "b".into()));
    }

    #[test]
    fn reserved_prefix_cannot_be_written() {
        assert!(parse_kb("__n0 <= A").is_err());
    }
}
