//! Concrete text syntax: parsers and canonical printers for formulas, PKS
//! models, and proof scripts. All three formats are UTF-8 with `#` line
//! comments; Unicode operator spellings are accepted as input aliases.

use crate::formula::{Bound, Cmp, Formula, Interval, Path};
use crate::pks::Pks;
use crate::proof_types::{AxiomId, Justification, ProofLine, ProofScript};
use crate::rat::{self, Rat};
use std::fmt;
use thiserror::Error;

/// Position of a token inside the parsed text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    DuplicateTransition,
    UnknownState,
    MalformedThreshold,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at {span}: {message}{}", expected_list(.expected))]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl ParseError {
    fn syntax(span: SourceSpan, message: impl Into<String>, expected: Vec<&str>) -> ParseError {
        ParseError {
            span,
            kind: ParseErrorKind::Syntax,
            message: message.into(),
            expected: expected.into_iter().map(String::from).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(Rat),
    Bang,
    Amp,
    Pipe,
    Arrow,
    IffOp,
    Ge,
    Gt,
    Le,
    Lt,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Number(r) => format!("number `{}`", rat::fmt_rat(*r)),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::IffOp => "`<->`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, SourceSpan)>,
}

fn lex(text: &str, line0: usize, col0: usize) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line = line0;
    let mut col = col0;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span1 = SourceSpan { line, column: col, length: 1 };
        let mut push1 = |t: Tok, i: &mut usize, col: &mut usize| {
            toks.push((t, SourceSpan { line, column: *col, length: 1 }));
            *i += 1;
            *col += 1;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '!' | '¬' => push1(Tok::Bang, &mut i, &mut col),
            '&' | '∧' => push1(Tok::Amp, &mut i, &mut col),
            '|' | '∨' => push1(Tok::Pipe, &mut i, &mut col),
            '→' => push1(Tok::Arrow, &mut i, &mut col),
            '↔' => push1(Tok::IffOp, &mut i, &mut col),
            '≥' => push1(Tok::Ge, &mut i, &mut col),
            '≤' => push1(Tok::Le, &mut i, &mut col),
            '(' => push1(Tok::LParen, &mut i, &mut col),
            ')' => push1(Tok::RParen, &mut i, &mut col),
            '[' => push1(Tok::LBracket, &mut i, &mut col),
            ']' => push1(Tok::RBracket, &mut i, &mut col),
            ',' => push1(Tok::Comma, &mut i, &mut col),
            '.' => push1(Tok::Dot, &mut i, &mut col),
            ';' => push1(Tok::Semi, &mut i, &mut col),
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    toks.push((Tok::Arrow, SourceSpan { line, column: col, length: 2 }));
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError::syntax(span1, "stray `-`", vec!["->"]));
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    toks.push((Tok::IffOp, SourceSpan { line, column: col, length: 3 }));
                    i += 3;
                    col += 3;
                } else if chars.get(i + 1) == Some(&'=') {
                    toks.push((Tok::Le, SourceSpan { line, column: col, length: 2 }));
                    i += 2;
                    col += 2;
                } else {
                    push1(Tok::Lt, &mut i, &mut col);
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    toks.push((Tok::Ge, SourceSpan { line, column: col, length: 2 }));
                    i += 2;
                    col += 2;
                } else {
                    push1(Tok::Gt, &mut i, &mut col);
                }
            }
            _ if c.is_ascii_digit() => {
                let start = i;
                let start_col = col;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                // decimal or fraction continuation
                if i < chars.len()
                    && (chars[i] == '.' || chars[i] == '/')
                    && chars.get(i + 1).map(|d| d.is_ascii_digit()).unwrap_or(false)
                {
                    i += 1;
                    col += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                        col += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let span = SourceSpan { line, column: start_col, length: i - start };
                let value = rat::parse_rat(&text).ok_or_else(|| {
                    ParseError::syntax(span, format!("malformed number `{}`", text), vec![])
                })?;
                toks.push((Tok::Number(value), span));
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                let start_col = col;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                    col += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let span = SourceSpan { line, column: start_col, length: i - start };
                // Unicode path operator aliases
                toks.push((Tok::Ident(word), span));
            }
            '○' => {
                toks.push((Tok::Ident("X".into()), span1));
                i += 1;
                col += 1;
            }
            '◊' | '◇' => {
                toks.push((Tok::Ident("F".into()), span1));
                i += 1;
                col += 1;
            }
            '□' => {
                toks.push((Tok::Ident("G".into()), span1));
                i += 1;
                col += 1;
            }
            '⊔' => {
                toks.push((Tok::Ident("U".into()), span1));
                i += 1;
                col += 1;
            }
            _ => {
                return Err(ParseError::syntax(
                    span1,
                    format!("unexpected character `{}`", c),
                    vec![],
                ))
            }
        }
    }
    Ok(Lexer { toks })
}

// ---------------------------------------------------------------------------
// Formula parser
// ---------------------------------------------------------------------------

struct P {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    end: SourceSpan,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map(|(_, s)| *s).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError::syntax(
                self.span(),
                format!("found {}", t.describe()),
                vec![what],
            )),
            None => Err(ParseError::syntax(self.end, "unexpected end of input", vec![what])),
        }
    }

    fn number(&mut self, what: &str) -> Result<Rat, ParseError> {
        match self.next() {
            Some(Tok::Number(r)) => Ok(r),
            Some(t) => {
                self.pos -= 1;
                Err(ParseError::syntax(
                    self.span(),
                    format!("found {}", t.describe()),
                    vec![what],
                ))
            }
            None => Err(ParseError::syntax(self.end, "unexpected end of input", vec![what])),
        }
    }
}


fn parse_phi(p: &mut P) -> Result<Formula, ParseError> {
    parse_iff(p)
}

fn parse_iff(p: &mut P) -> Result<Formula, ParseError> {
    let lhs = parse_implies(p)?;
    if p.peek() == Some(&Tok::IffOp) {
        p.next();
        let rhs = parse_iff(p)?;
        Ok(Formula::iff(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_implies(p: &mut P) -> Result<Formula, ParseError> {
    let lhs = parse_or(p)?;
    if p.peek() == Some(&Tok::Arrow) {
        p.next();
        let rhs = parse_implies(p)?;
        Ok(Formula::implies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_or(p: &mut P) -> Result<Formula, ParseError> {
    let lhs = parse_and(p)?;
    if p.peek() == Some(&Tok::Pipe) {
        p.next();
        let rhs = parse_or(p)?;
        Ok(Formula::or(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_and(p: &mut P) -> Result<Formula, ParseError> {
    let lhs = parse_unary(p)?;
    if p.peek() == Some(&Tok::Amp) {
        p.next();
        let rhs = parse_and(p)?;
        Ok(Formula::and(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_unary(p: &mut P) -> Result<Formula, ParseError> {
    match p.peek() {
        Some(Tok::Bang) => {
            p.next();
            Ok(Formula::not(parse_unary(p)?))
        }
        Some(Tok::LParen) => {
            p.next();
            let inner = parse_phi(p)?;
            p.expect(Tok::RParen, ")")?;
            Ok(inner)
        }
        Some(Tok::Ident(w)) => {
            let w = w.clone();
            match w.as_str() {
                "true" => {
                    p.next();
                    Ok(Formula::True)
                }
                "false" => {
                    p.next();
                    Ok(Formula::False)
                }
                "Po" | "Ne" => parse_modal(p),
                "X" | "U" | "R" | "F" | "G" => Err(ParseError::syntax(
                    p.span(),
                    format!("path operator `{}` outside a Po/Ne block", w),
                    vec!["formula"],
                )),
                _ => {
                    p.next();
                    Ok(Formula::Atom(w))
                }
            }
        }
        Some(t) => Err(ParseError::syntax(
            p.span(),
            format!("found {}", t.describe()),
            vec!["formula"],
        )),
        None => Err(ParseError::syntax(p.end, "unexpected end of input", vec!["formula"])),
    }
}

fn parse_modal(p: &mut P) -> Result<Formula, ParseError> {
    let is_po = matches!(p.peek(), Some(Tok::Ident(w)) if w == "Po");
    p.next();
    let bound = parse_bound(p)?;
    p.expect(Tok::LBracket, "[")?;
    let path = parse_path(p)?;
    p.expect(Tok::RBracket, "]")?;
    Ok(if is_po { Formula::Po(bound, path) } else { Formula::Ne(bound, path) })
}

fn parse_bound(p: &mut P) -> Result<Bound, ParseError> {
    let span = p.span();
    match p.next() {
        Some(Tok::Ge) => Ok(Bound::Cmp(Cmp::Ge, p.number("rational")?)),
        Some(Tok::Gt) => Ok(Bound::Cmp(Cmp::Gt, p.number("rational")?)),
        Some(Tok::Le) => Ok(Bound::Cmp(Cmp::Le, p.number("rational")?)),
        Some(Tok::Lt) => Ok(Bound::Cmp(Cmp::Lt, p.number("rational")?)),
        Some(open @ (Tok::LBracket | Tok::LParen)) => {
            let lo = p.number("rational")?;
            p.expect(Tok::Comma, ",")?;
            let hi = p.number("rational")?;
            let hi_closed = match p.next() {
                Some(Tok::RBracket) => true,
                Some(Tok::RParen) => false,
                _ => {
                    return Err(ParseError::syntax(
                        span,
                        "unterminated interval bound",
                        vec!["]", ")"],
                    ))
                }
            };
            Ok(Bound::In(Interval {
                lo,
                hi,
                lo_closed: open == Tok::LBracket,
                hi_closed,
            }))
        }
        _ => Err(ParseError::syntax(
            span,
            "expected threshold bound after Po/Ne",
            vec![">=", ">", "<=", "<", "[", "("],
        )),
    }
}

fn parse_nat(p: &mut P) -> Result<u32, ParseError> {
    let span = p.span();
    let r = p.number("natural number")?;
    if r.denom() != &1 || *r.numer() < 0 {
        return Err(ParseError::syntax(span, "step bound must be a natural number", vec![]));
    }
    u32::try_from(*r.numer())
        .map_err(|_| ParseError::syntax(span, "step bound too large", vec![]))
}

fn parse_path(p: &mut P) -> Result<Path, ParseError> {
    match p.peek() {
        Some(Tok::Ident(w)) if w == "X" => {
            p.next();
            Ok(Path::Next(Box::new(parse_phi(p)?)))
        }
        Some(Tok::Ident(w)) if w == "F" => {
            p.next();
            Ok(Path::Eventually(Box::new(parse_phi(p)?)))
        }
        Some(Tok::Ident(w)) if w == "G" => {
            p.next();
            if p.peek() == Some(&Tok::Le) {
                p.next();
                let n = parse_nat(p)?;
                Ok(Path::BoundedAlways(Box::new(parse_phi(p)?), n))
            } else {
                Ok(Path::Always(Box::new(parse_phi(p)?)))
            }
        }
        _ => {
            let lhs = parse_phi(p)?;
            match p.next() {
                Some(Tok::Ident(w)) if w == "U" => {
                    if p.peek() == Some(&Tok::Le) {
                        p.next();
                        let n = parse_nat(p)?;
                        let rhs = parse_phi(p)?;
                        Ok(Path::BoundedUntil(Box::new(lhs), Box::new(rhs), n))
                    } else {
                        Ok(Path::Until(Box::new(lhs), Box::new(parse_phi(p)?)))
                    }
                }
                Some(Tok::Ident(w)) if w == "R" => {
                    Ok(Path::Release(Box::new(lhs), Box::new(parse_phi(p)?)))
                }
                _ => {
                    if p.pos > 0 {
                        p.pos -= 1;
                    }
                    Err(ParseError::syntax(
                        p.span(),
                        "expected a path operator",
                        vec!["U", "R"],
                    ))
                }
            }
        }
    }
}

fn end_span(text: &str) -> SourceSpan {
    let line = text.lines().count().max(1);
    let column = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    SourceSpan { line, column, length: 1 }
}

/// Parses a PoCTL state formula from its concrete syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let lexer = lex(text, 1, 1)?;
    let mut p = P { toks: lexer.toks, pos: 0, end: end_span(text) };
    let f = parse_phi(&mut p)?;
    if let Some(t) = p.peek() {
        return Err(ParseError::syntax(
            p.span(),
            format!("trailing input: found {}", t.describe()),
            vec![],
        ));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Formula printer
// ---------------------------------------------------------------------------

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(..) => 5,
        _ => 6,
    }
}

fn print_prec(f: &Formula, min: u8, out: &mut String) {
    let need_parens = prec(f) < min;
    if need_parens {
        out.push('(');
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom(a) => out.push_str(a),
        Formula::Not(a) => {
            out.push('!');
            print_prec(a, 5, out);
        }
        Formula::And(a, b) => {
            print_prec(a, 5, out);
            out.push_str(" & ");
            print_prec(b, 4, out);
        }
        Formula::Or(a, b) => {
            print_prec(a, 4, out);
            out.push_str(" | ");
            print_prec(b, 3, out);
        }
        Formula::Implies(a, b) => {
            print_prec(a, 3, out);
            out.push_str(" -> ");
            print_prec(b, 2, out);
        }
        Formula::Iff(a, b) => {
            print_prec(a, 2, out);
            out.push_str(" <-> ");
            print_prec(b, 1, out);
        }
        Formula::Po(bound, p) | Formula::Ne(bound, p) => {
            out.push_str(if matches!(f, Formula::Po(..)) { "Po" } else { "Ne" });
            print_bound(bound, out);
            out.push('[');
            print_path(p, out);
            out.push(']');
        }
    }
    if need_parens {
        out.push(')');
    }
}

fn print_bound(bound: &Bound, out: &mut String) {
    match bound {
        Bound::Cmp(c, r) => {
            out.push_str(match c {
                Cmp::Ge => ">=",
                Cmp::Gt => ">",
                Cmp::Le => "<=",
                Cmp::Lt => "<",
            });
            out.push_str(&rat::fmt_rat(*r));
        }
        Bound::In(iv) => {
            out.push(if iv.lo_closed { '[' } else { '(' });
            out.push_str(&rat::fmt_rat(iv.lo));
            out.push(',');
            out.push_str(&rat::fmt_rat(iv.hi));
            out.push(if iv.hi_closed { ']' } else { ')' });
        }
    }
}

fn print_path(p: &Path, out: &mut String) {
    match p {
        Path::Next(a) => {
            out.push_str("X ");
            print_prec(a, 1, out);
        }
        Path::Eventually(a) => {
            out.push_str("F ");
            print_prec(a, 1, out);
        }
        Path::Always(a) => {
            out.push_str("G ");
            print_prec(a, 1, out);
        }
        Path::BoundedAlways(a, n) => {
            out.push_str(&format!("G<={} ", n));
            print_prec(a, 1, out);
        }
        Path::Until(a, b) => {
            print_prec(a, 1, out);
            out.push_str(" U ");
            print_prec(b, 1, out);
        }
        Path::BoundedUntil(a, b, n) => {
            print_prec(a, 1, out);
            out.push_str(&format!(" U<={} ", n));
            print_prec(b, 1, out);
        }
        Path::Release(a, b) => {
            print_prec(a, 1, out);
            out.push_str(" R ");
            print_prec(b, 1, out);
        }
    }
}

/// Canonical text for a formula; `parse_formula(print_formula(f))` is
/// structurally identical to `f`.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    print_prec(f, 1, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_formula(self))
    }
}

// ---------------------------------------------------------------------------
// PKS files
// ---------------------------------------------------------------------------

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn span_at(lineno: usize, col: usize, len: usize) -> SourceSpan {
    SourceSpan { line: lineno, column: col, length: len.max(1) }
}

/// Parses the line-oriented PKS format:
/// `states: s0 s1 ...`, `init: s:RAT ...`, `label s: a b`, `trans s -> t : RAT`.
pub fn parse_pks(text: &str) -> Result<Pks, ParseError> {
    let mut model: Option<Pks> = None;
    let mut seen_trans: std::collections::HashSet<(usize, usize)> = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(':') {
            Some((h, r)) => (h.trim(), r.trim()),
            None => {
                return Err(ParseError::syntax(
                    span_at(lineno, 1, raw.len()),
                    "expected `states:`, `init:`, `label s:` or `trans s -> t :`",
                    vec!["states", "init", "label", "trans"],
                ))
            }
        };
        if head == "states" {
            if model.is_some() {
                return Err(ParseError::syntax(
                    span_at(lineno, 1, 6),
                    "duplicate `states:` line",
                    vec![],
                ));
            }
            let names: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if names.is_empty() {
                return Err(ParseError::syntax(
                    span_at(lineno, 1, raw.len()),
                    "empty state list",
                    vec![],
                ));
            }
            let mut uniq = std::collections::HashSet::new();
            for n in &names {
                if !uniq.insert(n.clone()) {
                    return Err(ParseError::syntax(
                        span_at(lineno, 1, raw.len()),
                        format!("duplicate state `{}`", n),
                        vec![],
                    ));
                }
            }
            model = Some(Pks::new(names));
            continue;
        }
        let m = model.as_mut().ok_or_else(|| {
            ParseError::syntax(span_at(lineno, 1, raw.len()), "`states:` line must come first", vec![
                "states",
            ])
        })?;
        let resolve = |name: &str| -> Result<usize, ParseError> {
            m.states.iter().position(|s| s == name).ok_or(ParseError {
                span: span_at(lineno, 1, raw.len()),
                kind: ParseErrorKind::UnknownState,
                message: format!("unknown state `{}`", name),
                expected: vec![],
            })
        };
        let unit_value = |txt: &str| -> Result<Rat, ParseError> {
            let v = rat::parse_rat(txt).ok_or_else(|| {
                ParseError::syntax(
                    span_at(lineno, 1, raw.len()),
                    format!("malformed rational `{}`", txt),
                    vec![],
                )
            })?;
            if !rat::in_unit(v) {
                return Err(ParseError {
                    span: span_at(lineno, 1, raw.len()),
                    kind: ParseErrorKind::MalformedThreshold,
                    message: format!("value {} outside [0,1]", rat::fmt_rat(v)),
                    expected: vec![],
                });
            }
            Ok(v)
        };
        if head == "init" {
            for item in rest.split_whitespace() {
                let (name, val) = item.split_once(':').ok_or_else(|| {
                    ParseError::syntax(
                        span_at(lineno, 1, raw.len()),
                        format!("malformed init entry `{}`; use s:RAT", item),
                        vec![],
                    )
                })?;
                let s = resolve(name)?;
                let v = unit_value(val)?;
                m.init[s] = v;
            }
        } else if let Some(state) = head.strip_prefix("label") {
            let s = resolve(state.trim())?;
            for atom in rest.split_whitespace() {
                let atom = atom.to_string();
                if !m.atoms.contains(&atom) {
                    m.atoms.push(atom.clone());
                }
                m.labels[s].insert(atom);
            }
        } else if let Some(pair) = head.strip_prefix("trans") {
            let (from, to) = pair.split_once("->").ok_or_else(|| {
                ParseError::syntax(
                    span_at(lineno, 1, raw.len()),
                    "malformed transition; use `trans s -> t : RAT`",
                    vec!["->"],
                )
            })?;
            let s = resolve(from.trim())?;
            let t = resolve(to.trim())?;
            if !seen_trans.insert((s, t)) {
                return Err(ParseError {
                    span: span_at(lineno, 1, raw.len()),
                    kind: ParseErrorKind::DuplicateTransition,
                    message: format!(
                        "duplicate transition {} -> {}",
                        m.states[s], m.states[t]
                    ),
                    expected: vec![],
                });
            }
            let v = unit_value(rest)?;
            m.p[s][t] = v;
        } else {
            return Err(ParseError::syntax(
                span_at(lineno, 1, raw.len()),
                format!("unknown directive `{}`", head),
                vec!["states", "init", "label", "trans"],
            ));
        }
    }
    model.ok_or_else(|| {
        ParseError::syntax(span_at(1, 1, 1), "empty model: no `states:` line", vec!["states"])
    })
}

/// Canonical text for a PKS; round-trips through `parse_pks`.
pub fn print_pks(m: &Pks) -> String {
    let mut out = String::new();
    out.push_str("states:");
    for s in &m.states {
        out.push(' ');
        out.push_str(s);
    }
    out.push('\n');
    let inits: Vec<String> = (0..m.len())
        .filter(|s| m.init[*s] != rat::zero())
        .map(|s| format!("{}:{}", m.states[s], rat::fmt_rat(m.init[s])))
        .collect();
    if !inits.is_empty() {
        out.push_str(&format!("init: {}\n", inits.join(" ")));
    }
    for s in 0..m.len() {
        if !m.labels[s].is_empty() {
            let atoms: Vec<&str> = m.labels[s].iter().map(|a| a.as_str()).collect();
            out.push_str(&format!("label {}: {}\n", m.states[s], atoms.join(" ")));
        }
    }
    for s in 0..m.len() {
        for t in 0..m.len() {
            if m.p[s][t] != rat::zero() {
                out.push_str(&format!(
                    "trans {} -> {} : {}\n",
                    m.states[s],
                    m.states[t],
                    rat::fmt_rat(m.p[s][t])
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Proof scripts
// ---------------------------------------------------------------------------

fn parse_formula_at(text: &str, lineno: usize, col0: usize) -> Result<Formula, ParseError> {
    let lexer = lex(text, lineno, col0)?;
    let end = SourceSpan { line: lineno, column: col0 + text.chars().count(), length: 1 };
    let mut p = P { toks: lexer.toks, pos: 0, end };
    let f = parse_phi(&mut p)?;
    if let Some(t) = p.peek() {
        return Err(ParseError::syntax(
            p.span(),
            format!("trailing input: found {}", t.describe()),
            vec![],
        ));
    }
    Ok(f)
}

fn parse_just(text: &str, lineno: usize, col0: usize) -> Result<Justification, ParseError> {
    let text = text.trim();
    let span = span_at(lineno, col0, text.len());
    let mut words = text.split_whitespace();
    let head = words
        .next()
        .ok_or_else(|| ParseError::syntax(span, "missing justification", vec![]))?;
    let index = |w: Option<&str>, what: &str| -> Result<u32, ParseError> {
        w.and_then(|x| x.parse::<u32>().ok()).ok_or_else(|| {
            ParseError::syntax(span, format!("expected {} line number", what), vec![])
        })
    };
    let just = match head {
        "ASSUME" => Justification::Assume,
        "MP" => Justification::Mp(index(words.next(), "implication")?, index(words.next(), "antecedent")?),
        "NEC-NEXT" | "NEC-ALW" => {
            let cmp = match words.next() {
                Some(">=") | Some("≥") => Cmp::Ge,
                Some(">") => Cmp::Gt,
                _ => {
                    return Err(ParseError::syntax(
                        span,
                        "necessitation needs a comparison",
                        vec![">=", ">"],
                    ))
                }
            };
            let r = words
                .next()
                .and_then(rat::parse_rat)
                .ok_or_else(|| ParseError::syntax(span, "necessitation needs a threshold", vec![]))?;
            let premise = index(words.next(), "premise")?;
            if head == "NEC-NEXT" {
                Justification::NecNext(cmp, r, premise)
            } else {
                Justification::NecAlw(cmp, r, premise)
            }
        }
        "PCONS" => {
            let mut premises = Vec::new();
            for w in words.by_ref() {
                premises.push(index(Some(w), "premise")?);
            }
            if premises.is_empty() {
                return Err(ParseError::syntax(span, "PCONS needs at least one premise", vec![]));
            }
            Justification::Pcons(premises)
        }
        "REPL" => Justification::Repl(index(words.next(), "target")?, index(words.next(), "equivalence")?),
        other => match AxiomId::from_name(other) {
            Some(id) => Justification::Axiom(id),
            None => {
                return Err(ParseError::syntax(
                    span,
                    format!("unknown justification `{}`", other),
                    vec!["A1..A11", "AP1..AP3", "ASSUME", "MP", "NEC-NEXT", "NEC-ALW", "PCONS", "REPL"],
                ))
            }
        },
    };
    if words.next().is_some() && !matches!(just, Justification::Pcons(_)) {
        return Err(ParseError::syntax(span, "trailing input after justification", vec![]));
    }
    Ok(just)
}

/// Parses a proof script: optional `assume: FORMULA` lines naming the
/// assumption set, then numbered lines `N. FORMULA ; JUST`.
pub fn parse_proof(text: &str) -> Result<ProofScript, ParseError> {
    let mut script = ProofScript::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip_comment(raw).trim_end();
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.trim_start().strip_prefix("assume:") {
            let col = raw.find("assume:").map(|c| c + 8).unwrap_or(1);
            script.assumptions.push(parse_formula_at(rest, lineno, col)?);
            continue;
        }
        let (num, rest) = line.split_once('.').ok_or_else(|| {
            ParseError::syntax(
                span_at(lineno, 1, raw.len()),
                "expected `N. FORMULA ; JUST`",
                vec![],
            )
        })?;
        let index: u32 = num.trim().parse().map_err(|_| {
            ParseError::syntax(
                span_at(lineno, 1, num.len()),
                format!("malformed line number `{}`", num.trim()),
                vec![],
            )
        })?;
        let (ftext, jtext) = rest.rsplit_once(';').ok_or_else(|| {
            ParseError::syntax(
                span_at(lineno, 1, raw.len()),
                "missing `;` before justification",
                vec![";"],
            )
        })?;
        let col0 = num.len() + 2;
        let formula = parse_formula_at(ftext, lineno, col0)?;
        let jcol = col0 + ftext.chars().count() + 1;
        let just = parse_just(jtext, lineno, jcol)?;
        script.lines.push(ProofLine { index, formula, just });
    }
    Ok(script)
}

/// Canonical text for a proof script; round-trips through `parse_proof`.
pub fn print_proof(script: &ProofScript) -> String {
    let mut out = String::new();
    for a in &script.assumptions {
        out.push_str(&format!("assume: {}\n", print_formula(a)));
    }
    for l in &script.lines {
        let just = match &l.just {
            Justification::Axiom(id) => id.name().to_string(),
            Justification::Assume => "ASSUME".into(),
            Justification::Mp(i, j) => format!("MP {} {}", i, j),
            Justification::NecNext(c, r, i) => format!(
                "NEC-NEXT {} {} {}",
                if *c == Cmp::Ge { ">=" } else { ">" },
                rat::fmt_rat(*r),
                i
            ),
            Justification::NecAlw(c, r, i) => format!(
                "NEC-ALW {} {} {}",
                if *c == Cmp::Ge { ">=" } else { ">" },
                rat::fmt_rat(*r),
                i
            ),
            Justification::Pcons(ps) => format!(
                "PCONS {}",
                ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
            ),
            Justification::Repl(i, j) => format!("REPL {} {}", i, j),
        };
        out.push_str(&format!("{}. {} ; {}\n", l.index, print_formula(&l.formula), just));
    }
    out
}
