//! Hand-written lexer and recursive-descent parser.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::ast::{AggExpr, AggFunc, AggTarget, CmpOp, Predicate, QueryAst};
use crate::types::{Metric, Policy};

/// Syntax error at a character offset (0-based) into the query text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at position {}: expected ", self.position)?;
        match self.expected.as_slice() {
            [] => f.write_str("nothing")?,
            [one] => f.write_str(one)?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {}", self.found)
    }
}

impl core::error::Error for ParseError {}

/// Words that cannot be used as table or column names.
pub const RESERVED: [&str; 14] = [
    "SELECT",
    "FROM",
    "WHERE",
    "AND",
    "GROUP",
    "BY",
    "DISTANCE-TO-ALL",
    "L2",
    "LINF",
    "WITHIN",
    "ON-OVERLAP",
    "DUPLICATE",
    "ELIMINATE",
    "NEW-GROUP",
];

const HYPHENATED: [&str; 3] = ["DISTANCE-TO-ALL", "ON-OVERLAP", "NEW-GROUP"];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Comma,
    LParen,
    RParen,
    Star,
    Semi,
    Op(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Comma => "','".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Star => "'*'".into(),
            Tok::Semi => "';'".into(),
            Tok::Op(op) => format!("'{}'", op.as_str()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let cs: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, found: String, expected: &[&str]| ParseError {
        position: pos,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    };
    while i < cs.len() {
        let c = cs[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let is_word_char = |c: char| c.is_ascii_alphanumeric() || c == '_';
        if c.is_ascii_alphabetic() || c == '_' {
            while i < cs.len() && (is_word_char(cs[i]) || (cs[i] == '-' && cs.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic()))) {
                i += 1;
            }
            let w: String = cs[start..i].iter().collect();
            if w.contains('-') && !HYPHENATED.iter().any(|k| k.eq_ignore_ascii_case(&w)) {
                let dash = start + w.find('-').expect("contains '-'");
                return Err(err(dash, "'-'".into(), &["identifier character"]));
            }
            out.push((start, Tok::Word(w)));
            continue;
        }
        if c.is_ascii_digit() || ((c == '-' || c == '+') && cs.get(i + 1).is_some_and(|n| n.is_ascii_digit())) {
            i += 1;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            if i < cs.len() && cs[i] == '.' {
                i += 1;
                if !cs.get(i).is_some_and(|n| n.is_ascii_digit()) {
                    let found = cs.get(i).map_or("end of input".to_owned(), |c| format!("'{c}'"));
                    return Err(err(i, found, &["digit"]));
                }
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if cs.get(i).is_some_and(|n| is_word_char(*n) || *n == '.') {
                return Err(err(i, format!("'{}'", cs[i]), &["end of number"]));
            }
            out.push((start, Tok::Number(cs[start..i].iter().collect())));
            continue;
        }
        let (tok, len) = match (c, cs.get(i + 1).copied()) {
            (',', _) => (Tok::Comma, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('*', _) => (Tok::Star, 1),
            (';', _) => (Tok::Semi, 1),
            ('=', _) => (Tok::Op(CmpOp::Eq), 1),
            ('<', Some('>')) => (Tok::Op(CmpOp::Ne), 2),
            ('<', Some('=')) => (Tok::Op(CmpOp::Le), 2),
            ('<', _) => (Tok::Op(CmpOp::Lt), 1),
            ('>', Some('=')) => (Tok::Op(CmpOp::Ge), 2),
            ('>', _) => (Tok::Op(CmpOp::Gt), 1),
            _ => return Err(err(i, format!("'{c}'"), &["identifier", "number", "punctuation"])),
        };
        out.push((start, tok));
        i += len;
    }
    out.push((cs.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn one_of<T: Copy>(&mut self, choices: &[(&str, T)]) -> Result<T, ParseError> {
        if let Tok::Word(w) = self.peek() {
            if let Some((_, v)) = choices.iter().find(|(k, _)| k.eq_ignore_ascii_case(w)) {
                let v = *v;
                self.bump();
                return Ok(v);
            }
        }
        let names: Vec<&str> = choices.iter().map(|(k, _)| *k).collect();
        self.fail(&names)
    }

    fn punct(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Word(w) if !is_reserved(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn number(&mut self) -> Result<(usize, f64), ParseError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Number(n) => {
                let v: f64 = n.parse().map_err(|_| ParseError {
                    position: pos,
                    expected: vec!["number".into()],
                    found: n.clone(),
                })?;
                if !v.is_finite() {
                    return self.fail(&["finite number"]);
                }
                self.bump();
                Ok((pos, v))
            }
            _ => self.fail(&["number"]),
        }
    }

    fn agg(&mut self) -> Result<AggExpr, ParseError> {
        let funcs: Vec<(&str, AggFunc)> = AggFunc::ALL.iter().map(|f| (f.as_str(), *f)).collect();
        let func = self.one_of(&funcs)?;
        self.punct(Tok::LParen, "'('")?;
        let target = if func == AggFunc::Count && *self.peek() == Tok::Star {
            self.bump();
            AggTarget::Star
        } else if func == AggFunc::Count {
            match self.ident() {
                Ok(c) => AggTarget::Column(c),
                Err(_) => return self.fail(&["'*'", "identifier"]),
            }
        } else {
            AggTarget::Column(self.ident()?)
        };
        self.punct(Tok::RParen, "')'")?;
        Ok(AggExpr { func, target })
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let column = self.ident()?;
        let op = match self.peek() {
            Tok::Op(op) => *op,
            _ => return self.fail(&["=", "<>", "<", "<=", ">", ">="]),
        };
        self.bump();
        let (_, value) = self.number()?;
        Ok(Predicate { column, op, value })
    }

    fn query(&mut self) -> Result<QueryAst, ParseError> {
        self.keyword("SELECT")?;
        let mut selects = vec![self.agg()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            selects.push(self.agg()?);
        }
        self.keyword("FROM")?;
        let source = self.ident()?;
        let mut filter = Vec::new();
        if self.at_keyword("WHERE") {
            self.bump();
            filter.push(self.predicate()?);
            while self.at_keyword("AND") {
                self.bump();
                filter.push(self.predicate()?);
            }
        } else if !self.at_keyword("GROUP") {
            return self.fail(&["WHERE", "GROUP"]);
        }
        self.keyword("GROUP")?;
        self.keyword("BY")?;
        let mut group_cols = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            group_cols.push(self.ident()?);
        }
        if !self.at_keyword("DISTANCE-TO-ALL") {
            return self.fail(&["','", "DISTANCE-TO-ALL"]);
        }
        self.bump();
        let metric = self.one_of(&[("L2", Metric::L2), ("LINF", Metric::LInf)])?;
        self.keyword("WITHIN")?;
        let (eps_pos, eps) = self.number()?;
        if eps <= 0.0 {
            return Err(ParseError {
                position: eps_pos,
                expected: vec!["positive number".into()],
                found: format!("{eps}"),
            });
        }
        let overlap = if self.at_keyword("ON-OVERLAP") {
            self.bump();
            let choices: Vec<(&str, Policy)> = Policy::ALL.iter().map(|p| (p.as_str(), *p)).collect();
            self.one_of(&choices)?
        } else {
            Policy::Duplicate
        };
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return self.fail(&["end of input"]);
        }
        Ok(QueryAst { selects, source, filter, group_cols, metric, eps, overlap })
    }
}

/// Parses one query. Keywords are case-insensitive; identifiers are kept as
/// written. `ON-OVERLAP` defaults to `DUPLICATE`; a trailing `;` is allowed.
pub fn parse(text: &str) -> Result<QueryAst, ParseError> {
    let toks = lex(text)?;
    Parser { toks, at: 0 }.query()
}
