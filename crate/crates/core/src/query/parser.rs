//! Tokenizer and recursive-descent parser.
//!
//! ```text
//! query   := MATCH pattern ("," pattern)* [WHERE cond (AND cond)*] RETURN item ("," item)*
//! pattern := node (edge node)*
//! node    := "(" [var] [":" LABEL] ")"
//! edge    := "-[" body "]->" | "<-[" body "]-" | "-[" body "]-"
//! body    := [var] [":" TYPE ("|" TYPE)*] ["*" [min] [".." [max]]]
//! cond    := var "." field "=" string
//! item    := var ["." field]
//! ```
//! Keywords are case-insensitive. A bare `*` means `*1..3`.

use std::collections::HashMap;

use super::ast::*;
use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(u32),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Dot,
    DotDot,
    Star,
    Dash,
    Arrow,
    BackArrow,
    Eq,
    Pipe,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(n) => format!("number {n}"),
            Tok::End => "end of query".into(),
            other => format!("{:?}", token_text(other)),
        }
    }
}

fn token_text(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Colon => ":",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::DotDot => "..",
        Tok::Star => "*",
        Tok::Dash => "-",
        Tok::Arrow => "->",
        Tok::BackArrow => "<-",
        Tok::Eq => "=",
        Tok::Pipe => "|",
        _ => "",
    }
}

fn syntax(position: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '*' => Tok::Star,
            '=' => Tok::Eq,
            '|' => Tok::Pipe,
            '.' if next == Some('.') => {
                i += 1;
                Tok::DotDot
            }
            '.' => Tok::Dot,
            '-' if next == Some('>') => {
                i += 1;
                Tok::Arrow
            }
            '-' => Tok::Dash,
            '<' if next == Some('-') => {
                i += 1;
                Tok::BackArrow
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(start, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match chars.get(i + 1) {
                            Some(&e @ ('"' | '\\')) => {
                                s.push(e);
                                i += 2;
                            }
                            _ => return Err(syntax(i, "unsupported escape sequence")),
                        },
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i..j].iter().collect();
                let n = digits.parse().map_err(|_| syntax(start, "number too large"))?;
                i = j - 1;
                Tok::Int(n)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Ident(word)
            }
            other => return Err(syntax(start, format!("unexpected character {other:?}"))),
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["MATCH", "WHERE", "AND", "RETURN"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), QueryError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!("expected {:?}, found {}", token_text(&t), self.peek().describe()),
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Tok::Ident(s) if s.eq_ignore_ascii_case(kw) => {
                self.bump();
                true
            }
            _ => false,
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.keyword(kw) {
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {kw}, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            t => Err(syntax(self.offset(), format!("expected {what}, found {}", t.describe()))),
        }
    }

    fn optional_var(&mut self) -> Option<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        }
    }

    fn node(&mut self) -> Result<NodeTerm, QueryError> {
        self.expect(Tok::LParen)?;
        let var = self.optional_var();
        let label = if self.eat(&Tok::Colon) {
            Some(self.ident("label")?)
        } else {
            None
        };
        self.expect(Tok::RParen)?;
        Ok(NodeTerm { var, label })
    }

    fn number(&mut self) -> Option<u32> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Some(n)
            }
            _ => None,
        }
    }

    fn edge(&mut self) -> Result<Option<EdgeTerm>, QueryError> {
        let backward = match self.peek() {
            Tok::BackArrow => true,
            Tok::Dash => false,
            _ => return Ok(None),
        };
        self.bump();
        self.expect(Tok::LBracket)?;
        let var = self.optional_var();
        let mut types = Vec::new();
        if self.eat(&Tok::Colon) {
            types.push(self.ident("relation type")?);
            while self.eat(&Tok::Pipe) {
                types.push(self.ident("relation type")?);
            }
        }
        let mut hops = None;
        let star_at = self.offset();
        if self.eat(&Tok::Star) {
            let min = self.number();
            let (min, max) = if self.eat(&Tok::DotDot) {
                (min.unwrap_or(1), self.number().unwrap_or(MAX_HOPS as u32))
            } else {
                match min {
                    Some(n) => (n, n),
                    None => (1, MAX_HOPS as u32),
                }
            };
            if min > max || max > MAX_HOPS as u32 {
                return Err(QueryError::HopRange { min, max, position: star_at });
            }
            hops = Some(HopRange {
                min: min as u8,
                max: max as u8,
            });
        }
        self.expect(Tok::RBracket)?;
        let direction = if backward {
            self.expect(Tok::Dash)?;
            EdgeDirection::Backward
        } else if self.eat(&Tok::Arrow) {
            EdgeDirection::Forward
        } else {
            self.expect(Tok::Dash)?;
            EdgeDirection::Undirected
        };
        Ok(Some(EdgeTerm {
            var,
            types,
            direction,
            hops,
        }))
    }

    fn pattern(&mut self) -> Result<PathPattern, QueryError> {
        let start = self.node()?;
        let mut steps = Vec::new();
        while let Some(edge) = self.edge()? {
            steps.push((edge, self.node()?));
        }
        Ok(PathPattern { start, steps })
    }

    fn field(&mut self) -> Result<Field, QueryError> {
        let at = self.offset();
        let name = self.ident("field name")?;
        Field::parse(&name).ok_or_else(|| syntax(at, format!("unknown field {name:?}")))
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        self.expect_keyword("MATCH")?;
        let mut patterns = vec![self.pattern()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern()?);
        }
        let mut filters = Vec::new();
        if self.keyword("WHERE") {
            loop {
                let var = self.ident("variable")?;
                self.expect(Tok::Dot)?;
                let field = self.field()?;
                self.expect(Tok::Eq)?;
                let value = match self.bump() {
                    Tok::Str(s) => s,
                    t => return Err(syntax(self.toks[self.pos - 1].0, format!("expected string literal, found {}", t.describe()))),
                };
                filters.push(Filter { var, field, value });
                if !self.keyword("AND") {
                    break;
                }
            }
        }
        self.expect_keyword("RETURN")?;
        let mut returns = Vec::new();
        loop {
            let var = self.ident("variable")?;
            let field = if self.eat(&Tok::Dot) { Some(self.field()?) } else { None };
            returns.push(ReturnItem { var, field });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if *self.peek() != Tok::End {
            return Err(syntax(self.offset(), format!("unexpected {}", self.peek().describe())));
        }
        Ok(Query {
            patterns,
            filters,
            returns,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarKind {
    Node,
    Edge,
    Path,
}

/// Kinds of all named variables, checking that each is used consistently.
pub(crate) fn variable_kinds(q: &Query) -> Result<HashMap<String, VarKind>, QueryError> {
    let mut kinds: HashMap<String, VarKind> = HashMap::new();
    for p in &q.patterns {
        for n in p.nodes() {
            if let Some(v) = &n.var {
                match kinds.insert(v.clone(), VarKind::Node) {
                    None | Some(VarKind::Node) => {}
                    Some(_) => return Err(QueryError::VariableKind(format!("{v} is used both as an edge and as a node"))),
                }
            }
        }
    }
    for p in &q.patterns {
        for (e, _) in &p.steps {
            if let Some(v) = &e.var {
                let kind = if e.hops.is_some() { VarKind::Path } else { VarKind::Edge };
                match kinds.insert(v.clone(), kind) {
                    None => {}
                    Some(VarKind::Node) => {
                        return Err(QueryError::VariableKind(format!("{v} is used both as a node and as an edge")))
                    }
                    Some(_) => return Err(QueryError::VariableKind(format!("edge variable {v} is bound more than once"))),
                }
            }
        }
    }
    let check = |var: &str, field: Option<Field>| -> Result<(), QueryError> {
        let kind = *kinds
            .get(var)
            .ok_or_else(|| QueryError::UnboundVariable(var.to_string()))?;
        match (kind, field) {
            (_, None) => Ok(()),
            (VarKind::Node, Some(f)) if f.on_node() => Ok(()),
            (VarKind::Edge, Some(f)) if !f.on_node() => Ok(()),
            (_, Some(f)) => Err(QueryError::VariableKind(format!("{var} has no field {}", f.name()))),
        }
    };
    for f in &q.filters {
        check(&f.var, Some(f.field))?;
    }
    for r in &q.returns {
        check(&r.var, r.field)?;
    }
    Ok(kinds)
}

pub fn parse(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let q = p.query()?;
    variable_kinds(&q)?;
    Ok(q)
}
