use std::collections::BTreeMap;

use regex::Regex;
use thiserror::Error;

use super::{
    CompareOp, FilterExpr, GroupPattern, Operand, PatternTerm, Projection, Query, SortDir,
    TriplePatternAst,
};
use crate::rdf::{vocab, BlankNode, Iri, Literal, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct QueryParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Keywords outside the supported subset get a dedicated error so template
/// authors see "unsupported: UNION" instead of a generic parse failure.
const UNSUPPORTED: &[&str] = &[
    "UNION", "GRAPH", "SERVICE", "MINUS", "BIND", "VALUES", "EXISTS", "CONSTRUCT", "ASK",
    "DESCRIBE", "GROUP", "HAVING", "OFFSET", "REDUCED",
];

pub fn parse_query(text: &str) -> Result<Query, QueryParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        prefixes: BTreeMap::new(),
    };
    let query = p.parse_query()?;
    p.expect_eof()?;
    Ok(query)
}

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Var(String),
    Iri(String),
    /// Prefixed name, split at the first colon.
    PName(String, String),
    Str(String),
    LangTag(String),
    DtSep, // ^^
    Num(String),
    Word(String),
    Punct(&'static str),
    BlankLabel(String),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, QueryParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    macro_rules! err {
        ($($arg:tt)*) => {
            return Err(QueryParseError { line, col, message: format!($($arg)*) })
        };
    }
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Spanned {
                tok,
                line: tline,
                col: tcol,
            })
        };
        let mut step = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        match c {
            _ if c.is_whitespace() => step(&mut i, &mut line, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    step(&mut i, &mut line, &mut col);
                }
            }
            '?' | '$' => {
                step(&mut i, &mut line, &mut col);
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    step(&mut i, &mut line, &mut col);
                }
                if i == start {
                    err!("expected variable name after '{c}'");
                }
                push(Tok::Var(chars[start..i].iter().collect()));
            }
            '<' => {
                // An IRI if a '>' appears before any whitespace; otherwise a
                // comparison operator.
                let mut j = i + 1;
                let mut is_iri = false;
                while j < chars.len() {
                    if chars[j] == '>' {
                        is_iri = true;
                        break;
                    }
                    if chars[j].is_whitespace() || chars[j] == '<' {
                        break;
                    }
                    j += 1;
                }
                if is_iri {
                    let value: String = chars[i + 1..j].iter().collect();
                    while i <= j {
                        step(&mut i, &mut line, &mut col);
                    }
                    push(Tok::Iri(value));
                } else {
                    step(&mut i, &mut line, &mut col);
                    if i < chars.len() && chars[i] == '=' {
                        step(&mut i, &mut line, &mut col);
                        push(Tok::Punct("<="));
                    } else {
                        push(Tok::Punct("<"));
                    }
                }
            }
            '"' => {
                step(&mut i, &mut line, &mut col);
                let mut value = String::new();
                let mut closed = false;
                while i < chars.len() {
                    let d = chars[i];
                    if d == '\\' && i + 1 < chars.len() {
                        let esc = chars[i + 1];
                        value.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            other => other,
                        });
                        step(&mut i, &mut line, &mut col);
                        step(&mut i, &mut line, &mut col);
                    } else if d == '"' {
                        closed = true;
                        step(&mut i, &mut line, &mut col);
                        break;
                    } else {
                        value.push(d);
                        step(&mut i, &mut line, &mut col);
                    }
                }
                if !closed {
                    err!("unterminated string literal");
                }
                push(Tok::Str(value));
            }
            '@' => {
                step(&mut i, &mut line, &mut col);
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '-') {
                    step(&mut i, &mut line, &mut col);
                }
                push(Tok::LangTag(chars[start..i].iter().collect()));
            }
            '^' => {
                if i + 1 < chars.len() && chars[i + 1] == '^' {
                    step(&mut i, &mut line, &mut col);
                    step(&mut i, &mut line, &mut col);
                    push(Tok::DtSep);
                } else {
                    err!("unexpected '^'");
                }
            }
            '_' if i + 1 < chars.len() && chars[i + 1] == ':' => {
                step(&mut i, &mut line, &mut col);
                step(&mut i, &mut line, &mut col);
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    step(&mut i, &mut line, &mut col);
                }
                push(Tok::BlankLabel(chars[start..i].iter().collect()));
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    step(&mut i, &mut line, &mut col);
                }
                push(Tok::Num(chars[start..i].iter().collect()));
            }
            '-' if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() => {
                let start = i;
                step(&mut i, &mut line, &mut col);
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    step(&mut i, &mut line, &mut col);
                }
                push(Tok::Num(chars[start..i].iter().collect()));
            }
            '{' | '}' | '(' | ')' | '.' | ';' | ',' | '*' => {
                step(&mut i, &mut line, &mut col);
                push(Tok::Punct(match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '.' => ".",
                    ';' => ";",
                    ',' => ",",
                    _ => "*",
                }));
            }
            '=' => {
                step(&mut i, &mut line, &mut col);
                push(Tok::Punct("="));
            }
            '!' => {
                step(&mut i, &mut line, &mut col);
                if i < chars.len() && chars[i] == '=' {
                    step(&mut i, &mut line, &mut col);
                    push(Tok::Punct("!="));
                } else {
                    push(Tok::Punct("!"));
                }
            }
            '>' => {
                step(&mut i, &mut line, &mut col);
                if i < chars.len() && chars[i] == '=' {
                    step(&mut i, &mut line, &mut col);
                    push(Tok::Punct(">="));
                } else {
                    push(Tok::Punct(">"));
                }
            }
            '&' => {
                if i + 1 < chars.len() && chars[i + 1] == '&' {
                    step(&mut i, &mut line, &mut col);
                    step(&mut i, &mut line, &mut col);
                    push(Tok::Punct("&&"));
                } else {
                    err!("unexpected '&'");
                }
            }
            '|' => {
                if i + 1 < chars.len() && chars[i + 1] == '|' {
                    step(&mut i, &mut line, &mut col);
                    step(&mut i, &mut line, &mut col);
                    push(Tok::Punct("||"));
                } else {
                    err!("unexpected '|'");
                }
            }
            _ if c.is_alphabetic() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '-'))
                {
                    step(&mut i, &mut line, &mut col);
                }
                let word: String = chars[start..i].iter().collect();
                // prefixed name?
                if i < chars.len() && chars[i] == ':' {
                    step(&mut i, &mut line, &mut col);
                    let lstart = i;
                    while i < chars.len()
                        && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '-' | '.'))
                    {
                        step(&mut i, &mut line, &mut col);
                    }
                    push(Tok::PName(word, chars[lstart..i].iter().collect()));
                } else {
                    push(Tok::Word(word));
                }
            }
            other => err!("unexpected character {other:?}"),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    prefixes: BTreeMap<String, Iri>,
}

impl Parser {
    fn error_at(&self, message: impl Into<String>) -> QueryParseError {
        let (line, col) = self
            .tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1));
        QueryParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.tokens.get(self.pos).map(|s| s.tok.clone());
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), QueryParseError> {
        match self.peek() {
            Some(Tok::Punct(q)) if *q == p => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.error_at(format!("expected {p:?}, found {other:?}"))),
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) && {
            self.pos += 1;
            true
        }
    }

    fn check_unsupported(&self) -> Result<(), QueryParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED.contains(&upper.as_str()) {
                return Err(self.error_at(format!("unsupported: {upper}")));
            }
        }
        Ok(())
    }

    fn parse_query(&mut self) -> Result<Query, QueryParseError> {
        while self.eat_keyword("PREFIX") {
            let (name, iri) = match (self.next(), ()) {
                (Some(Tok::PName(p, local)), ()) if local.is_empty() => {
                    match self.next() {
                        Some(Tok::Iri(iri)) => (p, iri),
                        other => {
                            return Err(self.error_at(format!(
                                "expected IRI after PREFIX, found {other:?}"
                            )))
                        }
                    }
                }
                (other, ()) => {
                    return Err(self.error_at(format!("expected prefix name, found {other:?}")))
                }
            };
            let iri = Iri::new(&iri).map_err(|e| self.error_at(e.to_string()))?;
            self.prefixes.insert(name, iri);
        }
        self.check_unsupported()?;
        if !self.eat_keyword("SELECT") {
            return Err(self.error_at("expected SELECT"));
        }
        let distinct = self.eat_keyword("DISTINCT");
        let projection = self.parse_projection()?;
        self.eat_keyword("WHERE");
        let pattern = self.parse_group(0)?;
        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            if !self.eat_keyword("BY") {
                return Err(self.error_at("expected BY after ORDER"));
            }
            loop {
                match self.peek().cloned() {
                    Some(Tok::Var(v)) => {
                        self.pos += 1;
                        order_by.push((v, SortDir::Asc));
                    }
                    Some(Tok::Word(w))
                        if w.eq_ignore_ascii_case("ASC") || w.eq_ignore_ascii_case("DESC") =>
                    {
                        self.pos += 1;
                        let dir = if w.eq_ignore_ascii_case("ASC") {
                            SortDir::Asc
                        } else {
                            SortDir::Desc
                        };
                        self.expect_punct("(")?;
                        let var = match self.next() {
                            Some(Tok::Var(v)) => v,
                            other => {
                                return Err(
                                    self.error_at(format!("expected variable, found {other:?}"))
                                )
                            }
                        };
                        self.expect_punct(")")?;
                        order_by.push((var, dir));
                    }
                    _ => break,
                }
            }
            if order_by.is_empty() {
                return Err(self.error_at("ORDER BY requires at least one sort key"));
            }
        }
        let mut limit = None;
        if self.eat_keyword("LIMIT") {
            match self.next() {
                Some(Tok::Num(n)) => {
                    let value: usize = n
                        .parse()
                        .map_err(|_| self.error_at(format!("invalid LIMIT {n:?}")))?;
                    if value == 0 {
                        return Err(self.error_at("LIMIT must be positive"));
                    }
                    limit = Some(value);
                }
                other => return Err(self.error_at(format!("expected number, found {other:?}"))),
            }
        }
        let query = Query {
            prefixes: std::mem::take(&mut self.prefixes),
            projection,
            pattern,
            distinct,
            order_by,
            limit,
        };
        self.validate(&query)?;
        Ok(query)
    }

    fn validate(&self, query: &Query) -> Result<(), QueryParseError> {
        let pattern_vars = query.pattern.all_vars();
        if let Projection::Vars(vars) = &query.projection {
            for v in vars {
                if !pattern_vars.contains(v) {
                    return Err(self.error_at(format!(
                        "projected variable ?{v} does not appear in the pattern"
                    )));
                }
            }
        }
        Ok(())
    }

    fn parse_projection(&mut self) -> Result<Projection, QueryParseError> {
        if self.eat_punct("*") {
            return Ok(Projection::Star);
        }
        let mut vars = Vec::new();
        while let Some(Tok::Var(v)) = self.peek().cloned() {
            self.pos += 1;
            vars.push(v);
        }
        if vars.is_empty() {
            return Err(self.error_at("expected '*' or at least one variable"));
        }
        Ok(Projection::Vars(vars))
    }

    fn parse_group(&mut self, depth: usize) -> Result<GroupPattern, QueryParseError> {
        self.expect_punct("{")?;
        let mut group = GroupPattern::default();
        loop {
            self.check_unsupported()?;
            match self.peek().cloned() {
                Some(Tok::Punct("}")) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("OPTIONAL") => {
                    self.pos += 1;
                    if depth >= 1 {
                        return Err(self.error_at("unsupported: nested OPTIONAL"));
                    }
                    group.optionals.push(self.parse_group(depth + 1)?);
                    self.eat_punct(".");
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("FILTER") => {
                    self.pos += 1;
                    let expr = if self.eat_punct("(") {
                        let e = self.parse_expr()?;
                        self.expect_punct(")")?;
                        e
                    } else {
                        match builtin_to_operand(self.parse_builtin()?)? {
                            OperandOrExpr::Expr(e) => e,
                            OperandOrExpr::Operand(_) => {
                                return Err(self
                                    .error_at("FILTER requires a boolean expression"))
                            }
                        }
                    };
                    group.filters.push(expr);
                    self.eat_punct(".");
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("SELECT") => {
                    return Err(self.error_at("unsupported: subquery"));
                }
                Some(Tok::Punct("{")) => {
                    // Look ahead past the balanced braces: `{ … } UNION { … }`
                    // deserves the specific error.
                    let mut depth = 0usize;
                    let mut j = self.pos;
                    while let Some(s) = self.tokens.get(j) {
                        match s.tok {
                            Tok::Punct("{") => depth += 1,
                            Tok::Punct("}") => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            _ => {}
                        }
                        j += 1;
                    }
                    if matches!(self.tokens.get(j + 1).map(|s| &s.tok), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("UNION"))
                    {
                        return Err(self.error_at("unsupported: UNION"));
                    }
                    return Err(self.error_at("unsupported: nested group"));
                }
                None => return Err(self.error_at("unterminated group: expected '}'")),
                _ => {
                    self.parse_triples_block(&mut group)?;
                    self.eat_punct(".");
                }
            }
        }
        if group.triple_patterns.is_empty() {
            return Err(self.error_at("group requires at least one triple pattern"));
        }
        Ok(group)
    }

    fn parse_triples_block(&mut self, group: &mut GroupPattern) -> Result<(), QueryParseError> {
        let subject = self.parse_pattern_term("subject")?;
        loop {
            let predicate = self.parse_verb()?;
            loop {
                let object = self.parse_pattern_term("object")?;
                group.triple_patterns.push(TriplePatternAst {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
            if !self.eat_punct(";") {
                break;
            }
            // A dangling ';' before '}' or '.' is tolerated.
            if matches!(self.peek(), Some(Tok::Punct("}")) | Some(Tok::Punct("."))) {
                break;
            }
        }
        Ok(())
    }

    fn parse_verb(&mut self) -> Result<PatternTerm, QueryParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if w == "a" {
                self.pos += 1;
                return Ok(PatternTerm::Term(
                    Term::iri(vocab::RDF_TYPE).expect("rdf:type is valid"),
                ));
            }
        }
        self.parse_pattern_term("predicate")
    }

    fn resolve_pname(&self, prefix: &str, local: &str) -> Result<Iri, QueryParseError> {
        let ns = self
            .prefixes
            .get(prefix)
            .ok_or_else(|| self.error_at(format!("undeclared prefix {prefix:?}")))?;
        Iri::new(format!("{}{}", ns.as_str(), local)).map_err(|e| self.error_at(e.to_string()))
    }

    fn parse_pattern_term(&mut self, what: &str) -> Result<PatternTerm, QueryParseError> {
        self.check_unsupported()?;
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(PatternTerm::Var(v))
            }
            _ => Ok(PatternTerm::Term(self.parse_term(what)?)),
        }
    }

    fn parse_term(&mut self, what: &str) -> Result<Term, QueryParseError> {
        match self.next() {
            Some(Tok::Iri(iri)) => Term::iri(&iri).map_err(|e| self.error_at(e.to_string())),
            Some(Tok::PName(p, l)) => Ok(Term::Iri(self.resolve_pname(&p, &l)?)),
            Some(Tok::BlankLabel(label)) => BlankNode::new(&label)
                .map(Term::Blank)
                .map_err(|e| self.error_at(e.to_string())),
            Some(Tok::Str(s)) => {
                if let Some(Tok::LangTag(tag)) = self.peek().cloned() {
                    self.pos += 1;
                    Ok(Term::Literal(Literal::lang(&s, &tag)))
                } else if matches!(self.peek(), Some(Tok::DtSep)) {
                    self.pos += 1;
                    let dt = match self.next() {
                        Some(Tok::Iri(iri)) => {
                            Iri::new(&iri).map_err(|e| self.error_at(e.to_string()))?
                        }
                        Some(Tok::PName(p, l)) => self.resolve_pname(&p, &l)?,
                        other => {
                            return Err(
                                self.error_at(format!("expected datatype IRI, found {other:?}"))
                            )
                        }
                    };
                    Ok(Term::Literal(Literal::typed(&s, dt)))
                } else {
                    Ok(Term::Literal(Literal::plain(&s)))
                }
            }
            Some(Tok::Num(n)) => Ok(Term::Literal(numeric_literal(&n))),
            other => Err(self.error_at(format!("expected {what}, found {other:?}"))),
        }
    }

    // expr := and_expr ('||' and_expr)*
    fn parse_expr(&mut self) -> Result<FilterExpr, QueryParseError> {
        let mut left = self.parse_and()?;
        while self.eat_punct("||") {
            let right = self.parse_and()?;
            left = FilterExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<FilterExpr, QueryParseError> {
        let mut left = self.parse_unary()?;
        while self.eat_punct("&&") {
            let right = self.parse_unary()?;
            left = FilterExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<FilterExpr, QueryParseError> {
        if self.eat_punct("!") {
            return Ok(FilterExpr::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat_punct("(") {
            let e = self.parse_expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        if matches!(self.peek(), Some(Tok::Word(w)) if ["bound", "regex", "str"].contains(&w.to_ascii_lowercase().as_str()))
        {
            let call = self.parse_builtin()?;
            return self.maybe_comparison(builtin_to_operand(call)?);
        }
        let left = self.parse_operand()?;
        self.maybe_comparison(OperandOrExpr::Operand(left))
    }

    fn maybe_comparison(
        &mut self,
        left: OperandOrExpr,
    ) -> Result<FilterExpr, QueryParseError> {
        let op = match self.peek() {
            Some(Tok::Punct(p)) => match *p {
                "=" => Some(CompareOp::Eq),
                "!=" => Some(CompareOp::Ne),
                "<" => Some(CompareOp::Lt),
                "<=" => Some(CompareOp::Le),
                ">" => Some(CompareOp::Gt),
                ">=" => Some(CompareOp::Ge),
                _ => None,
            },
            _ => None,
        };
        match (op, left) {
            (Some(op), OperandOrExpr::Operand(left)) => {
                self.pos += 1;
                let right = self.parse_operand_or_builtin()?;
                Ok(FilterExpr::Compare(op, left, right))
            }
            (None, OperandOrExpr::Operand(Operand::Var(_))) => Err(self.error_at(
                "a bare variable is not a boolean expression; use bound(?var) or a comparison",
            )),
            (None, OperandOrExpr::Operand(_)) => {
                Err(self.error_at("expected comparison operator"))
            }
            (None, OperandOrExpr::Expr(e)) => Ok(e),
            (Some(_), OperandOrExpr::Expr(_)) => {
                Err(self.error_at("boolean expression cannot be compared"))
            }
        }
    }

    fn parse_operand_or_builtin(&mut self) -> Result<Operand, QueryParseError> {
        if matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("str")) {
            let call = self.parse_builtin()?;
            match builtin_to_operand(call)? {
                OperandOrExpr::Operand(op) => Ok(op),
                OperandOrExpr::Expr(_) => Err(self.error_at("expected value expression")),
            }
        } else {
            self.parse_operand()
        }
    }

    fn parse_operand(&mut self) -> Result<Operand, QueryParseError> {
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Operand::Var(v))
            }
            _ => Ok(Operand::Const(self.parse_term("operand")?)),
        }
    }

    /// bound(?v) | regex(?v, "pat") | str(?v)
    fn parse_builtin(&mut self) -> Result<Builtin, QueryParseError> {
        let name = match self.next() {
            Some(Tok::Word(w)) => w.to_ascii_lowercase(),
            other => return Err(self.error_at(format!("expected builtin, found {other:?}"))),
        };
        self.expect_punct("(")?;
        let var = match self.next() {
            Some(Tok::Var(v)) => v,
            other => return Err(self.error_at(format!("expected variable, found {other:?}"))),
        };
        let builtin = match name.as_str() {
            "bound" => Builtin::Bound(var),
            "str" => Builtin::Str(var),
            "regex" => {
                self.expect_punct(",")?;
                let pattern = match self.next() {
                    Some(Tok::Str(s)) => s,
                    other => {
                        return Err(
                            self.error_at(format!("expected pattern string, found {other:?}"))
                        )
                    }
                };
                let compiled = Regex::new(&pattern)
                    .map_err(|e| self.error_at(format!("invalid regex: {e}")))?;
                Builtin::Regex(var, pattern, compiled)
            }
            other => return Err(self.error_at(format!("unsupported: {other}()"))),
        };
        self.expect_punct(")")?;
        Ok(builtin)
    }

    fn expect_eof(&mut self) -> Result<(), QueryParseError> {
        if self.pos < self.tokens.len() {
            self.check_unsupported()?;
            return Err(self.error_at(format!(
                "unexpected trailing token {:?}",
                self.tokens[self.pos].tok
            )));
        }
        Ok(())
    }
}

enum Builtin {
    Bound(String),
    Str(String),
    Regex(String, String, Regex),
}

enum OperandOrExpr {
    Operand(Operand),
    Expr(FilterExpr),
}

fn builtin_to_operand(b: Builtin) -> Result<OperandOrExpr, QueryParseError> {
    Ok(match b {
        Builtin::Bound(v) => OperandOrExpr::Expr(FilterExpr::Bound(v)),
        Builtin::Str(v) => OperandOrExpr::Operand(Operand::Str(v)),
        Builtin::Regex(v, pattern, compiled) => {
            OperandOrExpr::Expr(FilterExpr::Regex(v, pattern, compiled))
        }
    })
}

fn numeric_literal(n: &str) -> Literal {
    let dt = if n.contains('.') {
        vocab::XSD_DECIMAL
    } else {
        vocab::XSD_INTEGER
    };
    Literal::typed(n, Iri::new(dt).expect("xsd datatype IRIs are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_select() {
        let q = parse_query(
            "PREFIX ot: <http://example.org/transit#> SELECT ?s WHERE { ?s a ot:Line }",
        )
        .unwrap();
        assert_eq!(q.projection, Projection::Vars(vec!["s".into()]));
        assert_eq!(q.pattern.triple_patterns.len(), 1);
        let tp = &q.pattern.triple_patterns[0];
        assert_eq!(tp.predicate, PatternTerm::Term(Term::iri(vocab::RDF_TYPE).unwrap()));
        assert_eq!(
            tp.object,
            PatternTerm::Term(Term::iri("http://example.org/transit#Line").unwrap())
        );
    }

    #[test]
    fn union_is_unsupported() {
        let err = parse_query(
            "SELECT ?s WHERE { { ?s <http://e/p> ?o } UNION { ?s <http://e/q> ?o } }",
        )
        .unwrap_err();
        assert!(err.message.contains("unsupported"), "{err}");
    }

    #[test]
    fn order_and_limit() {
        let q = parse_query(
            "SELECT ?n WHERE { ?x <http://e/name> ?n } ORDER BY ?n LIMIT 2",
        )
        .unwrap();
        assert_eq!(q.order_by, vec![("n".to_string(), SortDir::Asc)]);
        assert_eq!(q.limit, Some(2));
    }

    #[test]
    fn desc_order() {
        let q = parse_query("SELECT ?n WHERE { ?x <http://e/p> ?n } ORDER BY DESC(?n)").unwrap();
        assert_eq!(q.order_by, vec![("n".to_string(), SortDir::Desc)]);
    }

    #[test]
    fn nested_optional_rejected() {
        let err = parse_query(
            "SELECT ?s WHERE { ?s <http://e/p> ?o OPTIONAL { ?s <http://e/q> ?q OPTIONAL { ?s <http://e/r> ?r } } }",
        )
        .unwrap_err();
        assert!(err.message.contains("nested OPTIONAL"), "{err}");
    }

    #[test]
    fn subquery_rejected() {
        let err =
            parse_query("SELECT ?s WHERE { SELECT ?s WHERE { ?s <http://e/p> ?o } }").unwrap_err();
        assert!(err.message.contains("subquery"), "{err}");
    }

    #[test]
    fn semicolon_and_comma_abbreviations() {
        let q = parse_query(
            "SELECT ?s WHERE { ?s <http://e/p> ?a , ?b ; <http://e/q> ?c . }",
        )
        .unwrap();
        assert_eq!(q.pattern.triple_patterns.len(), 3);
        assert_eq!(q.pattern.triple_patterns[0].subject, q.pattern.triple_patterns[2].subject);
    }

    #[test]
    fn filter_with_regex_and_logic() {
        let q = parse_query(
            "SELECT ?s WHERE { ?s <http://e/id> ?id FILTER(regex(?id, \"^R\") && ?id != \"R9\") }",
        )
        .unwrap();
        assert_eq!(q.pattern.filters.len(), 1);
    }

    #[test]
    fn projection_must_come_from_pattern() {
        let err = parse_query("SELECT ?nope WHERE { ?s <http://e/p> ?o }").unwrap_err();
        assert!(err.message.contains("nope"), "{err}");
    }

    #[test]
    fn empty_group_rejected() {
        let err = parse_query("SELECT ?s WHERE { }").unwrap_err();
        assert!(err.message.contains("at least one triple pattern"), "{err}");
    }

    #[test]
    fn typed_and_tagged_literals() {
        let q = parse_query(
            "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#> SELECT ?s WHERE { ?s <http://e/p> \"5\"^^xsd:integer ; <http://e/q> \"ciao\"@it ; <http://e/r> 7 }",
        )
        .unwrap();
        assert_eq!(q.pattern.triple_patterns.len(), 3);
    }
}
