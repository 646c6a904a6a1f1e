use std::collections::BTreeMap;

use thiserror::Error;

use super::{
    FnArg, FunctionCall, JoinRef, LogicalSourceDef, MappingDoc, ObjectSpec, RowFilter,
    SourceFormat, TermKind, TermMapDef, TermValue, TriplesMapDef,
};
use crate::rdf::{Iri, Literal, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct MappingParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Parse a CML document; prefixed names come back expanded to absolute IRIs.
pub fn parse_mapping(text: &str) -> Result<MappingDoc, MappingParseError> {
    let mut doc = MappingDoc {
        prefixes: BTreeMap::new(),
        maps: Vec::new(),
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut toks = TokenStream {
            tokens: &tokens,
            pos: 0,
            line: line_no,
        };
        let head = toks.next_word("statement keyword")?;
        match head.as_str() {
            "prefix" => parse_prefix(&mut toks, &mut doc)?,
            "map" => {
                let name = toks.next_word("map name")?;
                if doc.maps.iter().any(|m| m.name == name) {
                    return Err(toks.error(format!("duplicate map name {name:?}")));
                }
                doc.maps.push(TriplesMapDef {
                    name,
                    source: LogicalSourceDef {
                        stream_name: String::new(),
                        format: SourceFormat::Csv,
                        row_filter: None,
                    },
                    subject: TermMapDef::iri_template(""),
                    classes: Vec::new(),
                    predicate_objects: Vec::new(),
                });
            }
            "from" => {
                let map = current_map(&mut doc, &toks)?;
                parse_from(&mut toks, map)?;
            }
            "subject" => {
                let prefixes = doc.prefixes.clone();
                let map = current_map(&mut doc, &toks)?;
                parse_subject(&mut toks, map, &prefixes)?;
            }
            "po" => {
                let prefixes = doc.prefixes.clone();
                let map = current_map(&mut doc, &toks)?;
                parse_po(&mut toks, map, &prefixes)?;
            }
            other => {
                return Err(toks.error(format!("unknown keyword {other:?}")));
            }
        }
        toks.expect_end()?;
    }
    Ok(doc)
}

fn current_map<'d>(
    doc: &'d mut MappingDoc,
    toks: &TokenStream<'_>,
) -> Result<&'d mut TriplesMapDef, MappingParseError> {
    doc.maps
        .last_mut()
        .ok_or_else(|| toks.error("statement outside of a map block".to_string()))
}

fn parse_prefix(toks: &mut TokenStream<'_>, doc: &mut MappingDoc) -> Result<(), MappingParseError> {
    let name = toks.next_word("prefix name")?;
    let name = name
        .strip_suffix(':')
        .ok_or_else(|| toks.error("prefix name must end with ':'".to_string()))?
        .to_string();
    let iri_text = toks.next_angle("prefix IRI in angle brackets")?;
    let iri = Iri::new(&iri_text).map_err(|e| toks.error(e.to_string()))?;
    doc.prefixes.insert(name, iri);
    Ok(())
}

fn parse_from(
    toks: &mut TokenStream<'_>,
    map: &mut TriplesMapDef,
) -> Result<(), MappingParseError> {
    toks.expect_word("csv")?;
    toks.expect_word("stream")?;
    let stream = toks.next_string("stream name")?;
    if stream.is_empty() {
        return Err(toks.error("stream name must be non-empty".to_string()));
    }
    map.source = LogicalSourceDef {
        stream_name: stream,
        format: SourceFormat::Csv,
        row_filter: None,
    };
    if toks.peek_word("where") {
        toks.next_word("where")?;
        let column = toks.next_word("filter column")?;
        toks.expect_punct('=')?;
        let value = toks.next_string("filter value")?;
        map.source.row_filter = Some(RowFilter { column, value });
    }
    Ok(())
}

fn parse_subject(
    toks: &mut TokenStream<'_>,
    map: &mut TriplesMapDef,
    prefixes: &BTreeMap<String, Iri>,
) -> Result<(), MappingParseError> {
    let raw = toks.next_value_token("subject template")?;
    let template = expand_template(&raw, prefixes, toks)?;
    check_braces(&template, toks)?;
    map.subject = if let Some(rest) = template.strip_prefix("_:") {
        TermMapDef {
            value: TermValue::Template(rest.to_string()),
            term_kind: TermKind::Blank,
            datatype: None,
            language: None,
            function: None,
        }
    } else {
        TermMapDef::iri_template(template)
    };
    if toks.peek_word("type") {
        toks.next_word("type")?;
        while let Some(tok) = toks.peek() {
            let _ = tok;
            let iri = toks.next_iri(prefixes, "class IRI")?;
            map.classes.push(iri);
        }
        if map.classes.is_empty() {
            return Err(toks.error("'type' requires at least one class IRI".to_string()));
        }
    }
    Ok(())
}

fn parse_po(
    toks: &mut TokenStream<'_>,
    map: &mut TriplesMapDef,
    prefixes: &BTreeMap<String, Iri>,
) -> Result<(), MappingParseError> {
    let predicate = toks.next_iri(prefixes, "predicate IRI")?;
    let kind = toks.next_word("object kind (ref|const|template|join)")?;
    let object = match kind.as_str() {
        "join" => {
            let parent = toks.next_word("parent map name")?;
            toks.expect_word("on")?;
            let child_column = toks.next_word("child column")?;
            toks.expect_punct('=')?;
            let parent_column = toks.next_word("parent column")?;
            ObjectSpec::Join(JoinRef {
                parent_map: parent,
                child_column,
                parent_column,
            })
        }
        "ref" => {
            let column = toks.next_word("column name")?;
            ObjectSpec::Term(parse_term_options(toks, TermMapDef::reference(column), prefixes)?)
        }
        "const" => {
            let term = toks.next_const_term(prefixes)?;
            ObjectSpec::Term(parse_term_options(toks, TermMapDef::constant(term), prefixes)?)
        }
        "template" => {
            let raw = toks.next_value_token("template string")?;
            let template = expand_template(&raw, prefixes, toks)?;
            check_braces(&template, toks)?;
            let base = if let Some(rest) = template.strip_prefix("_:") {
                TermMapDef {
                    value: TermValue::Template(rest.to_string()),
                    term_kind: TermKind::Blank,
                    datatype: None,
                    language: None,
                    function: None,
                }
            } else {
                TermMapDef::iri_template(template)
            };
            let mut tm = parse_term_options(toks, base, prefixes)?;
            // A datatype or language tag marks a literal-producing template.
            if tm.term_kind == TermKind::Iri
                && (tm.datatype.is_some() || tm.language.is_some())
            {
                tm.term_kind = TermKind::Literal;
            }
            ObjectSpec::Term(tm)
        }
        other => {
            return Err(toks.error(format!(
                "unknown object kind {other:?} (expected ref, const, template or join)"
            )))
        }
    };
    map.predicate_objects.push((predicate, object));
    Ok(())
}

fn parse_term_options(
    toks: &mut TokenStream<'_>,
    mut tm: TermMapDef,
    prefixes: &BTreeMap<String, Iri>,
) -> Result<TermMapDef, MappingParseError> {
    loop {
        if toks.peek_word("datatype") {
            toks.next_word("datatype")?;
            tm.datatype = Some(toks.next_iri(prefixes, "datatype IRI")?);
            if matches!(tm.value, TermValue::Reference(_)) {
                tm.term_kind = TermKind::Literal;
            }
        } else if toks.peek_word("lang") {
            toks.next_word("lang")?;
            tm.language = Some(toks.next_word("language tag")?.to_ascii_lowercase());
        } else if toks.peek_word("fn") {
            toks.next_word("fn")?;
            let name = toks.next_word("function name")?;
            toks.expect_punct('(')?;
            let mut args = Vec::new();
            loop {
                match toks.peek() {
                    Some(Token::Punct(')', _)) => {
                        toks.advance();
                        break;
                    }
                    Some(Token::Punct(',', _)) => toks.advance(),
                    Some(Token::Str(s, _)) => {
                        args.push(FnArg::Const(s.clone()));
                        toks.advance();
                    }
                    Some(Token::Word(w, _)) => {
                        args.push(FnArg::Column(w.clone()));
                        toks.advance();
                    }
                    _ => return Err(toks.error("unterminated function argument list".into())),
                }
            }
            tm.function = Some(FunctionCall { name, args });
        } else {
            break;
        }
    }
    if tm.datatype.is_some() && tm.language.is_some() {
        return Err(toks.error("datatype and lang are mutually exclusive".into()));
    }
    Ok(tm)
}

/// Expand a leading `prefix:` in a template/subject token. Absolute IRIs
/// (scheme followed by `://` or no declared prefix match with a `{`-free
/// scheme part) pass through unchanged.
fn expand_template(
    raw: &str,
    prefixes: &BTreeMap<String, Iri>,
    toks: &TokenStream<'_>,
) -> Result<String, MappingParseError> {
    if raw.starts_with("_:") {
        return Ok(raw.to_string());
    }
    if let Some(colon) = raw.find(':') {
        let (head, rest) = raw.split_at(colon);
        if let Some(ns) = prefixes.get(head) {
            return Ok(format!("{}{}", ns.as_str(), &rest[1..]));
        }
        let _ = toks;
    }
    Ok(raw.to_string())
}

fn check_braces(template: &str, toks: &TokenStream<'_>) -> Result<(), MappingParseError> {
    let mut depth = 0i32;
    for c in template.chars() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    return Err(toks.error(format!("unbalanced braces in {template:?}")));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(toks.error(format!("unbalanced braces in {template:?}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Token {
    /// Bare word (keywords, names, prefixed names, templates).
    Word(String, usize),
    /// Double-quoted string with backslash escapes.
    Str(String, usize),
    /// `<...>` angle-bracketed IRI.
    Angle(String, usize),
    Punct(char, usize),
}

impl Token {
    fn col(&self) -> usize {
        match self {
            Token::Word(_, c) | Token::Str(_, c) | Token::Angle(_, c) | Token::Punct(_, c) => *c,
        }
    }
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, MappingParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break; // comment
        } else if c == '"' {
            let mut value = String::new();
            i += 1;
            let mut closed = false;
            while i < chars.len() {
                match chars[i] {
                    '\\' if i + 1 < chars.len() => {
                        let next = chars[i + 1];
                        value.push(match next {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        i += 2;
                    }
                    '"' => {
                        closed = true;
                        i += 1;
                        break;
                    }
                    other => {
                        value.push(other);
                        i += 1;
                    }
                }
            }
            if !closed {
                return Err(MappingParseError {
                    line: line_no,
                    col,
                    message: "unterminated string".into(),
                });
            }
            tokens.push(Token::Str(value, col));
        } else if c == '<' {
            let mut value = String::new();
            i += 1;
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '>' {
                    closed = true;
                    i += 1;
                    break;
                }
                value.push(chars[i]);
                i += 1;
            }
            if !closed {
                return Err(MappingParseError {
                    line: line_no,
                    col,
                    message: "unterminated '<'".into(),
                });
            }
            tokens.push(Token::Angle(value, col));
        } else if matches!(c, '(' | ')' | ',' | '=') {
            tokens.push(Token::Punct(c, col));
            i += 1;
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], '(' | ')' | ',' | '=' | '"' | '<' | '#')
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            tokens.push(Token::Word(word, col));
        }
    }
    Ok(tokens)
}

struct TokenStream<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> TokenStream<'a> {
    fn error(&self, message: String) -> MappingParseError {
        let col = self
            .tokens
            .get(self.pos.min(self.tokens.len().saturating_sub(1)))
            .map(Token::col)
            .unwrap_or(1);
        MappingParseError {
            line: self.line,
            col,
            message,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn peek_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w, _)) if w == word)
    }

    fn next_word(&mut self, what: &str) -> Result<String, MappingParseError> {
        match self.peek() {
            Some(Token::Word(w, _)) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), MappingParseError> {
        let got = self.next_word(&format!("keyword {word:?}"))?;
        if got == word {
            Ok(())
        } else {
            Err(self.error(format!("expected keyword {word:?}, found {got:?}")))
        }
    }

    fn expect_punct(&mut self, punct: char) -> Result<(), MappingParseError> {
        match self.peek() {
            Some(Token::Punct(p, _)) if *p == punct => {
                self.advance();
                Ok(())
            }
            _ => Err(self.error(format!("expected {punct:?}"))),
        }
    }

    fn next_string(&mut self, what: &str) -> Result<String, MappingParseError> {
        match self.peek() {
            Some(Token::Str(s, _)) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(format!("expected quoted {what}"))),
        }
    }

    fn next_angle(&mut self, what: &str) -> Result<String, MappingParseError> {
        match self.peek() {
            Some(Token::Angle(s, _)) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    /// A template-like value: quoted string, bare word or angle IRI.
    fn next_value_token(&mut self, what: &str) -> Result<String, MappingParseError> {
        match self.peek() {
            Some(Token::Str(s, _)) | Some(Token::Angle(s, _)) | Some(Token::Word(s, _)) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    /// An IRI position: `<absolute>` or `prefix:local` with a declared prefix.
    fn next_iri(
        &mut self,
        prefixes: &BTreeMap<String, Iri>,
        what: &str,
    ) -> Result<Iri, MappingParseError> {
        match self.peek().cloned() {
            Some(Token::Angle(s, _)) => {
                self.advance();
                Iri::new(&s).map_err(|e| self.error(e.to_string()))
            }
            Some(Token::Word(w, _)) => {
                self.advance();
                let colon = w
                    .find(':')
                    .ok_or_else(|| self.error(format!("expected {what}, found {w:?}")))?;
                let (prefix, local) = w.split_at(colon);
                let ns = prefixes.get(prefix).ok_or_else(|| {
                    self.error(format!("undeclared prefix {prefix:?}"))
                })?;
                Iri::new(format!("{}{}", ns.as_str(), &local[1..]))
                    .map_err(|e| self.error(e.to_string()))
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    /// A constant term: IRI, prefixed name or quoted literal.
    fn next_const_term(
        &mut self,
        prefixes: &BTreeMap<String, Iri>,
    ) -> Result<Term, MappingParseError> {
        match self.peek().cloned() {
            Some(Token::Str(s, _)) => {
                self.advance();
                Ok(Term::Literal(Literal::plain(&s)))
            }
            Some(Token::Word(w, _)) if w.starts_with("_:") => {
                self.advance();
                crate::rdf::BlankNode::new(&w[2..])
                    .map(Term::Blank)
                    .map_err(|e| self.error(e.to_string()))
            }
            _ => self.next_iri(prefixes, "constant term").map(Term::Iri),
        }
    }

    fn expect_end(&mut self) -> Result<(), MappingParseError> {
        if let Some(tok) = self.peek() {
            Err(self.error(format!("unexpected trailing token {tok:?}")))
        } else {
            Ok(())
        }
    }
}
