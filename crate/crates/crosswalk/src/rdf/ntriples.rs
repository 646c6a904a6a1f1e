//! Line-based N-Triples reading and writing.
//!
//! One triple per non-blank, non-comment line. The writer emits lines sorted
//! lexicographically so a dump of a given graph is byte-deterministic.

use thiserror::Error;

use super::{BlankNode, Graph, Iri, Literal, Term, Triple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct NtParseError {
    pub line: usize,
    pub reason: String,
}

impl NtParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        NtParseError {
            line,
            reason: reason.into(),
        }
    }
}

/// Parse UTF-8 N-Triples text into triples.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, NtParseError> {
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        triples.push(parse_line(line, line_no)?);
    }
    Ok(triples)
}

fn parse_line(line: &str, line_no: usize) -> Result<Triple, NtParseError> {
    let mut cursor = Cursor {
        rest: line,
        line: line_no,
    };
    let subject = match cursor.parse_term()? {
        t @ (Term::Iri(_) | Term::Blank(_)) => t,
        Term::Literal(_) => return Err(cursor.err("literal not allowed as subject")),
    };
    cursor.skip_ws();
    let predicate = match cursor.parse_term()? {
        Term::Iri(i) => i,
        _ => return Err(cursor.err("predicate must be an IRI")),
    };
    cursor.skip_ws();
    let object = cursor.parse_term()?;
    cursor.skip_ws();
    if !cursor.rest.starts_with('.') {
        return Err(cursor.err("missing terminating '.'"));
    }
    cursor.rest = &cursor.rest[1..];
    cursor.skip_ws();
    if !cursor.rest.is_empty() && !cursor.rest.starts_with('#') {
        return Err(cursor.err("trailing content after '.'"));
    }
    Triple::new(subject, predicate, object).map_err(|e| NtParseError::new(line_no, e.to_string()))
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> NtParseError {
        NtParseError::new(self.line, reason)
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn parse_term(&mut self) -> Result<Term, NtParseError> {
        self.skip_ws();
        if let Some(rest) = self.rest.strip_prefix('<') {
            let end = rest
                .find('>')
                .ok_or_else(|| self.err("unclosed '<'"))?;
            let raw = &rest[..end];
            self.rest = &rest[end + 1..];
            let value = unescape(raw, self.line)?;
            let iri = Iri::new(&value).map_err(|e| self.err(e.to_string()))?;
            Ok(Term::Iri(iri))
        } else if let Some(rest) = self.rest.strip_prefix("_:") {
            let end = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let label = &rest[..end];
            self.rest = &rest[end..];
            let node = BlankNode::new(label).map_err(|e| self.err(e.to_string()))?;
            Ok(Term::Blank(node))
        } else if self.rest.starts_with('"') {
            self.parse_literal()
        } else {
            Err(self.err(format!(
                "expected term, found {:?}",
                self.rest.chars().take(12).collect::<String>()
            )))
        }
    }

    fn parse_literal(&mut self) -> Result<Term, NtParseError> {
        let body = &self.rest[1..];
        // Find the closing quote, honoring backslash escapes.
        let mut end = None;
        let mut escaped = false;
        for (i, c) in body.char_indices() {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                end = Some(i);
                break;
            }
        }
        let end = end.ok_or_else(|| self.err("unclosed '\"'"))?;
        let lexical = unescape(&body[..end], self.line)?;
        self.rest = &body[end + 1..];

        if let Some(rest) = self.rest.strip_prefix("^^") {
            self.rest = rest;
            match self.parse_term()? {
                Term::Iri(dt) => Ok(Term::Literal(Literal::typed(&lexical, dt))),
                _ => Err(self.err("datatype must be an IRI")),
            }
        } else if let Some(rest) = self.rest.strip_prefix('@') {
            let end = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(rest.len());
            if end == 0 {
                return Err(self.err("empty language tag"));
            }
            let tag = &rest[..end];
            self.rest = &rest[end..];
            Ok(Term::Literal(Literal::lang(&lexical, tag)))
        } else {
            Ok(Term::Literal(Literal::plain(&lexical)))
        }
    }
}

fn unescape(raw: &str, line: usize) -> Result<String, NtParseError> {
    if !raw.contains('\\') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('b') => out.push('\u{8}'),
            Some('f') => out.push('\u{c}'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('\\') => out.push('\\'),
            Some('u') => out.push(read_codepoint(&mut chars, 4, line)?),
            Some('U') => out.push(read_codepoint(&mut chars, 8, line)?),
            other => {
                return Err(NtParseError::new(
                    line,
                    format!("invalid escape \\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

fn read_codepoint(
    chars: &mut std::str::Chars<'_>,
    len: usize,
    line: usize,
) -> Result<char, NtParseError> {
    let hex: String = chars.take(len).collect();
    if hex.len() != len {
        return Err(NtParseError::new(line, "truncated \\u escape"));
    }
    let code = u32::from_str_radix(&hex, 16)
        .map_err(|_| NtParseError::new(line, format!("invalid \\u escape {hex:?}")))?;
    char::from_u32(code).ok_or_else(|| NtParseError::new(line, "escape is not a scalar value"))
}

pub(super) fn escape_into(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
}

/// Serialize the graph, one sorted line per triple, LF endings.
pub fn write_ntriples(graph: &Graph) -> String {
    let mut lines: Vec<String> = graph.iter().map(|t| t.serialized()).collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
