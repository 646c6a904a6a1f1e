use thiserror::Error;

use super::{Cond, InterpExpr, Node, SourceRef, Template, ValueExpr};
use crate::query::parse_query;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("template line {line}: {message}")]
pub struct TemplateParseError {
    pub line: usize,
    pub message: String,
}

/// Parse a GTL template. Embedded queries are parsed eagerly so a bad query
/// fails here, with the template line number attached.
pub fn parse_template(text: &str) -> Result<Template, TemplateParseError> {
    let mut scanner = Scanner {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
    };
    let mut declared: Vec<(String, DeclKind)> = Vec::new();
    let nodes = parse_nodes(&mut scanner, &mut declared, None)?;
    Ok(Template { nodes })
}

#[derive(Clone, Copy, PartialEq)]
enum DeclKind {
    Query,
    Index,
}

struct Scanner {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Scanner {
    fn err(&self, message: impl Into<String>) -> TemplateParseError {
        TemplateParseError {
            line: self.line,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        if c == '\n' {
            self.line += 1;
        }
        self.pos += 1;
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn skip_spaces(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TemplateParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}, found {:?}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, TemplateParseError> {
        self.skip_spaces();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        if self.pos == start {
            return Err(self.err(format!("expected a name, found {:?}", self.peek())));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// Quoted string; newlines allowed (multi-line queries).
    fn quoted(&mut self) -> Result<String, TemplateParseError> {
        self.skip_spaces();
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c) => out.push(c),
                    None => return Err(self.err("unterminated escape")),
                },
                Some('"') => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }
}

/// Parse until an `#end` (when inside a body) or end of input.
fn parse_nodes(
    s: &mut Scanner,
    declared: &mut Vec<(String, DeclKind)>,
    until: Option<&str>,
) -> Result<Vec<Node>, TemplateParseError> {
    let mut nodes = Vec::new();
    let mut text = String::new();
    macro_rules! flush_text {
        () => {
            if !text.is_empty() {
                nodes.push(Node::Text(std::mem::take(&mut text)));
            }
        };
    }
    loop {
        match s.peek() {
            None => {
                if let Some(open) = until {
                    return Err(s.err(format!("unclosed #{open}: missing #end")));
                }
                flush_text!();
                return Ok(nodes);
            }
            Some('#') => {
                if s.peek_at(1) == Some('#') {
                    s.bump();
                    s.bump();
                    text.push('#');
                    continue;
                }
                let is_directive =
                    matches!(s.peek_at(1), Some(c) if c.is_ascii_alphabetic());
                if !is_directive {
                    s.bump();
                    text.push('#');
                    continue;
                }
                let directive_line = s.line;
                s.bump(); // '#'
                let name = s.ident()?;
                match name.as_str() {
                    "query" => {
                        flush_text!();
                        s.skip_spaces();
                        s.expect('(')?;
                        let var = s.ident()?;
                        s.skip_spaces();
                        s.expect(',')?;
                        let query_text = s.quoted()?;
                        s.skip_spaces();
                        s.expect(')')?;
                        let query = parse_query(&query_text).map_err(|e| TemplateParseError {
                            line: directive_line,
                            message: format!("bad embedded query {var:?}: {e}"),
                        })?;
                        declared.push((var.clone(), DeclKind::Query));
                        nodes.push(Node::Query {
                            name: var,
                            query,
                            text: query_text,
                        });
                    }
                    "index" => {
                        flush_text!();
                        s.skip_spaces();
                        s.expect('(')?;
                        let var = s.ident()?;
                        s.skip_spaces();
                        s.expect(',')?;
                        let source = s.ident()?;
                        s.skip_spaces();
                        s.expect(',')?;
                        let key_var = s.ident()?;
                        s.skip_spaces();
                        s.expect(')')?;
                        if !declared.iter().any(|(n, k)| n == &source && *k == DeclKind::Query) {
                            return Err(TemplateParseError {
                                line: directive_line,
                                message: format!("undeclared source: {source}"),
                            });
                        }
                        declared.push((var.clone(), DeclKind::Index));
                        nodes.push(Node::Index {
                            name: var,
                            source,
                            key_var,
                        });
                    }
                    "foreach" => {
                        flush_text!();
                        s.skip_spaces();
                        s.expect('(')?;
                        let row_var = s.ident()?;
                        s.skip_spaces();
                        let kw = s.ident()?;
                        if kw != "in" {
                            return Err(s.err(format!("expected 'in', found {kw:?}")));
                        }
                        let source_name = s.ident()?;
                        let source = if s.eat('[') {
                            let key = parse_value_expr(s)?;
                            s.expect(']')?;
                            if !declared
                                .iter()
                                .any(|(n, k)| n == &source_name && *k == DeclKind::Index)
                            {
                                return Err(TemplateParseError {
                                    line: directive_line,
                                    message: format!("undeclared source: {source_name}"),
                                });
                            }
                            SourceRef::IndexLookup {
                                map: source_name,
                                key,
                            }
                        } else {
                            if !declared
                                .iter()
                                .any(|(n, k)| n == &source_name && *k == DeclKind::Query)
                            {
                                return Err(TemplateParseError {
                                    line: directive_line,
                                    message: format!("undeclared source: {source_name}"),
                                });
                            }
                            SourceRef::Var(source_name)
                        };
                        s.skip_spaces();
                        s.expect(')')?;
                        let body = parse_nodes(s, declared, Some("foreach"))?;
                        nodes.push(Node::Foreach {
                            row_var,
                            source,
                            body,
                        });
                    }
                    "if" => {
                        flush_text!();
                        s.skip_spaces();
                        s.expect('(')?;
                        let cond = parse_cond(s)?;
                        s.skip_spaces();
                        s.expect(')')?;
                        let body = parse_nodes(s, declared, Some("if"))?;
                        nodes.push(Node::If { cond, body });
                    }
                    "end" => {
                        if until.is_none() {
                            return Err(s.err("#end without an open #foreach or #if"));
                        }
                        flush_text!();
                        return Ok(nodes);
                    }
                    other => {
                        return Err(TemplateParseError {
                            line: directive_line,
                            message: format!("unknown directive #{other}"),
                        })
                    }
                }
            }
            Some('$') if s.peek_at(1) == Some('{') => {
                flush_text!();
                s.bump();
                s.bump();
                let raw = s.eat('!');
                let value = parse_value_expr(s)?;
                s.skip_spaces();
                s.expect('}')?;
                nodes.push(Node::Interp(InterpExpr { raw, value }));
            }
            Some(_) => {
                text.push(s.bump().expect("peeked"));
            }
        }
    }
}

/// name | name.field | name[key] | name[key].field | "literal"
fn parse_value_expr(s: &mut Scanner) -> Result<ValueExpr, TemplateParseError> {
    s.skip_spaces();
    if s.peek() == Some('"') {
        return Ok(ValueExpr::Literal(s.quoted()?));
    }
    let name = s.ident()?;
    if s.eat('[') {
        let key = parse_value_expr(s)?;
        s.expect(']')?;
        s.expect('.')?;
        let field = s.ident()?;
        Ok(ValueExpr::IndexField {
            map: name,
            key: Box::new(key),
            field,
        })
    } else if s.eat('.') {
        let field = s.ident()?;
        Ok(ValueExpr::Field(name, field))
    } else {
        Ok(ValueExpr::Name(name))
    }
}

/// bound(expr) | expr == expr
fn parse_cond(s: &mut Scanner) -> Result<Cond, TemplateParseError> {
    s.skip_spaces();
    // Peeking "bound(" requires a tentative parse: an identifier followed by
    // '(' is only ever the bound() test in this grammar.
    let save = (s.pos, s.line);
    if let Ok(word) = s.ident() {
        if word == "bound" && s.peek() == Some('(') {
            s.bump();
            let value = parse_value_expr(s)?;
            s.skip_spaces();
            s.expect(')')?;
            return Ok(Cond::Bound(value));
        }
    }
    s.pos = save.0;
    s.line = save.1;
    let left = parse_value_expr(s)?;
    s.skip_spaces();
    s.expect('=')?;
    s.expect('=')?;
    let right = parse_value_expr(s)?;
    Ok(Cond::Eq(left, right))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_text() {
        let t = parse_template("hello").unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!(matches!(&t.nodes[0], Node::Text(s) if s == "hello"));
    }

    #[test]
    fn foreach_requires_declared_source() {
        let err = parse_template("#foreach(r in rows) ${r.id} #end").unwrap_err();
        assert!(err.message.contains("undeclared source: rows"), "{err}");
    }

    #[test]
    fn query_then_foreach() {
        let t = parse_template(
            "#query(rows, \"SELECT ?id WHERE { ?s <http://e/id> ?id }\")#foreach(r in rows)${r.id}#end",
        )
        .unwrap();
        assert!(matches!(&t.nodes[0], Node::Query { name, .. } if name == "rows"));
        assert!(matches!(&t.nodes[1], Node::Foreach { .. }));
    }

    #[test]
    fn unclosed_foreach() {
        let err = parse_template(
            "#query(rows, \"SELECT ?id WHERE { ?s <http://e/id> ?id }\")#foreach(r in rows)${r.id}",
        )
        .unwrap_err();
        assert!(err.message.contains("unclosed #foreach"), "{err}");
    }

    #[test]
    fn unknown_directive() {
        let err = parse_template("#macro(x)").unwrap_err();
        assert!(err.message.contains("unknown directive #macro"), "{err}");
    }

    #[test]
    fn bad_embedded_query_reports_template_line() {
        let err = parse_template("line one\n#query(rows, \"SELECT WHERE\")").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("bad embedded query"), "{err}");
    }

    #[test]
    fn literal_hash_and_plain_hash() {
        let t = parse_template("a ## b # c").unwrap();
        assert!(matches!(&t.nodes[0], Node::Text(s) if s == "a # b # c"));
    }

    #[test]
    fn index_lookup_foreach() {
        let t = parse_template(
            "#query(pts, \"SELECT ?j ?o WHERE { ?p <http://e/j> ?j ; <http://e/o> ?o }\")\
             #index(byJ, pts, j)\
             #query(js, \"SELECT ?j WHERE { ?j <http://e/t> ?x }\")\
             #foreach(j in js)#foreach(p in byJ[j.j])${p.o}#end#end",
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 4);
    }

    #[test]
    fn raw_interp_and_eq_cond() {
        let t = parse_template("#if(x == \"1\")${!x}#end").unwrap();
        assert!(matches!(&t.nodes[0], Node::If { cond: Cond::Eq(_, _), .. }));
    }
}
