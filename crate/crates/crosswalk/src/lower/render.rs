use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use super::{Cond, InterpExpr, Node, SourceRef, Template, ValueExpr};
use crate::query::{evaluate_query, Solution};
use crate::rdf::Graph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("{0:?} is not iterable here")]
    NotIterable(String),
    #[error("{0:?} is not an index")]
    NotAnIndex(String),
    #[error("undeclared template variable {0:?}")]
    Undeclared(String),
}

#[derive(Clone, Debug, Default)]
pub struct RenderOutput {
    pub text: String,
    /// Non-fatal issues, e.g. interpolation of an unbound variable.
    pub diagnostics: Vec<String>,
}

enum ContextValue {
    Sequence(Rc<Vec<Solution>>),
    Row(Rc<Solution>),
    Index(Rc<BTreeMap<String, Vec<Solution>>>),
    Scalar(String),
}

struct Renderer<'g> {
    graph: &'g Graph,
    scopes: Vec<HashMap<String, ContextValue>>,
    out: String,
    diagnostics: Vec<String>,
}

/// Render a template against a graph. Rendering is a pure function of
/// (template, graph, params): byte-identical output for identical inputs.
pub fn render_template(
    template: &Template,
    graph: &Graph,
    params: &BTreeMap<String, String>,
) -> Result<RenderOutput, RenderError> {
    let mut root = HashMap::new();
    for (name, value) in params {
        root.insert(name.clone(), ContextValue::Scalar(value.clone()));
    }
    let mut renderer = Renderer {
        graph,
        scopes: vec![root],
        out: String::new(),
        diagnostics: Vec::new(),
    };
    renderer.render_nodes(&template.nodes)?;
    Ok(RenderOutput {
        text: renderer.out,
        diagnostics: renderer.diagnostics,
    })
}

impl<'g> Renderer<'g> {
    fn lookup(&self, name: &str) -> Option<&ContextValue> {
        self.scopes.iter().rev().find_map(|scope| scope.get(name))
    }

    fn declare(&mut self, name: &str, value: ContextValue) {
        self.scopes
            .last_mut()
            .expect("at least the root scope")
            .insert(name.to_string(), value);
    }

    fn render_nodes(&mut self, nodes: &[Node]) -> Result<(), RenderError> {
        for node in nodes {
            match node {
                Node::Text(text) => self.out.push_str(text),
                Node::Interp(interp) => self.render_interp(interp),
                Node::Query { name, query, .. } => {
                    let solutions = evaluate_query(query, self.graph);
                    self.declare(name, ContextValue::Sequence(Rc::new(solutions)));
                }
                Node::Index {
                    name,
                    source,
                    key_var,
                } => {
                    let rows = match self.lookup(source) {
                        Some(ContextValue::Sequence(rows)) => rows.clone(),
                        Some(_) => return Err(RenderError::NotIterable(source.clone())),
                        None => return Err(RenderError::Undeclared(source.clone())),
                    };
                    let mut index: BTreeMap<String, Vec<Solution>> = BTreeMap::new();
                    for row in rows.iter() {
                        if let Some(term) = row.get(key_var) {
                            index
                                .entry(term.text().to_string())
                                .or_default()
                                .push(row.clone());
                        }
                    }
                    self.declare(name, ContextValue::Index(Rc::new(index)));
                }
                Node::Foreach {
                    row_var,
                    source,
                    body,
                } => {
                    let rows: Rc<Vec<Solution>> = match source {
                        SourceRef::Var(name) => match self.lookup(name) {
                            Some(ContextValue::Sequence(rows)) => rows.clone(),
                            Some(_) => return Err(RenderError::NotIterable(name.clone())),
                            None => return Err(RenderError::Undeclared(name.clone())),
                        },
                        SourceRef::IndexLookup { map, key } => {
                            let key_text = self.eval_value(key).unwrap_or_default();
                            match self.lookup(map) {
                                Some(ContextValue::Index(index)) => Rc::new(
                                    index.get(&key_text).cloned().unwrap_or_default(),
                                ),
                                Some(_) => return Err(RenderError::NotAnIndex(map.clone())),
                                None => return Err(RenderError::Undeclared(map.clone())),
                            }
                        }
                    };
                    for row in rows.iter() {
                        self.scopes.push(HashMap::new());
                        self.declare(row_var, ContextValue::Row(Rc::new(row.clone())));
                        let result = self.render_nodes(body);
                        self.scopes.pop();
                        result?;
                    }
                }
                Node::If { cond, body } => {
                    if self.eval_cond(cond) {
                        self.scopes.push(HashMap::new());
                        let result = self.render_nodes(body);
                        self.scopes.pop();
                        result?;
                    }
                }
            }
        }
        Ok(())
    }

    fn render_interp(&mut self, interp: &InterpExpr) {
        match self.eval_value(&interp.value) {
            Some(value) => {
                if interp.raw {
                    self.out.push_str(&value);
                } else {
                    escape_xml_into(&value, &mut self.out);
                }
            }
            None => {
                self.diagnostics
                    .push(format!("unbound interpolation {}", describe(&interp.value)));
            }
        }
    }

    /// The string value of an expression; `None` when anything on the path
    /// is unbound.
    fn eval_value(&self, value: &ValueExpr) -> Option<String> {
        match value {
            ValueExpr::Literal(s) => Some(s.clone()),
            ValueExpr::Name(name) => match self.lookup(name)? {
                ContextValue::Scalar(s) => Some(s.clone()),
                _ => None,
            },
            ValueExpr::Field(var, field) => match self.lookup(var)? {
                ContextValue::Row(row) => row.get(field).map(|t| t.text().to_string()),
                _ => None,
            },
            ValueExpr::IndexField { map, key, field } => {
                let key_text = self.eval_value(key)?;
                match self.lookup(map)? {
                    ContextValue::Index(index) => index
                        .get(&key_text)?
                        .first()?
                        .get(field)
                        .map(|t| t.text().to_string()),
                    _ => None,
                }
            }
        }
    }

    fn eval_cond(&self, cond: &Cond) -> bool {
        match cond {
            Cond::Bound(value) => self.eval_value(value).is_some(),
            Cond::Eq(a, b) => match (self.eval_value(a), self.eval_value(b)) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

fn describe(value: &ValueExpr) -> String {
    match value {
        ValueExpr::Name(n) => n.clone(),
        ValueExpr::Field(v, f) => format!("{v}.{f}"),
        ValueExpr::IndexField { map, field, .. } => format!("{map}[…].{field}"),
        ValueExpr::Literal(s) => format!("{s:?}"),
    }
}

fn escape_xml_into(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}

/// Remove whitespace-only gaps between tags: every whitespace run that sits
/// directly between a `>` and a `<` is dropped. Whitespace inside attribute
/// values and inside text nodes survives. Idempotent.
pub fn minify_output(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_tag = false;
    let mut quote: Option<char> = None;
    let mut pending_ws = String::new();
    let mut last_emitted: Option<char> = None;

    while let Some(c) = chars.next() {
        if in_tag {
            out.push(c);
            last_emitted = Some(c);
            match quote {
                Some(q) if c == q => quote = None,
                Some(_) => {}
                None => match c {
                    '"' | '\'' => quote = Some(c),
                    '>' => in_tag = false,
                    _ => {}
                },
            }
            continue;
        }
        if c.is_whitespace() {
            pending_ws.push(c);
            continue;
        }
        if !pending_ws.is_empty() {
            let between_tags =
                matches!(last_emitted, None | Some('>')) && c == '<';
            if !between_tags {
                out.push_str(&pending_ws);
            }
            pending_ws.clear();
        }
        out.push(c);
        last_emitted = Some(c);
        if c == '<' {
            in_tag = true;
        }
    }
    // Trailing whitespace after the last tag is dropped when it follows '>'.
    if !pending_ws.is_empty() && !matches!(last_emitted, None | Some('>')) {
        out.push_str(&pending_ws);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_template;
    use super::*;
    use crate::rdf::parse_ntriples;

    fn graph(nt: &str) -> Graph {
        let mut g = Graph::new();
        g.insert_all(parse_ntriples(nt).unwrap());
        g
    }

    fn render(template: &str, g: &Graph, params: &[(&str, &str)]) -> RenderOutput {
        let t = parse_template(template).unwrap();
        let params: BTreeMap<String, String> = params
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        render_template(&t, g, &params).unwrap()
    }

    #[test]
    fn param_interpolation() {
        let g = Graph::new();
        let out = render("A${x}B", &g, &[("x", "1")]);
        assert_eq!(out.text, "A1B");
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn foreach_in_query_order() {
        let g = graph(
            "<http://e/s2> <http://e/id> \"b\" .\n<http://e/s1> <http://e/id> \"a\" .\n",
        );
        let out = render(
            "#query(rows, \"SELECT ?id WHERE { ?s <http://e/id> ?id } ORDER BY ?id\")#foreach(r in rows)<S id=\"${r.id}\"/>#end",
            &g,
            &[],
        );
        assert_eq!(out.text, "<S id=\"a\"/><S id=\"b\"/>");
    }

    #[test]
    fn escaping_is_on_by_default() {
        let g = graph("<http://e/s> <http://e/name> \"<T&C>\" .\n");
        let out = render(
            "#query(rows, \"SELECT ?name WHERE { ?s <http://e/name> ?name }\")#foreach(r in rows)${r.name}#end",
            &g,
            &[],
        );
        assert_eq!(out.text, "&lt;T&amp;C&gt;");
    }

    #[test]
    fn raw_interpolation_bypasses_escaping() {
        let g = Graph::new();
        let out = render("${!x}", &g, &[("x", "<frag/>")]);
        assert_eq!(out.text, "<frag/>");
    }

    #[test]
    fn unbound_interpolation_is_empty_plus_diagnostic() {
        let g = Graph::new();
        let out = render("A${missing}B", &g, &[]);
        assert_eq!(out.text, "AB");
        assert_eq!(out.diagnostics.len(), 1);
        assert!(out.diagnostics[0].contains("missing"));
    }

    #[test]
    fn bound_guard_suppresses_missing_field() {
        let g = graph(
            "<http://e/s1> <http://e/id> \"a\" .\n\
             <http://e/s1> <http://e/name> \"N\" .\n\
             <http://e/s2> <http://e/id> \"b\" .\n",
        );
        let out = render(
            "#query(rows, \"SELECT ?id ?name WHERE { ?s <http://e/id> ?id OPTIONAL { ?s <http://e/name> ?name } } ORDER BY ?id\")#foreach(r in rows)[#if(bound(r.name))${r.name}#end]#end",
            &g,
            &[],
        );
        assert_eq!(out.text, "[N][]");
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn index_lookup_matches_filtered_foreach() {
        let g = graph(
            "<http://e/p1> <http://e/j> \"j1\" .\n<http://e/p1> <http://e/o> \"1\" .\n\
             <http://e/p2> <http://e/j> \"j1\" .\n<http://e/p2> <http://e/o> \"2\" .\n\
             <http://e/p3> <http://e/j> \"j2\" .\n<http://e/p3> <http://e/o> \"3\" .\n",
        );
        let out = render(
            "#query(pts, \"SELECT ?j ?o WHERE { ?p <http://e/j> ?j ; <http://e/o> ?o } ORDER BY ?o\")\
             #index(byJ, pts, j)\
             #foreach(p in byJ[\"j1\"])${p.o}#end|${byJ[\"j2\"].o}",
            &g,
            &[],
        );
        assert_eq!(out.text, "12|3");
    }

    #[test]
    fn eq_condition() {
        let g = Graph::new();
        let out = render("#if(x == \"1\")yes#end#if(x == \"2\")no#end", &g, &[("x", "1")]);
        assert_eq!(out.text, "yes");
    }

    #[test]
    fn minify_drops_intertag_gaps_only() {
        assert_eq!(minify_output("<a>\n  <b/>\n</a>"), "<a><b/></a>");
        assert_eq!(minify_output("<a>x y</a>"), "<a>x y</a>");
        assert_eq!(minify_output("<a b=\" x \">t</a>"), "<a b=\" x \">t</a>");
        let once = minify_output("<a>\n  <b/>  frag  <c/> \n</a>");
        assert_eq!(minify_output(&once), once);
    }

    #[test]
    fn render_is_deterministic() {
        let g = graph(
            "<http://e/s2> <http://e/id> \"b\" .\n<http://e/s1> <http://e/id> \"a\" .\n",
        );
        let t = "#query(rows, \"SELECT ?id WHERE { ?s <http://e/id> ?id } ORDER BY ?id\")#foreach(r in rows)${r.id}#end";
        let a = render(t, &g, &[]);
        let b = render(t, &g, &[]);
        assert_eq!(a.text, b.text);
    }
}
