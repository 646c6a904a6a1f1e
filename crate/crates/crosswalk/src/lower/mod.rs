//! GTL, the lowering template language.
//!
//! A template is text interleaved with directives. Directives start with `#`
//! at any position; interpolation is `${expr}` with XML escaping by default
//! (`${!expr}` bypasses it); `##` renders a literal `#`.
//!
//! ```text
//! #query(rows, "PREFIX ot: <…> SELECT ?id ?name WHERE { … } ORDER BY ?id")
//! #index(byId, rows, id)
//! #foreach(r in rows)
//!   <Stop id="${r.id}">#if(bound(r.name))<Name>${r.name}</Name>#end</Stop>
//! #end
//! ```
//!
//! Each `#query` executes exactly once at its lexical position. `#index`
//! groups a query's solutions by one variable; `#foreach` iterates either a
//! query sequence or one index bucket (`m[key]`), and `${m[key].v}` reads
//! the first row of a bucket. Index keys compare by the plain string form
//! of the key variable's term.

mod parser;
mod render;

pub use parser::{parse_template, TemplateParseError};
pub use render::{minify_output, render_template, RenderError, RenderOutput};

use crate::query::Query;

#[derive(Clone, Debug)]
pub struct Template {
    pub nodes: Vec<Node>,
}

#[derive(Clone, Debug)]
pub enum Node {
    Text(String),
    Interp(InterpExpr),
    Query {
        name: String,
        query: Query,
        /// Original query text, kept for diagnostics.
        text: String,
    },
    Index {
        name: String,
        source: String,
        key_var: String,
    },
    Foreach {
        row_var: String,
        source: SourceRef,
        body: Vec<Node>,
    },
    If {
        cond: Cond,
        body: Vec<Node>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpExpr {
    /// `${!…}`: emit without XML escaping.
    pub raw: bool,
    pub value: ValueExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueExpr {
    /// Bare name: a render parameter.
    Name(String),
    /// `row.field`.
    Field(String, String),
    /// `map[key].field`: field of the first row under the key.
    IndexField {
        map: String,
        key: Box<ValueExpr>,
        field: String,
    },
    /// Quoted string literal (key positions and conditions).
    Literal(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceRef {
    /// A declared query (sequence) variable.
    Var(String),
    /// One bucket of a declared index: `m[key]`.
    IndexLookup { map: String, key: ValueExpr },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    /// `bound(row.field)`.
    Bound(ValueExpr),
    /// Equality of two value expressions.
    Eq(ValueExpr, ValueExpr),
}
