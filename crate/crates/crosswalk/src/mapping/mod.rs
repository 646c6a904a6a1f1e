//! CML, the compact lifting-mapping language.
//!
//! A mapping document binds CSV logical sources to triple-generation rules:
//! a subject map plus predicate-object maps, with optional row filters, join
//! references to other maps, and value functions. Semantics mirror RML
//! triples maps; the concrete syntax is one statement per line:
//!
//! ```text
//! prefix ot: <http://example.org/transit#>
//! map Stop
//!   from csv stream "stops.txt"
//!   subject "http://example.org/transit/stop/{stop_id}" type ot:ScheduledStopPoint
//!   po ot:name ref stop_name
//!   po ot:atStop join Stop on stop_id = stop_id
//! ```
//!
//! Prefixed names are expanded at parse time. Object term kinds are inferred:
//! `ref` produces literals, `const` follows the token form, `template`
//! produces IRIs unless a `datatype`/`lang` option marks it a literal or the
//! template starts with `_:` (blank node). Subjects are IRI templates, or
//! blank-node templates when they start with `_:`.

mod parser;

pub use parser::{parse_mapping, MappingParseError};

use std::collections::BTreeMap;
use std::fmt;

use crate::rdf::{Iri, Term};

/// Builtin value functions available to `fn` clauses.
///
/// `gtfs_time` exposes its result as the pseudo-columns `_time` (normalized
/// hh:MM:SS) and `_dayOffset` (hours div 24); every function also binds its
/// primary result as `_fn`.
pub const BUILTIN_FUNCTIONS: &[&str] = &["gtfs_date", "gtfs_time", "trim", "concat"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingDoc {
    pub prefixes: BTreeMap<String, Iri>,
    pub maps: Vec<TriplesMapDef>,
}

impl MappingDoc {
    pub fn map_by_name(&self, name: &str) -> Option<&TriplesMapDef> {
        self.maps.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceFormat {
    Csv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowFilter {
    pub column: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalSourceDef {
    pub stream_name: String,
    pub format: SourceFormat,
    pub row_filter: Option<RowFilter>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermValue {
    Constant(Term),
    Reference(String),
    Template(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Iri,
    Literal,
    Blank,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionCall {
    pub name: String,
    pub args: Vec<FnArg>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FnArg {
    Column(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermMapDef {
    pub value: TermValue,
    pub term_kind: TermKind,
    pub datatype: Option<Iri>,
    pub language: Option<String>,
    pub function: Option<FunctionCall>,
}

impl TermMapDef {
    pub fn constant(term: Term) -> Self {
        let kind = match &term {
            Term::Iri(_) => TermKind::Iri,
            Term::Blank(_) => TermKind::Blank,
            Term::Literal(_) => TermKind::Literal,
        };
        TermMapDef {
            value: TermValue::Constant(term),
            term_kind: kind,
            datatype: None,
            language: None,
            function: None,
        }
    }

    pub fn iri_template(template: impl Into<String>) -> Self {
        TermMapDef {
            value: TermValue::Template(template.into()),
            term_kind: TermKind::Iri,
            datatype: None,
            language: None,
            function: None,
        }
    }

    pub fn reference(column: impl Into<String>) -> Self {
        TermMapDef {
            value: TermValue::Reference(column.into()),
            term_kind: TermKind::Literal,
            datatype: None,
            language: None,
            function: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinRef {
    pub parent_map: String,
    pub child_column: String,
    pub parent_column: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObjectSpec {
    Term(TermMapDef),
    Join(JoinRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriplesMapDef {
    pub name: String,
    pub source: LogicalSourceDef,
    pub subject: TermMapDef,
    /// `rdf:type` class IRIs asserted for every subject.
    pub classes: Vec<Iri>,
    pub predicate_objects: Vec<(Iri, ObjectSpec)>,
}

/// A validation finding: the offending map plus the reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub map: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map {}: {}", self.map, self.message)
    }
}

/// Static checks beyond the grammar: join targets, function names, subject
/// term kinds. An empty list means the document is executable.
pub fn validate_mapping(doc: &MappingDoc) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for map in &doc.maps {
        if map.subject.term_kind == TermKind::Literal {
            out.push(Diagnostic {
                map: map.name.clone(),
                message: "subject term map must be an IRI or blank node".into(),
            });
        }
        if let Some(call) = &map.subject.function {
            check_function(&map.name, call, &mut out);
        }
        for (predicate, object) in &map.predicate_objects {
            match object {
                ObjectSpec::Join(join) => {
                    if doc.map_by_name(&join.parent_map).is_none() {
                        out.push(Diagnostic {
                            map: map.name.clone(),
                            message: format!(
                                "join for <{}> references unknown map {:?}",
                                predicate.as_str(),
                                join.parent_map
                            ),
                        });
                    }
                }
                ObjectSpec::Term(tm) => {
                    if let Some(call) = &tm.function {
                        check_function(&map.name, call, &mut out);
                    }
                    if tm.term_kind != TermKind::Literal
                        && (tm.datatype.is_some() || tm.language.is_some())
                    {
                        out.push(Diagnostic {
                            map: map.name.clone(),
                            message: format!(
                                "datatype/lang on non-literal object for <{}>",
                                predicate.as_str()
                            ),
                        });
                    }
                }
            }
        }
    }
    out
}

fn check_function(map: &str, call: &FunctionCall, out: &mut Vec<Diagnostic>) {
    if !BUILTIN_FUNCTIONS.contains(&call.name.as_str()) {
        out.push(Diagnostic {
            map: map.to_string(),
            message: format!("unknown function {:?}", call.name),
        });
    }
}

// ---------------------------------------------------------------------------
// Pretty-printer. `parse(doc.to_string())` reproduces the document exactly;
// prefixed names are printed in expanded angle-bracket form.
// ---------------------------------------------------------------------------

impl fmt::Display for MappingDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (prefix, iri) in &self.prefixes {
            writeln!(f, "prefix {}: <{}>", prefix, iri.as_str())?;
        }
        for map in &self.maps {
            writeln!(f)?;
            writeln!(f, "map {}", map.name)?;
            write!(f, "  from csv stream {:?}", map.source.stream_name)?;
            if let Some(filter) = &map.source.row_filter {
                write!(f, " where {} = {:?}", filter.column, filter.value)?;
            }
            writeln!(f)?;
            write!(f, "  subject {}", subject_token(&map.subject))?;
            if !map.classes.is_empty() {
                write!(f, " type")?;
                for class in &map.classes {
                    write!(f, " <{}>", class.as_str())?;
                }
            }
            writeln!(f)?;
            for (predicate, object) in &map.predicate_objects {
                write!(f, "  po <{}>", predicate.as_str())?;
                match object {
                    ObjectSpec::Join(j) => {
                        write!(
                            f,
                            " join {} on {} = {}",
                            j.parent_map, j.child_column, j.parent_column
                        )?;
                    }
                    ObjectSpec::Term(tm) => {
                        match &tm.value {
                            TermValue::Reference(col) => write!(f, " ref {col}")?,
                            TermValue::Template(t) => write!(f, " template {t:?}")?,
                            TermValue::Constant(Term::Iri(i)) => {
                                write!(f, " const <{}>", i.as_str())?
                            }
                            TermValue::Constant(Term::Literal(l)) => {
                                write!(f, " const {:?}", l.lexical())?
                            }
                            TermValue::Constant(Term::Blank(b)) => {
                                write!(f, " const _:{}", b.label())?
                            }
                        }
                        if let Some(dt) = &tm.datatype {
                            write!(f, " datatype <{}>", dt.as_str())?;
                        }
                        if let Some(lang) = &tm.language {
                            write!(f, " lang {lang}")?;
                        }
                        if let Some(call) = &tm.function {
                            write!(f, " fn {}(", call.name)?;
                            for (i, arg) in call.args.iter().enumerate() {
                                if i > 0 {
                                    write!(f, ", ")?;
                                }
                                match arg {
                                    FnArg::Column(c) => write!(f, "{c}")?,
                                    FnArg::Const(v) => write!(f, "{v:?}")?,
                                }
                            }
                            write!(f, ")")?;
                        }
                    }
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

fn subject_token(subject: &TermMapDef) -> String {
    match (&subject.value, subject.term_kind) {
        (TermValue::Template(t), TermKind::Blank) => format!("{:?}", format!("_:{t}")),
        (TermValue::Template(t), _) => format!("{t:?}"),
        (TermValue::Constant(Term::Iri(i)), _) => format!("\"{}\"", i.as_str()),
        (TermValue::Reference(col), _) => format!("ref {col}"),
        (TermValue::Constant(other), _) => format!("{other:?}"),
    }
}
