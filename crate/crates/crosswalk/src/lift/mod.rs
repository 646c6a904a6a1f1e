//! Executes mapping documents over named CSV streams, materializing triples
//! into the pipeline graph through the batched writer.

mod functions;

pub use functions::{apply_function, FnOutput};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::mapping::{
    validate_mapping, FnArg, MappingDoc, ObjectSpec, TermKind, TermMapDef, TermValue,
    TriplesMapDef,
};
use crate::rdf::{
    vocab, BatchedWriter, BatchedWriterConfig, BlankNode, GraphRef, Iri, Literal, Term, Triple,
};

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("mapping document is invalid: {0}")]
    InvalidMapping(String),
    #[error("missing input stream {0:?}")]
    MissingStream(String),
    #[error("stream {stream:?} is not valid CSV: {message}")]
    Csv { stream: String, message: String },
    #[error("join cycle involving map {0:?}")]
    JoinCycle(String),
    #[error(transparent)]
    Writer(#[from] crate::rdf::WriterError),
}

/// Named CSV byte streams (header row + records).
#[derive(Clone, Debug, Default)]
pub struct InputStreamSet {
    streams: BTreeMap<String, Arc<[u8]>>,
}

impl InputStreamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.streams.insert(name.into(), Arc::from(bytes.into()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.streams.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.streams.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.streams.contains_key(name)
    }
}

impl<S: Into<String>, B: Into<Vec<u8>>> FromIterator<(S, B)> for InputStreamSet {
    fn from_iter<T: IntoIterator<Item = (S, B)>>(iter: T) -> Self {
        let mut set = InputStreamSet::new();
        for (name, bytes) in iter {
            set.insert(name, bytes);
        }
        set
    }
}

/// One CSV record. Columns come from the stream header; an empty string is
/// kept distinct from an absent column, but both skip term expansion.
#[derive(Clone, Debug)]
pub struct Row {
    headers: Arc<Vec<String>>,
    values: Vec<String>,
}

impl Row {
    pub fn new(headers: Arc<Vec<String>>, values: Vec<String>) -> Self {
        Row { headers, values }
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        self.headers
            .iter()
            .position(|h| h == column)
            .and_then(|i| self.values.get(i))
            .map(String::as_str)
    }
}

/// A row plus the pseudo-columns produced by a function application.
pub struct RowView<'a> {
    row: &'a Row,
    extras: Vec<(&'static str, String)>,
}

impl<'a> RowView<'a> {
    pub fn new(row: &'a Row) -> Self {
        RowView {
            row,
            extras: Vec::new(),
        }
    }

    fn get(&self, column: &str) -> Option<&str> {
        self.extras
            .iter()
            .find(|(name, _)| *name == column)
            .map(|(_, v)| v.as_str())
            .or_else(|| self.row.get(column))
    }

    /// A present, non-empty value; empty strings count as absent.
    fn get_non_empty(&self, column: &str) -> Option<&str> {
        self.get(column).filter(|v| !v.is_empty())
    }
}

/// Function argument after column resolution.
pub enum ResolvedArg {
    Value(String),
    Missing(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftDiagnostic {
    pub map: String,
    pub stream: String,
    /// 1-based record number within the stream (header not counted).
    pub row: usize,
    pub message: String,
}

impl std::fmt::Display for LiftDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "map {} ({} row {}): {}",
            self.map, self.stream, self.row, self.message
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct LiftReport {
    /// Records consumed, each distinct stream counted once.
    pub rows_read: usize,
    /// Triples handed to the writer (before graph deduplication).
    pub triples_emitted: usize,
    pub diagnostics: Vec<LiftDiagnostic>,
}

/// How join references are evaluated. The hash strategy indexes the parent
/// side once; the nested-loop strategy re-scans the parent rows per child
/// row and exists as the expensive baseline for benchmarking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JoinStrategy {
    #[default]
    Hash,
    NestedLoop,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LiftOptions {
    pub join_strategy: JoinStrategy,
}

// ---------------------------------------------------------------------------
// Term expansion
// ---------------------------------------------------------------------------

/// Expand one term map against a row.
///
/// `Ok(None)` means a referenced column was absent or empty — the enclosing
/// triple is skipped silently. `Err` carries a row-level diagnostic message.
pub fn expand_term_map(tm: &TermMapDef, row: &Row) -> Result<Option<Term>, String> {
    let mut view = RowView::new(row);
    if let Some(call) = &tm.function {
        let args: Vec<ResolvedArg> = call
            .args
            .iter()
            .map(|arg| match arg {
                FnArg::Const(v) => ResolvedArg::Value(v.clone()),
                FnArg::Column(c) => match view.get_non_empty(c) {
                    Some(v) => ResolvedArg::Value(v.to_string()),
                    None => ResolvedArg::Missing(c.clone()),
                },
            })
            .collect();
        match apply_function(&call.name, &args, &view)? {
            None => return Ok(None),
            Some(output) => {
                view.extras.push(("_fn", output.primary.clone()));
                view.extras.extend(output.extras);
            }
        }
    }

    let lexical = match &tm.value {
        TermValue::Constant(term) => {
            return Ok(Some(apply_literal_options(term.clone(), tm)));
        }
        TermValue::Reference(column) => match view.get_non_empty(column) {
            Some(v) => v.to_string(),
            None => return Ok(None),
        },
        TermValue::Template(template) => {
            let encode = tm.term_kind == TermKind::Iri;
            match expand_template(template, &view, encode) {
                Some(v) => v,
                None => return Ok(None),
            }
        }
    };

    let term = match tm.term_kind {
        TermKind::Iri => Term::Iri(Iri::new(&lexical).map_err(|e| e.to_string())?),
        TermKind::Blank => {
            let label: String = lexical
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            Term::Blank(BlankNode::new(&label).map_err(|e| e.to_string())?)
        }
        TermKind::Literal => {
            if let Some(dt) = &tm.datatype {
                Term::Literal(Literal::typed(&lexical, dt.clone()))
            } else if let Some(tag) = &tm.language {
                Term::Literal(Literal::lang(&lexical, tag))
            } else {
                Term::Literal(Literal::plain(&lexical))
            }
        }
    };
    Ok(Some(term))
}

fn apply_literal_options(term: Term, tm: &TermMapDef) -> Term {
    match term {
        Term::Literal(l) if tm.datatype.is_some() => {
            Term::Literal(Literal::typed(l.lexical(), tm.datatype.clone().unwrap()))
        }
        Term::Literal(l) if tm.language.is_some() => {
            Term::Literal(Literal::lang(l.lexical(), tm.language.as_deref().unwrap()))
        }
        other => other,
    }
}

/// Substitute `{column}` placeholders. Returns `None` when any referenced
/// column is absent or empty. With `encode`, substituted values are
/// percent-encoded (RFC 3986 unreserved set kept).
fn expand_template(template: &str, view: &RowView<'_>, encode: bool) -> Option<String> {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}')?;
        let column = &after[..close];
        let value = view.get_non_empty(column)?;
        if encode {
            out.push_str(&percent_encode(value));
        } else {
            out.push_str(value);
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Some(out)
}

/// Percent-encode every byte outside the RFC 3986 unreserved set.
pub fn percent_encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for byte in value.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(byte as char)
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Map execution
// ---------------------------------------------------------------------------

/// Parent-side join lookup: (parent map, parent column) -> value -> subjects.
pub type JoinIndex = HashMap<(String, String), JoinSide>;

/// One indexed parent: subjects by key value plus the flat (key, subject)
/// list the nested-loop strategy scans.
#[derive(Clone, Debug, Default)]
pub struct JoinSide {
    by_key: HashMap<String, Vec<Term>>,
    pairs: Vec<(String, Term)>,
}

impl JoinSide {
    fn push(&mut self, key: String, subject: Term) {
        self.by_key
            .entry(key.clone())
            .or_default()
            .push(subject.clone());
        self.pairs.push((key, subject));
    }

    fn lookup(&self, key: &str, strategy: JoinStrategy) -> Vec<&Term> {
        match strategy {
            JoinStrategy::Hash => self
                .by_key
                .get(key)
                .map(|v| v.iter().collect())
                .unwrap_or_default(),
            JoinStrategy::NestedLoop => self
                .pairs
                .iter()
                .filter(|(k, _)| k == key)
                .map(|(_, s)| s)
                .collect(),
        }
    }
}

/// Run one triples map over its (already filtered) rows, emitting into the
/// sink. Returns the number of emitted triples.
pub fn execute_triples_map(
    map: &TriplesMapDef,
    rows: &[Row],
    join_index: Option<&JoinIndex>,
    options: LiftOptions,
    diagnostics: &mut Vec<LiftDiagnostic>,
    sink: &mut dyn FnMut(Triple),
) -> usize {
    let rdf_type = Iri::new(vocab::RDF_TYPE).expect("rdf:type is a valid IRI");
    let mut emitted = 0;
    for (row_no, row) in rows.iter().enumerate() {
        let mut diag = |message: String| {
            diagnostics.push(LiftDiagnostic {
                map: map.name.clone(),
                stream: map.source.stream_name.clone(),
                row: row_no + 1,
                message,
            });
        };
        let subject = match expand_term_map(&map.subject, row) {
            Ok(Some(term)) => term,
            Ok(None) => continue,
            Err(message) => {
                diag(message);
                continue;
            }
        };
        for class in &map.classes {
            sink(
                Triple::new(subject.clone(), rdf_type.clone(), Term::Iri(class.clone()))
                    .expect("subject kind checked by validation"),
            );
            emitted += 1;
        }
        for (predicate, object) in &map.predicate_objects {
            match object {
                ObjectSpec::Term(tm) => match expand_term_map(tm, row) {
                    Ok(Some(obj)) => {
                        sink(Triple::new(subject.clone(), predicate.clone(), obj)
                            .expect("subject kind checked by validation"));
                        emitted += 1;
                    }
                    Ok(None) => {}
                    Err(message) => diag(message),
                },
                ObjectSpec::Join(join) => {
                    let side = join_index.and_then(|idx| {
                        idx.get(&(join.parent_map.clone(), join.parent_column.clone()))
                    });
                    let Some(side) = side else { continue };
                    let Some(key) = row.get(&join.child_column).filter(|v| !v.is_empty())
                    else {
                        continue;
                    };
                    for parent_subject in side.lookup(key, options.join_strategy) {
                        sink(Triple::new(
                            subject.clone(),
                            predicate.clone(),
                            parent_subject.clone(),
                        )
                        .expect("subject kind checked by validation"));
                        emitted += 1;
                    }
                }
            }
        }
    }
    emitted
}

/// Execute a whole mapping document: maps with join dependencies run after
/// their parents, every triple flows through the batched writer, and the
/// final graph content is independent of the writer configuration.
pub fn execute_mapping_doc(
    doc: &MappingDoc,
    streams: &InputStreamSet,
    graph: GraphRef,
    writer_config: BatchedWriterConfig,
) -> Result<LiftReport, LiftError> {
    execute_mapping_doc_with(doc, streams, graph, writer_config, LiftOptions::default())
}

pub fn execute_mapping_doc_with(
    doc: &MappingDoc,
    streams: &InputStreamSet,
    graph: GraphRef,
    writer_config: BatchedWriterConfig,
    options: LiftOptions,
) -> Result<LiftReport, LiftError> {
    let issues = validate_mapping(doc);
    if !issues.is_empty() {
        let text = issues
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(LiftError::InvalidMapping(text));
    }

    // Parse each stream once.
    let mut cache: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for map in &doc.maps {
        let name = &map.source.stream_name;
        if cache.contains_key(name) {
            continue;
        }
        let bytes = streams
            .get(name)
            .ok_or_else(|| LiftError::MissingStream(name.clone()))?;
        cache.insert(name.clone(), parse_csv(name, bytes)?);
    }
    let rows_read = cache.values().map(Vec::len).sum();

    let order = topological_order(doc)?;
    let mut join_index: JoinIndex = HashMap::new();

    // Parent subject indices, built once per (parent, column) pair.
    for map in &doc.maps {
        for (_, object) in &map.predicate_objects {
            if let ObjectSpec::Join(join) = object {
                let key = (join.parent_map.clone(), join.parent_column.clone());
                if join_index.contains_key(&key) {
                    continue;
                }
                let Some(parent) = doc.map_by_name(&join.parent_map) else {
                    continue;
                };
                let parent_rows = filtered_rows(parent, &cache);
                let mut side = JoinSide::default();
                for row in parent_rows {
                    let Some(value) = row.get(&join.parent_column).filter(|v| !v.is_empty())
                    else {
                        continue;
                    };
                    if let Ok(Some(subject)) = expand_term_map(&parent.subject, row) {
                        side.push(value.to_string(), subject);
                    }
                }
                join_index.insert(key, side);
            }
        }
    }

    let writer = BatchedWriter::new(graph, writer_config)?;
    let mut diagnostics = Vec::new();
    let mut emitted = 0;
    for name in order {
        let map = doc.map_by_name(&name).expect("order comes from the doc");
        let rows: Vec<Row> = filtered_rows(map, &cache).into_iter().cloned().collect();
        emitted += execute_triples_map(
            map,
            &rows,
            Some(&join_index),
            options,
            &mut diagnostics,
            &mut |triple| {
                writer.enqueue(triple).expect("writer open during lift");
            },
        );
    }
    writer.finish();

    Ok(LiftReport {
        rows_read,
        triples_emitted: emitted,
        diagnostics,
    })
}

fn filtered_rows<'c>(
    map: &TriplesMapDef,
    cache: &'c BTreeMap<String, Vec<Row>>,
) -> Vec<&'c Row> {
    let rows = cache
        .get(&map.source.stream_name)
        .map(|v| v.as_slice())
        .unwrap_or(&[]);
    match &map.source.row_filter {
        None => rows.iter().collect(),
        Some(filter) => rows
            .iter()
            .filter(|row| row.get(&filter.column) == Some(filter.value.as_str()))
            .collect(),
    }
}

fn parse_csv(stream: &str, bytes: &[u8]) -> Result<Vec<Row>, LiftError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let headers: Arc<Vec<String>> = Arc::new(
        reader
            .headers()
            .map_err(|e| LiftError::Csv {
                stream: stream.to_string(),
                message: e.to_string(),
            })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect(),
    );
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| LiftError::Csv {
            stream: stream.to_string(),
            message: e.to_string(),
        })?;
        rows.push(Row::new(
            headers.clone(),
            record.iter().map(str::to_string).collect(),
        ));
    }
    Ok(rows)
}

/// Maps sorted so join parents come before their children.
fn topological_order(doc: &MappingDoc) -> Result<Vec<String>, LiftError> {
    let mut deps: HashMap<&str, Vec<&str>> = HashMap::new();
    for map in &doc.maps {
        let entry = deps.entry(map.name.as_str()).or_default();
        for (_, object) in &map.predicate_objects {
            if let ObjectSpec::Join(join) = object {
                entry.push(join.parent_map.as_str());
            }
        }
    }
    let mut order = Vec::new();
    let mut done: HashSet<&str> = HashSet::new();
    let mut in_progress: HashSet<&str> = HashSet::new();
    for map in &doc.maps {
        visit(map.name.as_str(), &deps, &mut done, &mut in_progress, &mut order)?;
    }
    Ok(order)
}

fn visit<'a>(
    name: &'a str,
    deps: &HashMap<&'a str, Vec<&'a str>>,
    done: &mut HashSet<&'a str>,
    in_progress: &mut HashSet<&'a str>,
    order: &mut Vec<String>,
) -> Result<(), LiftError> {
    if done.contains(name) {
        return Ok(());
    }
    if !in_progress.insert(name) {
        return Err(LiftError::JoinCycle(name.to_string()));
    }
    if let Some(parents) = deps.get(name) {
        for parent in parents {
            if deps.contains_key(parent) {
                visit(parent, deps, done, in_progress, order)?;
            }
        }
    }
    in_progress.remove(name);
    done.insert(name);
    order.push(name.to_string());
    Ok(())
}
