//! RDF term and triple model plus the indexed in-memory graph.
//!
//! Terms are cheap to clone (`Arc<str>` payloads) because the graph keeps
//! three sorted permutations of every triple for pattern matching.

mod graph;
mod ntriples;
pub mod vocab;
mod writer;

pub use graph::{Graph, GraphRef, TriplePattern};
pub use ntriples::{parse_ntriples, write_ntriples, NtParseError};
pub use writer::{BatchedWriter, BatchedWriterConfig, WriterError, WriterReport};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("invalid IRI {0:?}: {1}")]
    InvalidIri(String, &'static str),
    #[error("invalid blank node label {0:?}: labels match [A-Za-z0-9_]+")]
    InvalidBlankLabel(String),
    #[error("literal cannot be used as a triple subject")]
    LiteralSubject,
}

/// An absolute IRI. Validation is syntactic: a scheme followed by `:` and
/// none of the characters that would break N-Triples serialization.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(value: impl AsRef<str>) -> Result<Self, TermError> {
        let v = value.as_ref();
        if v.is_empty() {
            return Err(TermError::InvalidIri(v.into(), "empty"));
        }
        let scheme_end = match v.find(':') {
            Some(i) if i > 0 => i,
            _ => return Err(TermError::InvalidIri(v.into(), "missing scheme")),
        };
        if !v[..scheme_end]
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        {
            return Err(TermError::InvalidIri(v.into(), "malformed scheme"));
        }
        if v.chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"'))
        {
            return Err(TermError::InvalidIri(v.into(), "forbidden character"));
        }
        Ok(Iri(Arc::from(v)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A blank node label, unique within one graph.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(Arc<str>);

impl BlankNode {
    pub fn new(label: impl AsRef<str>) -> Result<Self, TermError> {
        let l = label.as_ref();
        if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(TermError::InvalidBlankLabel(l.into()));
        }
        Ok(BlankNode(Arc::from(l)))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

/// An RDF literal: a lexical form with an optional datatype or language tag,
/// never both. Construct through [`Literal::plain`], [`Literal::typed`] or
/// [`Literal::lang`] so the exclusivity invariant holds by construction.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    lexical: Arc<str>,
    datatype: Option<Iri>,
    language: Option<Arc<str>>,
}

impl Literal {
    pub fn plain(lexical: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(lexical: impl AsRef<str>, datatype: Iri) -> Self {
        Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: Some(datatype),
            language: None,
        }
    }

    /// Language-tagged literal; the tag is lowercased on construction.
    pub fn lang(lexical: impl AsRef<str>, tag: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: None,
            language: Some(Arc::from(tag.as_ref().to_ascii_lowercase().as_str())),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    /// Numeric value when the datatype is one of the XSD numeric types.
    pub fn numeric_value(&self) -> Option<f64> {
        let dt = self.datatype.as_ref()?;
        if vocab::is_numeric_datatype(dt.as_str()) {
            self.lexical.trim().parse::<f64>().ok()
        } else {
            None
        }
    }
}

/// Any RDF term. Variant order matters: the derived `Ord` (blank < IRI <
/// literal) is the canonical storage order used by the graph indices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Blank(BlankNode),
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl AsRef<str>) -> Result<Self, TermError> {
        Ok(Term::Iri(Iri::new(value)?))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    /// The "useful" string of a term: IRI value, blank label, literal lexical
    /// form. This is what interpolation and TSV output print.
    pub fn text(&self) -> &str {
        match self {
            Term::Blank(b) => b.label(),
            Term::Iri(i) => i.as_str(),
            Term::Literal(l) => l.lexical(),
        }
    }

    /// N-Triples serialization of the term.
    pub fn serialized(&self) -> String {
        match self {
            Term::Blank(b) => format!("_:{}", b.label()),
            Term::Iri(i) => format!("<{}>", i.as_str()),
            Term::Literal(l) => {
                let mut out = String::with_capacity(l.lexical().len() + 2);
                out.push('"');
                ntriples::escape_into(l.lexical(), &mut out);
                out.push('"');
                if let Some(dt) = l.datatype() {
                    out.push_str("^^<");
                    out.push_str(dt.as_str());
                    out.push('>');
                } else if let Some(tag) = l.language() {
                    out.push('@');
                    out.push_str(tag);
                }
                out
            }
        }
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl From<BlankNode> for Term {
    fn from(b: BlankNode) -> Self {
        Term::Blank(b)
    }
}

/// A single RDF statement. The subject is an IRI or blank node and the
/// predicate is always an IRI; [`Triple::new`] enforces the subject rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn serialized(&self) -> String {
        format!(
            "{} <{}> {} .",
            self.subject.serialized(),
            self.predicate.as_str(),
            self.object.serialized()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_requires_scheme() {
        assert!(Iri::new("http://example.org/a").is_ok());
        assert!(Iri::new("urn:x").is_ok());
        assert!(Iri::new("no-scheme").is_err());
        assert!(Iri::new(":leading").is_err());
        assert!(Iri::new("").is_err());
    }

    #[test]
    fn iri_rejects_forbidden_characters() {
        assert!(Iri::new("http://e/a b").is_err());
        assert!(Iri::new("http://e/<a>").is_err());
        assert!(Iri::new("http://e/\"a\"").is_err());
        assert!(Iri::new("http://e/a\nb").is_err());
    }

    #[test]
    fn blank_label_charset() {
        assert!(BlankNode::new("b0_X").is_ok());
        assert!(BlankNode::new("").is_err());
        assert!(BlankNode::new("a-b").is_err());
    }

    #[test]
    fn literal_language_excludes_datatype() {
        let l = Literal::lang("hello", "EN");
        assert_eq!(l.language(), Some("en"));
        assert!(l.datatype().is_none());
    }

    #[test]
    fn triple_rejects_literal_subject() {
        let p = Iri::new("http://e/p").unwrap();
        let err = Triple::new(Literal::plain("x").into(), p, Literal::plain("y").into());
        assert_eq!(err.unwrap_err(), TermError::LiteralSubject);
    }

    #[test]
    fn numeric_literals() {
        let int = Iri::new("http://www.w3.org/2001/XMLSchema#integer").unwrap();
        assert_eq!(Literal::typed("42", int).numeric_value(), Some(42.0));
        assert_eq!(Literal::plain("42").numeric_value(), None);
    }
}
