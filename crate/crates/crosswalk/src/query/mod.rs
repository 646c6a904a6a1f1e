//! SPARQL SELECT subset: basic graph patterns, one level of OPTIONAL,
//! FILTER, DISTINCT, ORDER BY, LIMIT.
//!
//! The subset is exactly what the bundled lowering templates need; anything
//! else (UNION, property paths, aggregation, subqueries) is rejected at
//! parse time with an explicit "unsupported" error.

mod eval;
mod parser;

pub use eval::{evaluate_bgp, evaluate_query};
pub use parser::{parse_query, QueryParseError};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use regex::Regex;

use crate::rdf::{Iri, Term};

#[derive(Clone, Debug)]
pub struct Query {
    pub prefixes: BTreeMap<String, Iri>,
    pub projection: Projection,
    pub pattern: GroupPattern,
    pub distinct: bool,
    pub order_by: Vec<(String, SortDir)>,
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projection {
    Star,
    Vars(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortDir {
    Asc,
    Desc,
}

#[derive(Clone, Debug, Default)]
pub struct GroupPattern {
    pub triple_patterns: Vec<TriplePatternAst>,
    /// OPTIONAL groups; nesting depth is limited to one by the parser.
    pub optionals: Vec<GroupPattern>,
    pub filters: Vec<FilterExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriplePatternAst {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatternTerm {
    Var(String),
    Term(Term),
}

impl PatternTerm {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug)]
pub enum Operand {
    Var(String),
    Const(Term),
    /// `str(?v)`: the plain string form of the variable's term.
    Str(String),
}

#[derive(Clone, Debug)]
pub enum FilterExpr {
    Compare(CompareOp, Operand, Operand),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Or(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
    Bound(String),
    Regex(String, String, Regex),
}

/// One result row: a partial map from variable names to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    bindings: BTreeMap<String, Term>,
}

impl Solution {
    pub fn new() -> Self {
        Solution::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn bind(&mut self, var: impl Into<String>, term: Term) {
        self.bindings.insert(var.into(), term);
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn project(&self, vars: &[String]) -> Solution {
        let mut out = Solution::new();
        for var in vars {
            if let Some(term) = self.bindings.get(var) {
                out.bindings.insert(var.clone(), term.clone());
            }
        }
        out
    }
}

impl FromIterator<(String, Term)> for Solution {
    fn from_iter<T: IntoIterator<Item = (String, Term)>>(iter: T) -> Self {
        Solution {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Total order over terms used by ORDER BY: blank < IRI < literal; literals
/// compare numerically when both carry numeric datatypes, lexically
/// otherwise, with the full serialization as the tie-break so the order
/// stays antisymmetric across distinct terms.
pub fn compare_terms(a: &Term, b: &Term) -> Ordering {
    fn rank(t: &Term) -> u8 {
        match t {
            Term::Blank(_) => 0,
            Term::Iri(_) => 1,
            Term::Literal(_) => 2,
        }
    }
    match (a, b) {
        (Term::Blank(x), Term::Blank(y)) => x.label().cmp(y.label()),
        (Term::Iri(x), Term::Iri(y)) => x.as_str().cmp(y.as_str()),
        (Term::Literal(x), Term::Literal(y)) => {
            let primary = match (x.numeric_value(), y.numeric_value()) {
                (Some(nx), Some(ny)) => nx.partial_cmp(&ny).unwrap_or(Ordering::Equal),
                _ => x.lexical().cmp(y.lexical()),
            };
            primary.then_with(|| a.serialized().cmp(&b.serialized()))
        }
        _ => rank(a).cmp(&rank(b)),
    }
}

impl GroupPattern {
    /// Variables mentioned anywhere in this group, optionals included, in
    /// first-appearance order.
    pub fn all_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        let mut push = |v: &str| {
            if !out.iter().any(|x| x == v) {
                out.push(v.to_string());
            }
        };
        for tp in &self.triple_patterns {
            for slot in [&tp.subject, &tp.predicate, &tp.object] {
                if let PatternTerm::Var(v) = slot {
                    push(v);
                }
            }
        }
        // Iterate optionals afterwards so required vars come first.
        let mut nested = Vec::new();
        for opt in &self.optionals {
            opt.collect_vars(&mut nested);
        }
        for v in nested {
            if !out.iter().any(|x| *x == v) {
                out.push(v);
            }
        }
    }
}
