//! Query evaluation over the in-memory graph.
//!
//! Evaluation is read-only and fully deterministic: pattern matching walks
//! the graph's sorted indices, OPTIONAL is a left join, filters follow the
//! SPARQL error-to-false rule, and ORDER BY uses a stable sort so ties keep
//! the canonical generation order.

use std::cmp::Ordering;
use std::collections::HashSet;

use super::{
    compare_terms, CompareOp, FilterExpr, GroupPattern, Operand, PatternTerm, Projection, Query,
    Solution, SortDir, TriplePatternAst,
};
use crate::rdf::{Graph, Term, Triple, TriplePattern};

/// All assignments of the pattern variables such that every pattern
/// instantiates to a stored triple; multiset semantics.
pub fn evaluate_bgp(patterns: &[TriplePatternAst], graph: &Graph) -> Vec<Solution> {
    extend_bgp(patterns, graph, Solution::new())
}

fn extend_bgp(patterns: &[TriplePatternAst], graph: &Graph, seed: Solution) -> Vec<Solution> {
    let mut solutions = vec![seed];
    for pattern in patterns {
        let mut next = Vec::new();
        for solution in &solutions {
            let lookup = instantiate(pattern, solution);
            for triple in graph.matching(&lookup) {
                if let Some(extended) = try_extend(solution, pattern, &triple) {
                    next.push(extended);
                }
            }
        }
        solutions = next;
        if solutions.is_empty() {
            break;
        }
    }
    solutions
}

fn instantiate(pattern: &TriplePatternAst, solution: &Solution) -> TriplePattern {
    let slot = |pt: &PatternTerm| -> Option<Term> {
        match pt {
            PatternTerm::Term(t) => Some(t.clone()),
            PatternTerm::Var(v) => solution.get(v).cloned(),
        }
    };
    TriplePattern::new(
        slot(&pattern.subject),
        slot(&pattern.predicate),
        slot(&pattern.object),
    )
}

/// Bind the pattern's variables against a matching triple; `None` when the
/// same variable would need two different values within this triple.
fn try_extend(solution: &Solution, pattern: &TriplePatternAst, triple: &Triple) -> Option<Solution> {
    let mut out = solution.clone();
    let mut bind = |pt: &PatternTerm, value: Term| -> bool {
        match pt {
            PatternTerm::Term(_) => true,
            PatternTerm::Var(v) => match out.get(v) {
                Some(existing) => *existing == value,
                None => {
                    out.bind(v.clone(), value);
                    true
                }
            },
        }
    };
    if !bind(&pattern.subject, triple.subject.clone()) {
        return None;
    }
    if !bind(&pattern.predicate, Term::Iri(triple.predicate.clone())) {
        return None;
    }
    if !bind(&pattern.object, triple.object.clone()) {
        return None;
    }
    Some(out)
}

/// Evaluate a group seeded with existing bindings: required patterns, then
/// each OPTIONAL as a left join, then the group's filters.
fn evaluate_group(group: &GroupPattern, graph: &Graph, seed: Solution) -> Vec<Solution> {
    let mut solutions = extend_bgp(&group.triple_patterns, graph, seed);
    for optional in &group.optionals {
        let mut next = Vec::new();
        for solution in solutions {
            let extensions = evaluate_group(optional, graph, solution.clone());
            if extensions.is_empty() {
                next.push(solution);
            } else {
                next.extend(extensions);
            }
        }
        solutions = next;
    }
    for filter in &group.filters {
        solutions.retain(|s| eval_filter(filter, s) == Some(true));
    }
    solutions
}

/// Full SELECT evaluation: pattern, ORDER BY, projection, DISTINCT, LIMIT.
pub fn evaluate_query(query: &Query, graph: &Graph) -> Vec<Solution> {
    let mut solutions = evaluate_group(&query.pattern, graph, Solution::new());

    if !query.order_by.is_empty() {
        solutions.sort_by(|a, b| {
            for (var, dir) in &query.order_by {
                let ord = match (a.get(var), b.get(var)) {
                    (None, None) => Ordering::Equal,
                    // Unbound sorts first.
                    (None, Some(_)) => Ordering::Less,
                    (Some(_), None) => Ordering::Greater,
                    (Some(x), Some(y)) => compare_terms(x, y),
                };
                let ord = match dir {
                    SortDir::Asc => ord,
                    SortDir::Desc => ord.reverse(),
                };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
    }

    if let Projection::Vars(vars) = &query.projection {
        solutions = solutions.iter().map(|s| s.project(vars)).collect();
    }

    if query.distinct {
        let mut seen = HashSet::new();
        solutions.retain(|s| seen.insert(s.clone()));
    }

    if let Some(limit) = query.limit {
        solutions.truncate(limit);
    }
    solutions
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

/// Three-valued filter evaluation: `None` is the SPARQL "error" outcome
/// (unbound variable, say) and a top-level error keeps the row out.
pub(crate) fn eval_filter(expr: &FilterExpr, solution: &Solution) -> Option<bool> {
    match expr {
        FilterExpr::Bound(var) => Some(solution.get(var).is_some()),
        FilterExpr::Regex(var, _, regex) => {
            let term = solution.get(var)?;
            Some(regex.is_match(term.text()))
        }
        FilterExpr::Not(inner) => eval_filter(inner, solution).map(|b| !b),
        FilterExpr::And(a, b) => match (eval_filter(a, solution), eval_filter(b, solution)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        FilterExpr::Or(a, b) => match (eval_filter(a, solution), eval_filter(b, solution)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        FilterExpr::Compare(op, left, right) => {
            let l = resolve(left, solution)?;
            let r = resolve(right, solution)?;
            let ord = compare_values(&l, &r);
            Some(match op {
                CompareOp::Eq => ord == Ordering::Equal,
                CompareOp::Ne => ord != Ordering::Equal,
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Ge => ord != Ordering::Less,
            })
        }
    }
}

enum Value {
    Term(Term),
    Str(String),
}

fn resolve(operand: &Operand, solution: &Solution) -> Option<Value> {
    match operand {
        Operand::Const(t) => Some(Value::Term(t.clone())),
        Operand::Var(v) => solution.get(v).cloned().map(Value::Term),
        Operand::Str(v) => solution.get(v).map(|t| Value::Str(t.text().to_string())),
    }
}

/// Numeric comparison when both sides are numerically-typed literals,
/// otherwise comparison of the plain string forms.
fn compare_values(a: &Value, b: &Value) -> Ordering {
    if let (Value::Term(Term::Literal(x)), Value::Term(Term::Literal(y))) = (a, b) {
        if let (Some(nx), Some(ny)) = (x.numeric_value(), y.numeric_value()) {
            return nx.partial_cmp(&ny).unwrap_or(Ordering::Equal);
        }
    }
    let text = |v: &Value| match v {
        Value::Term(t) => t.text().to_string(),
        Value::Str(s) => s.clone(),
    };
    text(a).cmp(&text(b))
}
