use std::collections::BTreeSet;
use std::sync::{Arc, RwLock};

use super::{BlankNode, Term, Triple};

/// Shared handle to the pipeline graph: many concurrent readers or one
/// writer. All concurrent ingest goes through the batched writer.
pub type GraphRef = Arc<RwLock<Graph>>;

/// A match pattern; `None` slots are wildcards.
#[derive(Clone, Debug, Default)]
pub struct TriplePattern {
    pub subject: Option<Term>,
    pub predicate: Option<Term>,
    pub object: Option<Term>,
}

impl TriplePattern {
    pub fn new(subject: Option<Term>, predicate: Option<Term>, object: Option<Term>) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
        }
    }
}

/// In-memory triple store with set semantics.
///
/// Three sorted permutations (SPO, POS, OSP) back pattern matching; lookups
/// pick the index keyed by the most selective concrete slot. Keeping every
/// index a `BTreeSet` makes iteration order canonical, which in turn makes
/// query evaluation and template rendering independent of insertion order.
pub struct Graph {
    spo: BTreeSet<[Term; 3]>,
    pos: BTreeSet<[Term; 3]>,
    osp: BTreeSet<[Term; 3]>,
    blank_counter: u64,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            spo: BTreeSet::new(),
            pos: BTreeSet::new(),
            osp: BTreeSet::new(),
            blank_counter: 0,
        }
    }

    pub fn new_ref() -> GraphRef {
        Arc::new(RwLock::new(Graph::new()))
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Insert one triple; returns true when it was not already stored.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let s = triple.subject;
        let p = Term::Iri(triple.predicate);
        let o = triple.object;
        if !self.spo.insert([s.clone(), p.clone(), o.clone()]) {
            return false;
        }
        self.pos.insert([p.clone(), o.clone(), s.clone()]);
        self.osp.insert([o, s, p]);
        true
    }

    /// Insert a batch, deduplicating silently; returns the size delta.
    pub fn insert_all<I: IntoIterator<Item = Triple>>(&mut self, triples: I) -> usize {
        triples.into_iter().filter(|t| self.insert(t.clone())).count()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.spo.contains(&[
            triple.subject.clone(),
            Term::Iri(triple.predicate.clone()),
            triple.object.clone(),
        ])
    }

    /// All triples in canonical (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|row| triple_from_row(row, 0, 1, 2))
    }

    /// Triples matching the pattern. Results come out in the order of the
    /// index chosen for the lookup, which is a pure function of the pattern
    /// shape — matching is deterministic for a given graph content.
    pub fn matching(&self, pattern: &TriplePattern) -> Vec<Triple> {
        let TriplePattern {
            subject: s,
            predicate: p,
            object: o,
        } = pattern;
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let row = [s.clone(), p.clone(), o.clone()];
                if self.spo.contains(&row) {
                    vec![triple_from_row(&row, 0, 1, 2)]
                } else {
                    Vec::new()
                }
            }
            (Some(s), Some(p), None) => scan(&self.spo, &[s, p], 0, 1, 2),
            (Some(s), None, None) => scan(&self.spo, &[s], 0, 1, 2),
            (Some(s), None, Some(o)) => scan(&self.osp, &[o, s], 1, 2, 0),
            (None, Some(p), Some(o)) => scan(&self.pos, &[p, o], 2, 0, 1),
            (None, Some(p), None) => scan(&self.pos, &[p], 2, 0, 1),
            (None, None, Some(o)) => scan(&self.osp, &[o], 1, 2, 0),
            (None, None, None) => self.iter().collect(),
        }
    }

    /// Mint a blank node label unique within this graph.
    pub fn fresh_blank(&mut self) -> BlankNode {
        loop {
            self.blank_counter += 1;
            let label = format!("g{}", self.blank_counter);
            let node = BlankNode::new(&label).expect("generated label is valid");
            let as_term = Term::Blank(node.clone());
            let in_use = !self
                .matching(&TriplePattern::new(Some(as_term.clone()), None, None))
                .is_empty()
                || !self
                    .matching(&TriplePattern::new(None, None, Some(as_term)))
                    .is_empty();
            if !in_use {
                return node;
            }
        }
    }
}

fn triple_from_row(row: &[Term; 3], si: usize, pi: usize, oi: usize) -> Triple {
    let predicate = match &row[pi] {
        Term::Iri(i) => i.clone(),
        other => unreachable!("stored predicate is always an IRI, got {other:?}"),
    };
    Triple {
        subject: row[si].clone(),
        predicate,
        object: row[oi].clone(),
    }
}

/// Range-scan an index by a concrete prefix of its key order.
fn scan(
    index: &BTreeSet<[Term; 3]>,
    prefix: &[&Term],
    si: usize,
    pi: usize,
    oi: usize,
) -> Vec<Triple> {
    let min = min_term();
    let start = [
        prefix[0].clone(),
        if prefix.len() > 1 {
            prefix[1].clone()
        } else {
            min.clone()
        },
        min,
    ];
    index
        .range(start..)
        .take_while(|row| {
            row[0] == *prefix[0] && (prefix.len() < 2 || row[1] == *prefix[1])
        })
        .map(|row| triple_from_row(row, si, pi, oi))
        .collect()
}

/// The smallest possible term under the derived ordering: an (invalid,
/// internal-only) blank node with an empty label, used as a range bound.
fn min_term() -> Term {
    Term::Blank(BlankNode(Arc::from("")))
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph").field("len", &self.len()).finish()
    }
}

#[cfg(test)]
pub(crate) fn pattern(s: Option<&str>, p: Option<&str>, o: Option<Term>) -> TriplePattern {
    use super::Iri;
    TriplePattern::new(
        s.map(|v| Term::Iri(Iri::new(v).expect("valid IRI"))),
        p.map(|v| Term::Iri(Iri::new(v).expect("valid IRI"))),
        o,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Iri;

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(
            Term::iri(s).unwrap(),
            Iri::new(p).unwrap(),
            Term::iri(o).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn insert_deduplicates() {
        let mut g = Graph::new();
        let t1 = t("http://e/s", "http://e/p", "http://e/o");
        assert_eq!(g.insert_all([t1.clone()]), 1);
        assert_eq!(g.insert_all([t1]), 0);
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn insert_batch_counts_new_only() {
        let mut g = Graph::new();
        let triples = vec![
            t("http://e/1", "http://e/p", "http://e/a"),
            t("http://e/2", "http://e/p", "http://e/b"),
            t("http://e/3", "http://e/p", "http://e/c"),
        ];
        assert_eq!(g.insert_all(triples), 3);
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn match_wildcards() {
        let mut g = Graph::new();
        g.insert(t("http://e/1", "http://e/p", "http://e/a"));
        g.insert(t("http://e/1", "http://e/q", "http://e/b"));
        g.insert(t("http://e/2", "http://e/p", "http://e/a"));

        assert_eq!(g.matching(&TriplePattern::default()).len(), 3);
        assert_eq!(g.matching(&pattern(Some("http://e/1"), None, None)).len(), 2);
        assert_eq!(g.matching(&pattern(None, Some("http://e/p"), None)).len(), 2);
        assert_eq!(
            g.matching(&pattern(None, None, Some(Term::iri("http://e/a").unwrap())))
                .len(),
            2
        );
        assert!(g
            .matching(&pattern(Some("http://e/absent"), None, None))
            .is_empty());
    }

    #[test]
    fn match_subject_object() {
        let mut g = Graph::new();
        g.insert(t("http://e/1", "http://e/p", "http://e/a"));
        g.insert(t("http://e/1", "http://e/q", "http://e/a"));
        let hits = g.matching(&pattern(
            Some("http://e/1"),
            None,
            Some(Term::iri("http://e/a").unwrap()),
        ));
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn index_coherence() {
        let mut g = Graph::new();
        let tr = t("http://e/s", "http://e/p", "http://e/o");
        g.insert(tr.clone());
        for pat in [
            pattern(Some("http://e/s"), None, None),
            pattern(None, Some("http://e/p"), None),
            pattern(None, None, Some(tr.object.clone())),
        ] {
            assert!(g.matching(&pat).contains(&tr));
        }
    }

    #[test]
    fn fresh_blank_labels_unique() {
        let mut g = Graph::new();
        let a = g.fresh_blank();
        let b = g.fresh_blank();
        assert_ne!(a.label(), b.label());
    }
}
