//! RDFS-subset forward chaining.
//!
//! Axioms (subClassOf, subPropertyOf, domain, range) are read from ontology
//! graphs; the closure entails new data triples to fixpoint. Evaluation is
//! semi-naive: the subclass/subproperty hierarchies are transitively closed
//! first, then only newly derived triples are re-examined.

use std::collections::{BTreeMap, BTreeSet};

use crate::rdf::{vocab, Graph, Iri, Term, Triple};

/// Schema-level facts extracted from ontology graphs. Only triples whose
/// predicate is the corresponding RDFS predicate contribute.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OntologyAxioms {
    pub sub_class_of: BTreeSet<(Iri, Iri)>,
    pub sub_property_of: BTreeSet<(Iri, Iri)>,
    pub domain: BTreeSet<(Iri, Iri)>,
    pub range: BTreeSet<(Iri, Iri)>,
}

impl OntologyAxioms {
    pub fn len(&self) -> usize {
        self.sub_class_of.len() + self.sub_property_of.len() + self.domain.len() + self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Union of axioms across the given graphs; non-axiom triples are ignored,
/// as are axiom triples whose subject or object is not an IRI.
pub fn extract_axioms<'g, I: IntoIterator<Item = &'g Graph>>(graphs: I) -> OntologyAxioms {
    let mut axioms = OntologyAxioms::default();
    for graph in graphs {
        for triple in graph.iter() {
            let (Term::Iri(s), Term::Iri(o)) = (&triple.subject, &triple.object) else {
                continue;
            };
            let pair = (s.clone(), o.clone());
            match triple.predicate.as_str() {
                vocab::RDFS_SUBCLASS_OF => {
                    axioms.sub_class_of.insert(pair);
                }
                vocab::RDFS_SUBPROPERTY_OF => {
                    axioms.sub_property_of.insert(pair);
                }
                vocab::RDFS_DOMAIN => {
                    axioms.domain.insert(pair);
                }
                vocab::RDFS_RANGE => {
                    axioms.range.insert(pair);
                }
                _ => {}
            }
        }
    }
    axioms
}

/// Transitive closure of a binary relation over IRIs.
fn transitive_closure(pairs: &BTreeSet<(Iri, Iri)>) -> BTreeMap<Iri, BTreeSet<Iri>> {
    let mut closure: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    for (sub, sup) in pairs {
        closure.entry(sub.clone()).or_default().insert(sup.clone());
    }
    loop {
        let mut additions: Vec<(Iri, Iri)> = Vec::new();
        for (sub, sups) in &closure {
            for sup in sups {
                if let Some(next) = closure.get(sup) {
                    for n in next {
                        if n != sub && !sups.contains(n) {
                            additions.push((sub.clone(), n.clone()));
                        }
                    }
                }
            }
        }
        if additions.is_empty() {
            break;
        }
        for (sub, sup) in additions {
            closure.entry(sub).or_default().insert(sup);
        }
    }
    closure
}

/// Apply the RDFS rules to fixpoint; returns the number of triples added.
///
/// Rules: type propagation along subClassOf, triple propagation along
/// subPropertyOf, domain ((s p o) ⇒ s rdf:type C) and range ((s p o) ⇒
/// o rdf:type C, skipped for literal objects). The subclass and subproperty
/// hierarchies themselves are closed transitively before the data pass.
pub fn rdfs_closure(graph: &mut Graph, axioms: &OntologyAxioms) -> usize {
    let rdf_type = Iri::new(vocab::RDF_TYPE).expect("rdf:type is a valid IRI");
    let superclasses = transitive_closure(&axioms.sub_class_of);
    let superproperties = transitive_closure(&axioms.sub_property_of);

    let mut frontier: Vec<Triple> = graph.iter().collect();
    let mut added = 0usize;

    while !frontier.is_empty() {
        let mut derived: Vec<Triple> = Vec::new();
        for triple in &frontier {
            // Type propagation along subClassOf.
            if triple.predicate == rdf_type {
                if let Term::Iri(class) = &triple.object {
                    if let Some(sups) = superclasses.get(class) {
                        for sup in sups {
                            derived.push(Triple {
                                subject: triple.subject.clone(),
                                predicate: rdf_type.clone(),
                                object: Term::Iri(sup.clone()),
                            });
                        }
                    }
                }
            }
            // Triple propagation along subPropertyOf.
            if let Some(sups) = superproperties.get(&triple.predicate) {
                for sup in sups {
                    derived.push(Triple {
                        subject: triple.subject.clone(),
                        predicate: sup.clone(),
                        object: triple.object.clone(),
                    });
                }
            }
            // Domain and range.
            for (property, class) in &axioms.domain {
                if triple.predicate == *property {
                    derived.push(Triple {
                        subject: triple.subject.clone(),
                        predicate: rdf_type.clone(),
                        object: Term::Iri(class.clone()),
                    });
                }
            }
            for (property, class) in &axioms.range {
                if triple.predicate == *property && !triple.object.is_literal() {
                    derived.push(Triple {
                        subject: triple.object.clone(),
                        predicate: rdf_type.clone(),
                        object: Term::Iri(class.clone()),
                    });
                }
            }
        }
        frontier = derived
            .into_iter()
            .filter(|t| graph.insert(t.clone()))
            .collect();
        added += frontier.len();
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_ntriples;

    fn graph(nt: &str) -> Graph {
        let mut g = Graph::new();
        g.insert_all(parse_ntriples(nt).unwrap());
        g
    }

    #[test]
    fn extracts_subclass_axiom() {
        let g = graph(
            "<http://t/Operator> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://t/Organisation> .\n",
        );
        let axioms = extract_axioms([&g]);
        assert_eq!(axioms.sub_class_of.len(), 1);
        assert_eq!(axioms.len(), 1);
    }

    #[test]
    fn empty_graph_no_axioms() {
        let g = Graph::new();
        assert!(extract_axioms([&g]).is_empty());
    }

    #[test]
    fn non_axiom_triples_ignored() {
        let g = graph(
            "<http://t/a> <http://t/p> <http://t/b> .\n\
             <http://t/a> <http://www.w3.org/2000/01/rdf-schema#domain> \"lit\" .\n",
        );
        assert!(extract_axioms([&g]).is_empty());
    }

    #[test]
    fn subclass_chain_fires_twice() {
        let ontology = graph(
            "<http://t/A> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://t/B> .\n\
             <http://t/B> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://t/C> .\n",
        );
        let mut data = graph(
            "<http://t/x> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://t/A> .\n",
        );
        let added = rdfs_closure(&mut data, &extract_axioms([&ontology]));
        assert_eq!(added, 2);
        assert_eq!(data.len(), 3);
    }

    #[test]
    fn domain_rule() {
        let ontology = graph(
            "<http://t/operatedBy> <http://www.w3.org/2000/01/rdf-schema#domain> <http://t/Line> .\n",
        );
        let mut data = graph("<http://t/l> <http://t/operatedBy> <http://t/o> .\n");
        let added = rdfs_closure(&mut data, &extract_axioms([&ontology]));
        assert_eq!(added, 1);
        assert!(data.contains(
            &parse_ntriples(
                "<http://t/l> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://t/Line> .\n"
            )
            .unwrap()[0]
        ));
    }

    #[test]
    fn range_rule_skips_literals() {
        let ontology = graph(
            "<http://t/name> <http://www.w3.org/2000/01/rdf-schema#range> <http://t/Name> .\n",
        );
        let mut data = graph(
            "<http://t/l> <http://t/name> \"L1\" .\n\
             <http://t/l> <http://t/name> <http://t/n1> .\n",
        );
        let added = rdfs_closure(&mut data, &extract_axioms([&ontology]));
        assert_eq!(added, 1, "only the IRI object gains a type");
    }

    #[test]
    fn closure_is_idempotent() {
        let ontology = graph(
            "<http://t/A> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://t/B> .\n\
             <http://t/p> <http://www.w3.org/2000/01/rdf-schema#subPropertyOf> <http://t/q> .\n\
             <http://t/p> <http://www.w3.org/2000/01/rdf-schema#domain> <http://t/A> .\n",
        );
        let axioms = extract_axioms([&ontology]);
        let mut data = graph("<http://t/x> <http://t/p> <http://t/y> .\n");
        let first = rdfs_closure(&mut data, &axioms);
        assert!(first > 0);
        assert_eq!(rdfs_closure(&mut data, &axioms), 0);
    }

    #[test]
    fn subproperty_then_domain_of_superproperty() {
        // (x p y), p ⊑ q, domain(q, C) ⇒ (x q y) and (x type C).
        let ontology = graph(
            "<http://t/p> <http://www.w3.org/2000/01/rdf-schema#subPropertyOf> <http://t/q> .\n\
             <http://t/q> <http://www.w3.org/2000/01/rdf-schema#domain> <http://t/C> .\n",
        );
        let mut data = graph("<http://t/x> <http://t/p> <http://t/y> .\n");
        let added = rdfs_closure(&mut data, &extract_axioms([&ontology]));
        assert_eq!(added, 2);
    }
}
