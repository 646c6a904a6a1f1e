//! crosswalk — a modular semantic conversion engine.
//!
//! Tabular transport data (GTFS and similar CSV sources) is *lifted* into an
//! RDF graph expressed against a small reference vocabulary, optionally
//! enriched (extra RDF sources, RDFS inference), and *lowered* through
//! query-driven templates into NeTEx-subset XML. The RDF graph itself is a
//! reusable by-product of every conversion.
//!
//! Modules follow the pipeline stages:
//!
//! * [`rdf`] — terms, triples, the indexed in-memory graph, N-Triples I/O,
//!   and the batched insert writer.
//! * [`mapping`] — the CML mapping language (RML-style lifting rules).
//! * [`lift`] — executes mapping documents over named CSV streams.
//! * [`query`] — a SPARQL SELECT subset: BGPs, OPTIONAL, FILTER, DISTINCT,
//!   ORDER BY, LIMIT.
//! * [`lower`] — the GTL template language rendering query results to text.
//! * [`infer`] — RDFS-subset forward chaining.
//! * [`pipeline`] — declarative block composition and execution.
//! * [`transit`] — GTFS reading, the bundled vocabulary/mappings/templates,
//!   NeTEx-subset validation, and the synthetic feed generator.

pub mod infer;
pub mod lift;
pub mod lower;
pub mod mapping;
pub mod pipeline;
pub mod query;
pub mod rdf;
pub mod transit;
