//! Incremental batched graph ingest.
//!
//! Producers enqueue triples; full batches go onto a queue consumed by a
//! pool of writer threads that apply them to the shared graph. The final
//! graph content is identical to direct insertion regardless of batch size,
//! writer count or scheduling — set semantics make the union commutative.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use crossbeam_channel::{unbounded, Sender};
use thiserror::Error;

use super::{GraphRef, Triple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WriterError {
    #[error("batch size must be >= 1")]
    InvalidBatchSize,
    #[error("writer count must be >= 1")]
    InvalidWriters,
    #[error("enqueue after finish()")]
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchedWriterConfig {
    /// Triples per incremental insert.
    pub batch_size: usize,
    /// Concurrent consumers draining the queue.
    pub writers: usize,
}

impl Default for BatchedWriterConfig {
    fn default() -> Self {
        BatchedWriterConfig {
            batch_size: 1000,
            writers: 1,
        }
    }
}

impl BatchedWriterConfig {
    pub fn new(batch_size: usize, writers: usize) -> Result<Self, WriterError> {
        if batch_size == 0 {
            return Err(WriterError::InvalidBatchSize);
        }
        if writers == 0 {
            return Err(WriterError::InvalidWriters);
        }
        Ok(BatchedWriterConfig {
            batch_size,
            writers,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WriterReport {
    /// Batches handed to the queue, residue included.
    pub flushes: usize,
    /// Triples that were new to the graph.
    pub inserted: usize,
    /// Triples enqueued in total.
    pub enqueued: usize,
}

struct ProducerSide {
    pending: Vec<Triple>,
    sender: Option<Sender<Vec<Triple>>>,
    enqueued: usize,
    flushes: usize,
}

/// Handle for concurrent ingest; may be shared across producing threads.
pub struct BatchedWriter {
    batch_size: usize,
    producer: Mutex<ProducerSide>,
    consumers: Mutex<Vec<JoinHandle<()>>>,
    inserted: Arc<AtomicUsize>,
    report: Mutex<Option<WriterReport>>,
}

impl BatchedWriter {
    pub fn new(graph: GraphRef, config: BatchedWriterConfig) -> Result<Self, WriterError> {
        BatchedWriterConfig::new(config.batch_size, config.writers)?;
        let (tx, rx) = unbounded::<Vec<Triple>>();
        let inserted = Arc::new(AtomicUsize::new(0));
        let mut handles = Vec::with_capacity(config.writers);
        for _ in 0..config.writers {
            let rx = rx.clone();
            let graph = graph.clone();
            let inserted = inserted.clone();
            handles.push(std::thread::spawn(move || {
                while let Ok(batch) = rx.recv() {
                    let delta = graph.write().unwrap().insert_all(batch);
                    inserted.fetch_add(delta, Ordering::SeqCst);
                }
            }));
        }
        Ok(BatchedWriter {
            batch_size: config.batch_size,
            producer: Mutex::new(ProducerSide {
                pending: Vec::with_capacity(config.batch_size.min(4096)),
                sender: Some(tx),
                enqueued: 0,
                flushes: 0,
            }),
            consumers: Mutex::new(handles),
            inserted,
            report: Mutex::new(None),
        })
    }

    pub fn enqueue(&self, triple: Triple) -> Result<(), WriterError> {
        let mut prod = self.producer.lock().unwrap();
        if prod.sender.is_none() {
            return Err(WriterError::Closed);
        }
        prod.pending.push(triple);
        prod.enqueued += 1;
        if prod.pending.len() >= self.batch_size {
            let batch = std::mem::take(&mut prod.pending);
            prod.flushes += 1;
            prod.sender
                .as_ref()
                .expect("checked above")
                .send(batch)
                .expect("consumers outlive the sender");
        }
        Ok(())
    }

    /// Flush the residue, drain the queue and join the consumer pool.
    /// Idempotent: later calls return the cached report.
    pub fn finish(&self) -> WriterReport {
        let (enqueued, flushes) = {
            let mut prod = self.producer.lock().unwrap();
            match prod.sender.take() {
                Some(sender) => {
                    if !prod.pending.is_empty() {
                        let batch = std::mem::take(&mut prod.pending);
                        prod.flushes += 1;
                        sender.send(batch).expect("consumers still running");
                    }
                    // Dropping the sender closes the queue; consumers drain
                    // whatever is left and exit.
                    drop(sender);
                    (prod.enqueued, prod.flushes)
                }
                None => return self.report.lock().unwrap().unwrap_or_default(),
            }
        };
        for handle in self.consumers.lock().unwrap().drain(..) {
            handle.join().expect("writer thread panicked");
        }
        let report = WriterReport {
            flushes,
            inserted: self.inserted.load(Ordering::SeqCst),
            enqueued,
        };
        *self.report.lock().unwrap() = Some(report);
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Graph, Iri, Term, Triple};

    fn t(n: usize) -> Triple {
        Triple::new(
            Term::iri(format!("http://e/s{n}")).unwrap(),
            Iri::new("http://e/p").unwrap(),
            Term::iri(format!("http://e/o{}", n % 17)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn flush_counts_match_ceiling_arithmetic() {
        let graph = Graph::new_ref();
        let w = BatchedWriter::new(graph.clone(), BatchedWriterConfig::new(1000, 2).unwrap())
            .unwrap();
        for i in 0..2500 {
            w.enqueue(t(i)).unwrap();
        }
        let report = w.finish();
        assert_eq!(report.flushes, 3);
        assert_eq!(report.enqueued, 2500);
        assert_eq!(graph.read().unwrap().len(), 2500);
    }

    #[test]
    fn batch_size_one_flushes_each_triple() {
        let graph = Graph::new_ref();
        let w =
            BatchedWriter::new(graph, BatchedWriterConfig::new(1, 1).unwrap()).unwrap();
        for i in 0..3 {
            w.enqueue(t(i)).unwrap();
        }
        assert_eq!(w.finish().flushes, 3);
    }

    #[test]
    fn enqueue_after_finish_is_an_error() {
        let graph = Graph::new_ref();
        let w =
            BatchedWriter::new(graph, BatchedWriterConfig::default()).unwrap();
        w.enqueue(t(0)).unwrap();
        w.finish();
        assert_eq!(w.enqueue(t(1)), Err(WriterError::Closed));
        // finish is idempotent
        assert_eq!(w.finish().enqueued, 1);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert_eq!(
            BatchedWriterConfig::new(0, 1).unwrap_err(),
            WriterError::InvalidBatchSize
        );
        assert_eq!(
            BatchedWriterConfig::new(1, 0).unwrap_err(),
            WriterError::InvalidWriters
        );
    }

    #[test]
    fn content_matches_direct_insertion_for_any_config() {
        use std::sync::Arc;
        // 10_000 triples with duplicates; several configs; multi-producer.
        let triples: Vec<Triple> = (0..10_000).map(|i| t(i % 4_000)).collect();
        let mut direct = Graph::new();
        direct.insert_all(triples.iter().cloned());
        let expected = crate::rdf::write_ntriples(&direct);

        for (batch, writers) in [(1, 1), (7, 4), (1000, 4), (10_000, 1)] {
            let graph = Graph::new_ref();
            let w = Arc::new(
                BatchedWriter::new(graph.clone(), BatchedWriterConfig::new(batch, writers).unwrap())
                    .unwrap(),
            );
            let mut producers = Vec::new();
            for chunk in triples.chunks(2500) {
                let w = w.clone();
                let chunk = chunk.to_vec();
                producers.push(std::thread::spawn(move || {
                    for tr in chunk {
                        w.enqueue(tr).unwrap();
                    }
                }));
            }
            for p in producers {
                p.join().unwrap();
            }
            let report = w.finish();
            assert_eq!(report.enqueued, 10_000);
            assert_eq!(report.inserted, 4_000);
            assert_eq!(
                crate::rdf::write_ntriples(&graph.read().unwrap()),
                expected,
                "batch={batch} writers={writers}"
            );
        }
    }
}
