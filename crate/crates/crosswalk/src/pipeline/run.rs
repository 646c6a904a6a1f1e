//! Pipeline execution: blocks run in order against a shared graph, parallel
//! branches lift concurrently, and the run produces output files plus a
//! statistics record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::{gtfs_preprocess, zip_split, BlockSpec, PipelineConfig};
use crate::infer::{extract_axioms, rdfs_closure};
use crate::lift::{execute_mapping_doc, InputStreamSet};
use crate::lower::{minify_output, parse_template, render_template};
use crate::mapping::parse_mapping;
use crate::rdf::{parse_ntriples, write_ntriples, BatchedWriterConfig, Graph, GraphRef};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("block {index} ({kind}): {message}")]
    Block {
        index: String,
        kind: String,
        message: String,
    },
}

impl PipelineError {
    fn new(index: &str, kind: &str, message: impl Into<String>) -> Self {
        PipelineError::Block {
            index: index.to_string(),
            kind: kind.to_string(),
            message: message.into(),
        }
    }
}

/// The unit flowing through blocks: named byte payloads plus the handle to
/// the run's shared graph.
#[derive(Clone)]
pub struct Message {
    pub id: String,
    pub payloads: BTreeMap<String, Vec<u8>>,
    pub headers: BTreeMap<String, String>,
    pub graph: GraphRef,
}

/// Run statistics in the shape of the conversion-statistics table:
/// total input rows, lifting/lowering/total times, graph size, output size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    #[serde(rename = "gtfsTotalRows")]
    pub gtfs_total_rows: usize,
    #[serde(rename = "liftingTimeMs")]
    pub lifting_time_ms: u64,
    #[serde(rename = "loweringTimeMs")]
    pub lowering_time_ms: u64,
    #[serde(rename = "conversionTimeMs")]
    pub conversion_time_ms: u64,
    #[serde(rename = "numTriples")]
    pub num_triples: usize,
    #[serde(rename = "outputSizeBytes")]
    pub output_size_bytes: u64,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutputs {
    /// Files written under the output directory, keyed by relative path.
    pub files: BTreeMap<String, PathBuf>,
    /// Non-fatal diagnostics from lifting and rendering.
    pub warnings: Vec<String>,
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Default)]
struct Accum {
    rows_read: usize,
    warnings: Vec<String>,
}

/// Merge additional N-Triples files into the pipeline graph; returns the
/// number of newly stored triples.
pub fn data_enrich(graph: &GraphRef, sources: &[PathBuf]) -> Result<usize, String> {
    let mut added = 0;
    for path in sources {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let triples = parse_ntriples(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        added += graph.write().unwrap().insert_all(triples);
    }
    Ok(added)
}

/// Persist the graph as sorted N-Triples; returns the bytes written.
pub fn dump_graph(graph: &GraphRef, path: &Path) -> Result<u64, String> {
    let text = write_ntriples(&graph.read().unwrap());
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    std::fs::write(path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.len() as u64)
}

/// Execute a pipeline. Relative paths in block params resolve against
/// `base_dir` (normally the config file's directory); output paths resolve
/// against `out_dir`.
pub fn run_pipeline(
    config: &PipelineConfig,
    base_dir: &Path,
    inputs: BTreeMap<String, Vec<u8>>,
    out_dir: &Path,
) -> Result<(RunOutputs, StatsReport), PipelineError> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| {
        PipelineError::new("0", "attach_graph", format!("cannot create output dir: {e}"))
    })?;

    let graph = Graph::new_ref();
    let mut message = Message {
        id: format!(
            "{}-{}",
            config.name,
            RUN_COUNTER.fetch_add(1, Ordering::SeqCst)
        ),
        payloads: inputs,
        headers: BTreeMap::new(),
        graph: graph.clone(),
    };
    let accum = Mutex::new(Accum::default());
    let mut outputs = RunOutputs::default();
    let mut lifting_ms = 0u64;
    let mut lowering_ms = 0u64;

    for (i, block) in config.blocks.iter().enumerate() {
        let index = i.to_string();
        match block {
            BlockSpec::AttachGraph => {
                message
                    .headers
                    .insert("graph".into(), "attached".into());
            }
            BlockSpec::Parallel { branches } => {
                let t0 = Instant::now();
                std::thread::scope(|scope| -> Result<(), PipelineError> {
                    let mut handles = Vec::new();
                    for (bi, branch) in branches.iter().enumerate() {
                        let mut branch_message = message.clone();
                        let accum = &accum;
                        let index = format!("{i}.b{bi}");
                        handles.push(scope.spawn(move || {
                            run_blocks(
                                branch,
                                &index,
                                &mut branch_message,
                                base_dir,
                                config,
                                accum,
                            )
                        }));
                    }
                    let mut first_error = None;
                    for handle in handles {
                        let result = handle.join().expect("branch thread panicked");
                        if let Err(e) = result {
                            first_error.get_or_insert(e);
                        }
                    }
                    match first_error {
                        Some(e) => Err(e),
                        None => Ok(()),
                    }
                })?;
                lifting_ms += t0.elapsed().as_millis() as u64;
            }
            BlockSpec::Lift { .. } => {
                let t0 = Instant::now();
                run_simple_block(block, &index, &mut message, base_dir, config, &accum)?;
                lifting_ms += t0.elapsed().as_millis() as u64;
            }
            BlockSpec::Lower {
                template,
                output,
                minify,
            } => {
                let t0 = Instant::now();
                let rendered = render_lower(
                    &index,
                    base_dir,
                    template,
                    &message,
                    config,
                    &accum,
                )?;
                let bytes = if *minify {
                    minify_output(&rendered).into_bytes()
                } else {
                    rendered.into_bytes()
                };
                message.payloads.insert(output.clone(), bytes);
                lowering_ms += t0.elapsed().as_millis() as u64;
            }
            BlockSpec::DumpGraph { path } => {
                let target = out_dir.join(path);
                dump_graph(&message.graph, &target)
                    .map_err(|e| PipelineError::new(&index, "dump_graph", e))?;
                outputs.files.insert(path.clone(), target);
            }
            BlockSpec::WriteOutput { from, path } => {
                let bytes = message.payloads.get(from).ok_or_else(|| {
                    PipelineError::new(
                        &index,
                        "write_output",
                        format!("no payload named {from:?}"),
                    )
                })?;
                let target = out_dir.join(path);
                if let Some(parent) = target.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| {
                        PipelineError::new(&index, "write_output", e.to_string())
                    })?;
                }
                std::fs::write(&target, bytes)
                    .map_err(|e| PipelineError::new(&index, "write_output", e.to_string()))?;
                outputs.files.insert(path.clone(), target);
            }
            _ => run_simple_block(block, &index, &mut message, base_dir, config, &accum)?,
        }
    }

    let accum = accum.into_inner().unwrap();
    outputs.warnings = accum.warnings;
    let output_size_bytes = config
        .blocks
        .iter()
        .filter_map(|b| match b {
            BlockSpec::WriteOutput { path, .. } => outputs.files.get(path),
            _ => None,
        })
        .filter_map(|p| std::fs::metadata(p).ok())
        .map(|m| m.len())
        .sum();

    let stats = StatsReport {
        gtfs_total_rows: accum.rows_read,
        lifting_time_ms: lifting_ms,
        lowering_time_ms: lowering_ms,
        conversion_time_ms: started.elapsed().as_millis() as u64,
        num_triples: graph.read().unwrap().len(),
        output_size_bytes,
    };
    Ok((outputs, stats))
}

/// Blocks that only touch the message payloads and the graph; shared by the
/// main path and parallel branches.
fn run_blocks(
    blocks: &[BlockSpec],
    index_prefix: &str,
    message: &mut Message,
    base_dir: &Path,
    config: &PipelineConfig,
    accum: &Mutex<Accum>,
) -> Result<(), PipelineError> {
    for (j, block) in blocks.iter().enumerate() {
        let index = format!("{index_prefix}.{j}");
        run_simple_block(block, &index, message, base_dir, config, accum)?;
    }
    Ok(())
}

fn run_simple_block(
    block: &BlockSpec,
    index: &str,
    message: &mut Message,
    base_dir: &Path,
    config: &PipelineConfig,
    accum: &Mutex<Accum>,
) -> Result<(), PipelineError> {
    let kind = block.kind();
    match block {
        BlockSpec::ZipSplit => {
            let zip_names: Vec<String> = message
                .payloads
                .keys()
                .filter(|n| n.ends_with(".zip"))
                .cloned()
                .collect();
            if zip_names.is_empty() {
                return Err(PipelineError::new(index, kind, "no .zip payload to split"));
            }
            for name in zip_names {
                let bytes = message.payloads.remove(&name).expect("name from the map");
                let streams = zip_split(&bytes)
                    .map_err(|e| PipelineError::new(index, kind, e.to_string()))?;
                if streams.is_empty() {
                    accum
                        .lock()
                        .unwrap()
                        .warnings
                        .push(format!("zip payload {name:?} contained no file entries"));
                }
                message.payloads.extend(streams);
            }
        }
        BlockSpec::GtfsPreprocess { filters } => {
            let filters: Vec<(String, String)> = filters
                .iter()
                .map(|f| (f.file.clone(), f.column.clone()))
                .collect();
            gtfs_preprocess(&mut message.payloads, &filters)
                .map_err(|e| PipelineError::new(index, kind, e.to_string()))?;
        }
        BlockSpec::Lift { mapping } => {
            let path = base_dir.join(mapping);
            let text = std::fs::read_to_string(&path).map_err(|e| {
                PipelineError::new(index, kind, format!("{}: {e}", path.display()))
            })?;
            let doc = parse_mapping(&text).map_err(|e| {
                PipelineError::new(index, kind, format!("{}: {e}", path.display()))
            })?;
            let streams: InputStreamSet = message
                .payloads
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            let report = execute_mapping_doc(
                &doc,
                &streams,
                message.graph.clone(),
                BatchedWriterConfig {
                    batch_size: config.store.batch_size,
                    writers: config.store.writers,
                },
            )
            .map_err(|e| PipelineError::new(index, kind, e.to_string()))?;
            let mut accum = accum.lock().unwrap();
            accum.rows_read += report.rows_read;
            accum
                .warnings
                .extend(report.diagnostics.iter().map(ToString::to_string));
        }
        BlockSpec::DataEnrich { sources } => {
            let paths: Vec<PathBuf> = sources.iter().map(|s| base_dir.join(s)).collect();
            data_enrich(&message.graph, &paths)
                .map_err(|e| PipelineError::new(index, kind, e))?;
        }
        BlockSpec::InferEnrich { ontologies } => {
            let mut graphs = Vec::new();
            for source in ontologies {
                let path = base_dir.join(source);
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    PipelineError::new(index, kind, format!("{}: {e}", path.display()))
                })?;
                let triples = parse_ntriples(&text).map_err(|e| {
                    PipelineError::new(index, kind, format!("{}: {e}", path.display()))
                })?;
                let mut g = Graph::new();
                g.insert_all(triples);
                graphs.push(g);
            }
            let axioms = extract_axioms(graphs.iter());
            rdfs_closure(&mut message.graph.write().unwrap(), &axioms);
        }
        other => {
            return Err(PipelineError::new(
                index,
                other.kind(),
                "block not allowed in this position",
            ));
        }
    }
    Ok(())
}

/// The lower block: resolve payload-derived params and delegate to
/// [`lower_templates`].
fn render_lower(
    index: &str,
    base_dir: &Path,
    template: &str,
    message: &Message,
    config: &PipelineConfig,
    accum: &Mutex<Accum>,
) -> Result<String, PipelineError> {
    let kind = "lower";
    let path = base_dir.join(template);
    let mut params: BTreeMap<String, String> = BTreeMap::new();
    params.insert("pipeline_name".into(), config.name.clone());
    for (name, bytes) in &message.payloads {
        if let Ok(text) = std::str::from_utf8(bytes) {
            params.insert(name.clone(), text.to_string());
        }
    }
    let graph = message.graph.read().unwrap();
    let (output, diagnostics) = lower_templates(&path, &graph, params)
        .map_err(|e| PipelineError::new(index, kind, e))?;
    if !diagnostics.is_empty() {
        accum.lock().unwrap().warnings.extend(diagnostics);
    }
    Ok(output)
}

/// Render one template file, or a directory of `*.gtl` files in
/// lexicographic order. With a directory, each file's output becomes a
/// render parameter for the later ones (named by the file stem without its
/// numeric prefix, `10_resource_frame.gtl` -> `resource_frame`) and the
/// result is the last file's output.
pub fn lower_templates(
    path: &Path,
    graph: &Graph,
    mut params: BTreeMap<String, String>,
) -> Result<(String, Vec<String>), String> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "gtl"))
            .collect();
        entries.sort();
        if entries.is_empty() {
            return Err(format!("{}: no .gtl templates", path.display()));
        }
        entries
    } else {
        vec![path.to_path_buf()]
    };

    let mut diagnostics = Vec::new();
    let mut last_output = String::new();
    for file in &files {
        let text = std::fs::read_to_string(file)
            .map_err(|e| format!("{}: {e}", file.display()))?;
        let parsed =
            parse_template(&text).map_err(|e| format!("{}: {e}", file.display()))?;
        let rendered = render_template(&parsed, graph, &params)
            .map_err(|e| format!("{}: {e}", file.display()))?;
        diagnostics.extend(
            rendered
                .diagnostics
                .iter()
                .map(|d| format!("{}: {d}", file.display())),
        );
        params.insert(param_name(file), rendered.text.clone());
        last_output = rendered.text;
    }
    Ok((last_output, diagnostics))
}

/// `10_resource_frame.gtl` -> `resource_frame`.
fn param_name(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.trim_start_matches(|c: char| c.is_ascii_digit())
        .trim_start_matches('_')
        .to_string()
}
