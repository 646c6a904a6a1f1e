//! Declarative pipeline composition: a JSON config names an ordered list of
//! typed blocks that share one RDF graph while a message (named byte
//! payloads) flows through them.

mod blocks;
mod run;

pub use blocks::{gtfs_preprocess, zip_split, PreprocessError, ZipSplitError};
pub use run::{
    data_enrich, dump_graph, lower_templates, run_pipeline, Message, PipelineError, RunOutputs,
    StatsReport,
};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

/// Config problems carry a JSON-pointer-style path to the offending node.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config error at {path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StoreConfig {
    #[serde(rename = "batchSize")]
    pub batch_size: usize,
    pub writers: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            batch_size: 1000,
            writers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreprocessFilter {
    pub file: String,
    pub column: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockSpec {
    AttachGraph,
    ZipSplit,
    GtfsPreprocess { filters: Vec<PreprocessFilter> },
    Lift { mapping: String },
    DataEnrich { sources: Vec<String> },
    InferEnrich { ontologies: Vec<String> },
    Lower { template: String, output: String, minify: bool },
    DumpGraph { path: String },
    WriteOutput { from: String, path: String },
    Parallel { branches: Vec<Vec<BlockSpec>> },
}

impl BlockSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BlockSpec::AttachGraph => "attach_graph",
            BlockSpec::ZipSplit => "zip_split",
            BlockSpec::GtfsPreprocess { .. } => "gtfs_preprocess",
            BlockSpec::Lift { .. } => "lift",
            BlockSpec::DataEnrich { .. } => "data_enrich",
            BlockSpec::InferEnrich { .. } => "infer_enrich",
            BlockSpec::Lower { .. } => "lower",
            BlockSpec::DumpGraph { .. } => "dump_graph",
            BlockSpec::WriteOutput { .. } => "write_output",
            BlockSpec::Parallel { .. } => "parallel",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub name: String,
    pub store: StoreConfig,
    pub blocks: Vec<BlockSpec>,
}

/// Parse and validate a pipeline config document.
pub fn parse_pipeline_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::new("/", e.to_string()))?;
    let root = as_object(&value, "/", &["name", "store", "blocks"])?;

    let name = match root.get("name") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(ConfigError::new("/name", "expected a string")),
    };

    let store = match root.get("store") {
        None => StoreConfig::default(),
        Some(v) => {
            let obj = as_object(v, "/store", &["batchSize", "writers"])?;
            let get = |key: &str, default: usize| -> Result<usize, ConfigError> {
                match obj.get(key) {
                    None => Ok(default),
                    Some(Value::Number(n)) if n.as_u64().is_some_and(|x| x >= 1) => {
                        Ok(n.as_u64().unwrap() as usize)
                    }
                    _ => Err(ConfigError::new(
                        format!("/store/{key}"),
                        "expected an integer >= 1",
                    )),
                }
            };
            StoreConfig {
                batch_size: get("batchSize", 1000)?,
                writers: get("writers", 1)?,
            }
        }
    };

    let blocks_value = root
        .get("blocks")
        .ok_or_else(|| ConfigError::new("/blocks", "missing"))?;
    let blocks = parse_blocks(blocks_value, "/blocks", true)?;

    let config = PipelineConfig {
        name,
        store,
        blocks,
    };
    validate_structure(&config)?;
    Ok(config)
}

fn as_object<'v>(
    value: &'v Value,
    path: &str,
    allowed: &[&str],
) -> Result<&'v serde_json::Map<String, Value>, ConfigError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::new(path, "expected an object"))?;
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::new(
                format!("{path}/{key}"),
                "unknown field",
            ));
        }
    }
    Ok(obj)
}

fn parse_blocks(value: &Value, path: &str, top_level: bool) -> Result<Vec<BlockSpec>, ConfigError> {
    let array = value
        .as_array()
        .ok_or_else(|| ConfigError::new(path, "expected an array of blocks"))?;
    array
        .iter()
        .enumerate()
        .map(|(i, v)| parse_block(v, &format!("{path}/{i}"), top_level))
        .collect()
}

fn parse_block(value: &Value, path: &str, top_level: bool) -> Result<BlockSpec, ConfigError> {
    let kind = value
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| ConfigError::new(format!("{path}/kind"), "missing block kind"))?;
    let require_string = |key: &str| -> Result<String, ConfigError> {
        value
            .get(key)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ConfigError::new(format!("{path}/{key}"), "expected a string"))
    };
    let string_list = |key: &str| -> Result<Vec<String>, ConfigError> {
        let arr = value
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| ConfigError::new(format!("{path}/{key}"), "expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str().map(str::to_string).ok_or_else(|| {
                    ConfigError::new(format!("{path}/{key}/{i}"), "expected a string")
                })
            })
            .collect()
    };

    let check = |allowed: &[&str]| -> Result<(), ConfigError> {
        as_object(value, path, allowed).map(|_| ())
    };

    match kind {
        "attach_graph" => {
            check(&["kind"])?;
            Ok(BlockSpec::AttachGraph)
        }
        "zip_split" => {
            check(&["kind"])?;
            Ok(BlockSpec::ZipSplit)
        }
        "gtfs_preprocess" => {
            check(&["kind", "filters"])?;
            let mut filters = Vec::new();
            if let Some(v) = value.get("filters") {
                let arr = v.as_array().ok_or_else(|| {
                    ConfigError::new(format!("{path}/filters"), "expected an array")
                })?;
                for (i, f) in arr.iter().enumerate() {
                    let fpath = format!("{path}/filters/{i}");
                    let obj = as_object(f, &fpath, &["file", "column"])?;
                    let field = |key: &str| -> Result<String, ConfigError> {
                        obj.get(key).and_then(Value::as_str).map(str::to_string).ok_or_else(
                            || ConfigError::new(format!("{fpath}/{key}"), "expected a string"),
                        )
                    };
                    filters.push(PreprocessFilter {
                        file: field("file")?,
                        column: field("column")?,
                    });
                }
            }
            Ok(BlockSpec::GtfsPreprocess { filters })
        }
        "lift" => {
            check(&["kind", "mapping"])?;
            Ok(BlockSpec::Lift {
                mapping: require_string("mapping")?,
            })
        }
        "data_enrich" => {
            check(&["kind", "sources"])?;
            Ok(BlockSpec::DataEnrich {
                sources: string_list("sources")?,
            })
        }
        "infer_enrich" => {
            check(&["kind", "ontologies"])?;
            Ok(BlockSpec::InferEnrich {
                ontologies: string_list("ontologies")?,
            })
        }
        "lower" => {
            check(&["kind", "template", "output", "minify"])?;
            let minify = match value.get("minify") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => {
                    return Err(ConfigError::new(
                        format!("{path}/minify"),
                        "expected a boolean",
                    ))
                }
            };
            Ok(BlockSpec::Lower {
                template: require_string("template")?,
                output: require_string("output")?,
                minify,
            })
        }
        "dump_graph" => {
            check(&["kind", "path"])?;
            Ok(BlockSpec::DumpGraph {
                path: require_string("path")?,
            })
        }
        "write_output" => {
            check(&["kind", "from", "path"])?;
            Ok(BlockSpec::WriteOutput {
                from: require_string("from")?,
                path: require_string("path")?,
            })
        }
        "parallel" => {
            check(&["kind", "branches"])?;
            if !top_level {
                return Err(ConfigError::new(path, "parallel cannot be nested"));
            }
            let branches_value = value
                .get("branches")
                .ok_or_else(|| ConfigError::new(format!("{path}/branches"), "missing"))?;
            let arr = branches_value.as_array().ok_or_else(|| {
                ConfigError::new(format!("{path}/branches"), "expected an array of branches")
            })?;
            let mut branches = Vec::new();
            for (i, b) in arr.iter().enumerate() {
                branches.push(parse_blocks(b, &format!("{path}/branches/{i}"), false)?);
            }
            Ok(BlockSpec::Parallel { branches })
        }
        other => Err(ConfigError::new(
            format!("{path}/kind"),
            format!("unknown block kind {other:?}"),
        )),
    }
}

/// Cross-block structure rules.
fn validate_structure(config: &PipelineConfig) -> Result<(), ConfigError> {
    let blocks = &config.blocks;
    if blocks.is_empty() {
        return Err(ConfigError::new("/blocks", "pipeline has no blocks"));
    }
    let attach_count = blocks
        .iter()
        .filter(|b| matches!(b, BlockSpec::AttachGraph))
        .count();
    if attach_count != 1 || !matches!(blocks[0], BlockSpec::AttachGraph) {
        return Err(ConfigError::new(
            "/blocks/0",
            "attach_graph must be first (exactly one)",
        ));
    }

    const BRANCH_KINDS: &[&str] = &["lift", "gtfs_preprocess", "zip_split"];
    let mut last_lift: Option<usize> = None;
    let mut first_lower: Option<usize> = None;
    for (i, block) in blocks.iter().enumerate() {
        match block {
            BlockSpec::Lift { .. } | BlockSpec::Parallel { .. } => last_lift = Some(i),
            BlockSpec::Lower { .. } => {
                if first_lower.is_none() {
                    first_lower = Some(i);
                }
            }
            _ => {}
        }
        if let BlockSpec::Parallel { branches } = block {
            if branches.len() < 2 {
                return Err(ConfigError::new(
                    format!("/blocks/{i}/branches"),
                    "parallel requires >=2 branches",
                ));
            }
            for (bi, branch) in branches.iter().enumerate() {
                for (bj, inner) in branch.iter().enumerate() {
                    if !BRANCH_KINDS.contains(&inner.kind()) {
                        return Err(ConfigError::new(
                            format!("/blocks/{i}/branches/{bi}/{bj}"),
                            format!(
                                "block kind {:?} not allowed inside parallel branches",
                                inner.kind()
                            ),
                        ));
                    }
                }
            }
        }
    }
    if let (Some(lift), Some(lower)) = (last_lift, first_lower) {
        if lower < lift {
            return Err(ConfigError::new(
                format!("/blocks/{lower}"),
                "lower blocks must come after all lift blocks",
            ));
        }
    }
    Ok(())
}

// Serialization mirrors the input schema so parse -> serialize -> parse is
// the identity on configs.
impl Serialize for BlockSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("kind", self.kind())?;
        match self {
            BlockSpec::AttachGraph | BlockSpec::ZipSplit => {}
            BlockSpec::GtfsPreprocess { filters } => {
                let entries: Vec<serde_json::Value> = filters
                    .iter()
                    .map(|f| serde_json::json!({ "file": f.file, "column": f.column }))
                    .collect();
                map.serialize_entry("filters", &entries)?;
            }
            BlockSpec::Lift { mapping } => map.serialize_entry("mapping", mapping)?,
            BlockSpec::DataEnrich { sources } => map.serialize_entry("sources", sources)?,
            BlockSpec::InferEnrich { ontologies } => {
                map.serialize_entry("ontologies", ontologies)?
            }
            BlockSpec::Lower {
                template,
                output,
                minify,
            } => {
                map.serialize_entry("template", template)?;
                map.serialize_entry("output", output)?;
                map.serialize_entry("minify", minify)?;
            }
            BlockSpec::DumpGraph { path } => map.serialize_entry("path", path)?,
            BlockSpec::WriteOutput { from, path } => {
                map.serialize_entry("from", from)?;
                map.serialize_entry("path", path)?;
            }
            BlockSpec::Parallel { branches } => map.serialize_entry("branches", branches)?,
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transit::assets;

    #[test]
    fn bundled_madrid_has_seven_blocks() {
        let config = parse_pipeline_config(assets::MADRID_PIPELINE).unwrap();
        assert_eq!(config.blocks.len(), 7);
        assert_eq!(config.store.batch_size, 1000);
        assert_eq!(config.store.writers, 2);
    }

    #[test]
    fn bundled_milano_and_genova_parse() {
        parse_pipeline_config(assets::MILANO_PIPELINE).unwrap();
        parse_pipeline_config(assets::GENOVA_PIPELINE).unwrap();
    }

    #[test]
    fn attach_graph_must_be_first() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [ { "kind": "lift", "mapping": "m.cml" } ] }"#,
        )
        .unwrap_err();
        assert!(err.message.contains("attach_graph must be first"), "{err}");
    }

    #[test]
    fn parallel_requires_two_branches() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [
                { "kind": "attach_graph" },
                { "kind": "parallel", "branches": [ [ { "kind": "lift", "mapping": "m.cml" } ] ] }
            ] }"#,
        )
        .unwrap_err();
        assert!(err.message.contains(">=2 branches"), "{err}");
        assert_eq!(err.path, "/blocks/1/branches");
    }

    #[test]
    fn unknown_kind_is_path_qualified() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [ { "kind": "attach_graph" }, { "kind": "frobnicate" } ] }"#,
        )
        .unwrap_err();
        assert_eq!(err.path, "/blocks/1/kind");
    }

    #[test]
    fn unknown_param_rejected() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [ { "kind": "attach_graph", "zap": 1 } ] }"#,
        )
        .unwrap_err();
        assert!(err.path.ends_with("/zap"), "{err}");
    }

    #[test]
    fn lower_before_lift_rejected() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [
                { "kind": "attach_graph" },
                { "kind": "lower", "template": "t", "output": "o" },
                { "kind": "lift", "mapping": "m.cml" }
            ] }"#,
        )
        .unwrap_err();
        assert!(err.message.contains("after all lift"), "{err}");
    }

    #[test]
    fn branch_kind_restriction() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "blocks": [
                { "kind": "attach_graph" },
                { "kind": "parallel", "branches": [
                    [ { "kind": "lift", "mapping": "m.cml" } ],
                    [ { "kind": "dump_graph", "path": "g.nt" } ]
                ] }
            ] }"#,
        )
        .unwrap_err();
        assert!(err.message.contains("not allowed inside parallel"), "{err}");
        assert_eq!(err.path, "/blocks/1/branches/1/0");
    }

    #[test]
    fn config_round_trip() {
        for text in [
            assets::MADRID_PIPELINE,
            assets::MILANO_PIPELINE,
            assets::GENOVA_PIPELINE,
        ] {
            let config = parse_pipeline_config(text).unwrap();
            let serialized = serde_json::to_string_pretty(&config).unwrap();
            let reparsed = parse_pipeline_config(&serialized).unwrap();
            assert_eq!(config, reparsed);
        }
    }

    #[test]
    fn store_bounds_checked() {
        let err = parse_pipeline_config(
            r#"{ "name": "x", "store": { "batchSize": 0 }, "blocks": [ { "kind": "attach_graph" } ] }"#,
        )
        .unwrap_err();
        assert_eq!(err.path, "/store/batchSize");
    }
}
