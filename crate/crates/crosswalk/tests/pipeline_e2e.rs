//! Whole-pipeline runs over the bundled configs and fixtures.

use std::collections::BTreeMap;

use crosswalk::pipeline::{parse_pipeline_config, run_pipeline};
use crosswalk::rdf::{parse_ntriples, Graph};
use crosswalk::transit::{assets, validate_netex_subset, xml};

fn materialized_assets() -> tempfile::TempDir {
    let dir = tempfile::tempdir().expect("temp dir");
    assets::write_assets_to(dir.path()).expect("write assets");
    dir
}

fn fixture_inputs() -> BTreeMap<String, Vec<u8>> {
    let mut inputs = BTreeMap::new();
    inputs.insert("mini-gtfs.zip".to_string(), assets::MINI_GTFS_ZIP.to_vec());
    inputs
}

#[test]
fn madrid_run_produces_valid_netex_and_matching_stats() {
    let assets_dir = materialized_assets();
    let out = tempfile::tempdir().unwrap();
    let config = parse_pipeline_config(assets::MADRID_PIPELINE).unwrap();
    let (outputs, stats) = run_pipeline(
        &config,
        &assets_dir.path().join("pipelines"),
        fixture_inputs(),
        out.path(),
    )
    .unwrap();

    assert!(outputs.warnings.is_empty(), "{:?}", outputs.warnings);
    assert!(outputs.files.contains_key("netex.xml"));
    assert!(outputs.files.contains_key("graph.nt"));

    let netex = std::fs::read(out.path().join("netex.xml")).unwrap();
    let report = validate_netex_subset(&netex);
    assert!(report.is_valid(), "{:?}", report.violations);

    let manifest: serde_json::Value = serde_json::from_str(assets::FIXTURE_MANIFEST).unwrap();
    assert_eq!(stats.gtfs_total_rows as u64, manifest["gtfsTotalRows"].as_u64().unwrap());
    assert_eq!(stats.num_triples as u64, manifest["numTriples"].as_u64().unwrap());

    let root = xml::parse_xml(&netex).unwrap();
    for (name, expected) in manifest["elements"].as_object().unwrap() {
        assert_eq!(
            root.count_descendants(name) as u64,
            expected.as_u64().unwrap(),
            "element count mismatch for {name}"
        );
    }

    // Stats coherence: the dumped graph has exactly numTriples lines.
    let dump = std::fs::read_to_string(out.path().join("graph.nt")).unwrap();
    assert_eq!(dump.lines().count(), stats.num_triples);
    assert_eq!(
        stats.output_size_bytes,
        std::fs::metadata(out.path().join("netex.xml")).unwrap().len()
    );
}

#[test]
fn milano_run_merges_parallel_sources_and_enrichment() {
    let assets_dir = materialized_assets();
    let out = tempfile::tempdir().unwrap();
    let config = parse_pipeline_config(assets::MILANO_PIPELINE).unwrap();
    let mut inputs = fixture_inputs();
    inputs.insert(
        "facilities.csv".to_string(),
        assets::FACILITIES_CSV.as_bytes().to_vec(),
    );
    let (outputs, stats) = run_pipeline(
        &config,
        &assets_dir.path().join("pipelines"),
        inputs,
        out.path(),
    )
    .unwrap();
    assert!(outputs.warnings.is_empty(), "{:?}", outputs.warnings);

    let netex = std::fs::read(out.path().join("netex.xml")).unwrap();
    let report = validate_netex_subset(&netex);
    assert!(report.is_valid(), "{:?}", report.violations);

    let root = xml::parse_xml(&netex).unwrap();
    assert_eq!(root.count_descendants("Facility"), 3);
    assert_eq!(root.count_descendants("Operator"), 2, "lifted + enriched");
    assert_eq!(root.count_descendants("ServiceJourney"), 3);

    // facilities.csv has 3 records on top of the feed's 20.
    assert_eq!(stats.gtfs_total_rows, 23);

    // 108 (feed) + 15 (facilities) + 3 new enrichment triples.
    assert_eq!(stats.num_triples, 126);

    let names: Vec<String> = root
        .descendants("Facility")
        .iter()
        .map(|f| f.child_elements().next().unwrap().text())
        .collect();
    assert!(names.contains(&"Info Point".to_string()), "trimmed: {names:?}");
}

#[test]
fn milano_parallel_branches_match_sequential_union() {
    // Branch-order independence: the merged graph equals the union of the
    // two lifts run one after the other.
    let assets_dir = materialized_assets();
    let config = parse_pipeline_config(assets::MILANO_PIPELINE).unwrap();
    let mut inputs = fixture_inputs();
    inputs.insert(
        "facilities.csv".to_string(),
        assets::FACILITIES_CSV.as_bytes().to_vec(),
    );

    let mut dumps = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        run_pipeline(
            &config,
            &assets_dir.path().join("pipelines"),
            inputs.clone(),
            out.path(),
        )
        .unwrap();
        dumps.push(std::fs::read_to_string(out.path().join("graph.nt")).unwrap());
    }
    assert_eq!(dumps[0], dumps[1], "parallel scheduling must not matter");

    let mut sequential = Graph::new();
    let streams: crosswalk::lift::InputStreamSet = crosswalk::pipeline::zip_split(assets::MINI_GTFS_ZIP)
        .unwrap()
        .into_iter()
        .chain([(
            "facilities.csv".to_string(),
            assets::FACILITIES_CSV.as_bytes().to_vec(),
        )])
        .collect();
    for mapping in [assets::GTFS_MAPPING, assets::FACILITIES_MAPPING] {
        let doc = crosswalk::mapping::parse_mapping(mapping).unwrap();
        let graph = Graph::new_ref();
        crosswalk::lift::execute_mapping_doc(
            &doc,
            &streams,
            graph.clone(),
            crosswalk::rdf::BatchedWriterConfig::default(),
        )
        .unwrap();
        for t in graph.read().unwrap().iter() {
            sequential.insert(t);
        }
    }
    sequential.insert_all(parse_ntriples(assets::OPERATORS_EXTRA_NT).unwrap());
    assert_eq!(crosswalk::rdf::write_ntriples(&sequential), dumps[0]);
}

#[test]
fn genova_inference_changes_graph_but_not_netex() {
    let assets_dir = materialized_assets();
    let base = assets_dir.path().join("pipelines");

    let madrid_out = tempfile::tempdir().unwrap();
    let madrid = parse_pipeline_config(assets::MADRID_PIPELINE).unwrap();
    run_pipeline(&madrid, &base, fixture_inputs(), madrid_out.path()).unwrap();

    let genova_out = tempfile::tempdir().unwrap();
    let genova = parse_pipeline_config(assets::GENOVA_PIPELINE).unwrap();
    let (outputs, _) = run_pipeline(&genova, &base, fixture_inputs(), genova_out.path()).unwrap();
    assert!(outputs.warnings.is_empty(), "{:?}", outputs.warnings);

    let madrid_netex = std::fs::read(madrid_out.path().join("netex.xml")).unwrap();
    let genova_netex = std::fs::read(genova_out.path().join("netex.xml")).unwrap();
    assert_eq!(
        madrid_netex, genova_netex,
        "closure adds no new elements when types are already asserted"
    );

    let madrid_graph = std::fs::read_to_string(madrid_out.path().join("graph.nt")).unwrap();
    let genova_graph = std::fs::read_to_string(genova_out.path().join("graph.nt")).unwrap();
    assert!(genova_graph.lines().count() > madrid_graph.lines().count());
    // Every subject of operatedBy picked up the Organisation supertype.
    assert!(genova_graph.contains(
        "<http://example.org/transit/operator/A1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://example.org/transit#Organisation>"
    ));
    // The domain axiom types every operatedBy subject as a Line; the mapping
    // already asserted those, so the triple set gains nothing there.
    let mut g = Graph::new();
    g.insert_all(parse_ntriples(&genova_graph).unwrap());
    let mut madrid_set = Graph::new();
    madrid_set.insert_all(parse_ntriples(&madrid_graph).unwrap());
    for t in madrid_set.iter() {
        assert!(g.contains(&t), "inference must be monotone: {t:?}");
    }
}

#[test]
fn missing_mapping_file_aborts_with_path() {
    let assets_dir = materialized_assets();
    std::fs::remove_file(assets_dir.path().join("mappings/gtfs.cml")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let config = parse_pipeline_config(assets::MADRID_PIPELINE).unwrap();
    let err = run_pipeline(
        &config,
        &assets_dir.path().join("pipelines"),
        fixture_inputs(),
        out.path(),
    )
    .unwrap_err();
    let text = err.to_string();
    assert!(text.contains("gtfs.cml"), "{text}");
    assert!(text.contains("block 3"), "{text}");
    assert!(text.contains("lift"), "{text}");
}

#[test]
fn corrupt_zip_aborts_in_zip_split() {
    let assets_dir = materialized_assets();
    let out = tempfile::tempdir().unwrap();
    let config = parse_pipeline_config(assets::MADRID_PIPELINE).unwrap();
    let mut inputs = BTreeMap::new();
    inputs.insert("input.zip".to_string(), b"not a zip at all".to_vec());
    let err = run_pipeline(
        &config,
        &assets_dir.path().join("pipelines"),
        inputs,
        out.path(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("zip_split"), "{err}");
}

#[test]
fn dump_into_unwritable_path_fails() {
    // A regular file where a directory component should be; works even when
    // the test runs as root (permission bits would not).
    let assets_dir = materialized_assets();
    let out = tempfile::tempdir().unwrap();
    std::fs::write(out.path().join("obstacle"), b"file, not a dir").unwrap();

    let config = parse_pipeline_config(
        &assets::MADRID_PIPELINE.replace("graph.nt", "obstacle/graph.nt"),
    )
    .unwrap();
    let err = run_pipeline(
        &config,
        &assets_dir.path().join("pipelines"),
        fixture_inputs(),
        out.path(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("dump_graph"), "{err}");
}
