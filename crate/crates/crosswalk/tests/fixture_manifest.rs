//! Independent oracle for the bundled fixture: the expected triple set is
//! enumerated here by hand from the raw CSV records, then compared against
//! the lifted graph and the committed manifest. Nothing below goes through
//! the mapping engine.

use std::collections::BTreeSet;

use crosswalk::lift::InputStreamSet;
use crosswalk::pipeline::zip_split;
use crosswalk::rdf::{write_ntriples, BatchedWriterConfig, Graph};
use crosswalk::transit::assets;

const OT: &str = "http://example.org/transit#";
const R: &str = "http://example.org/transit/";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

fn records(set: &InputStreamSet, file: &str) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_reader(set.get(file).unwrap());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

/// GTFS time normalization, reimplemented from the definition.
fn norm_time(t: &str) -> (String, u32) {
    let parts: Vec<u32> = t.split(':').map(|p| p.parse().unwrap()).collect();
    (
        format!("{:02}:{:02}:{:02}", parts[0] % 24, parts[1], parts[2]),
        parts[0] / 24,
    )
}

fn expected_fixture_triples() -> BTreeSet<String> {
    let set: InputStreamSet = zip_split(assets::MINI_GTFS_ZIP)
        .unwrap()
        .into_iter()
        .collect();
    let mut out: BTreeSet<String> = BTreeSet::new();
    let mut add = |s: &str, p: &str, o: String| {
        out.insert(format!("<{s}> <{p}> {o} ."));
    };
    let iri = |v: String| format!("<{v}>");
    let lit = |v: &str| format!("{v:?}");
    let typed = |v: &str, dt: &str| format!("{v:?}^^<{XSD}{dt}>");

    for a in records(&set, "agency.txt") {
        let s = format!("{R}operator/{}", a[0]);
        add(&s, RDF_TYPE, iri(format!("{OT}Operator")));
        add(&s, &format!("{OT}localId"), lit(&a[0]));
        add(&s, &format!("{OT}name"), lit(&a[1]));
    }
    for r in records(&set, "routes.txt") {
        let s = format!("{R}line/{}", r[0]);
        add(&s, RDF_TYPE, iri(format!("{OT}Line")));
        add(&s, &format!("{OT}localId"), lit(&r[0]));
        if !r[3].is_empty() {
            add(&s, &format!("{OT}name"), lit(&r[3]));
        }
        add(&s, &format!("{OT}publicCode"), lit(&r[2]));
        add(&s, &format!("{OT}operatedBy"), iri(format!("{R}operator/{}", r[1])));
        let mode = match r[4].as_str() {
            "3" => Some("bus"),
            "1" => Some("metro"),
            _ => None,
        };
        if let Some(mode) = mode {
            add(&s, &format!("{OT}transportMode"), lit(mode));
        }
    }
    for st in records(&set, "stops.txt") {
        let s = format!("{R}stop/{}", st[0]);
        add(&s, RDF_TYPE, iri(format!("{OT}ScheduledStopPoint")));
        add(&s, &format!("{OT}localId"), lit(&st[0]));
        add(&s, &format!("{OT}name"), lit(&st[1]));
        add(&s, &format!("{OT}latitude"), typed(&st[2], "decimal"));
        add(&s, &format!("{OT}longitude"), typed(&st[3], "decimal"));
    }
    for c in records(&set, "calendar.txt") {
        let s = format!("{R}daytype/{}", c[0]);
        let date = format!("{}-{}-{}", &c[8][..4], &c[8][4..6], &c[8][6..8]);
        add(&s, RDF_TYPE, iri(format!("{OT}DayType")));
        add(&s, &format!("{OT}localId"), lit(&c[0]));
        add(&s, &format!("{OT}validFrom"), typed(&date, "date"));
    }
    for t in records(&set, "trips.txt") {
        let s = format!("{R}journey/{}", t[2]);
        add(&s, RDF_TYPE, iri(format!("{OT}ServiceJourney")));
        add(&s, &format!("{OT}localId"), lit(&t[2]));
        add(&s, &format!("{OT}onLine"), iri(format!("{R}line/{}", t[0])));
        add(&s, &format!("{OT}onDayType"), iri(format!("{R}daytype/{}", t[1])));
    }
    for st in records(&set, "stop_times.txt") {
        let s = format!("{R}passingtime/{}/{}", st[0], st[4]);
        let (arr, _) = norm_time(&st[1]);
        let (dep, off) = norm_time(&st[2]);
        add(&s, RDF_TYPE, iri(format!("{OT}PassingTime")));
        add(&s, &format!("{OT}onJourney"), iri(format!("{R}journey/{}", st[0])));
        add(&s, &format!("{OT}atStop"), iri(format!("{R}stop/{}", st[3])));
        add(&s, &format!("{OT}arrival"), typed(&arr, "time"));
        add(&s, &format!("{OT}departure"), typed(&dep, "time"));
        add(&s, &format!("{OT}dayOffset"), typed(&off.to_string(), "integer"));
        add(&s, &format!("{OT}order"), typed(&st[4], "integer"));
    }
    out
}

#[test]
fn lifted_fixture_graph_equals_enumerated_oracle() {
    let expected = expected_fixture_triples();

    let doc = crosswalk::mapping::parse_mapping(assets::GTFS_MAPPING).unwrap();
    let set: InputStreamSet = zip_split(assets::MINI_GTFS_ZIP)
        .unwrap()
        .into_iter()
        .collect();
    let graph = Graph::new_ref();
    crosswalk::lift::execute_mapping_doc(
        &doc,
        &set,
        graph.clone(),
        BatchedWriterConfig::default(),
    )
    .unwrap();
    let actual: BTreeSet<String> = write_ntriples(&graph.read().unwrap())
        .lines()
        .map(str::to_string)
        .collect();

    let missing: Vec<&String> = expected.difference(&actual).collect();
    let surplus: Vec<&String> = actual.difference(&expected).collect();
    assert!(
        missing.is_empty() && surplus.is_empty(),
        "missing: {missing:#?}\nsurplus: {surplus:#?}"
    );
}

#[test]
fn manifest_counts_match_oracle() {
    let manifest: serde_json::Value = serde_json::from_str(assets::FIXTURE_MANIFEST).unwrap();
    assert_eq!(
        expected_fixture_triples().len() as u64,
        manifest["numTriples"].as_u64().unwrap(),
        "committed manifest drifted from the fixture"
    );

    // Row counts straight from the CSVs.
    let set: InputStreamSet = zip_split(assets::MINI_GTFS_ZIP)
        .unwrap()
        .into_iter()
        .collect();
    let total: usize = ["agency.txt", "stops.txt", "routes.txt", "trips.txt", "stop_times.txt", "calendar.txt"]
        .iter()
        .map(|f| records(&set, f).len())
        .sum();
    assert_eq!(total as u64, manifest["gtfsTotalRows"].as_u64().unwrap());

    // Element counts follow the row counts 1:1 for the conserved kinds.
    let elements = manifest["elements"].as_object().unwrap();
    assert_eq!(
        elements["ScheduledStopPoint"].as_u64().unwrap() as usize,
        records(&set, "stops.txt").len()
    );
    assert_eq!(
        elements["ServiceJourney"].as_u64().unwrap() as usize,
        records(&set, "trips.txt").len()
    );
    assert_eq!(
        elements["TimetabledPassingTime"].as_u64().unwrap() as usize,
        records(&set, "stop_times.txt").len()
    );
}
