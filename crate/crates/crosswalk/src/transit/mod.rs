//! Transport-domain content: GTFS feed checks, the bundled mini-Transmodel
//! vocabulary, NeTEx-subset validation, and the synthetic feed generator.

pub mod assets;
mod netex;
mod synth;
pub mod xml;

pub use netex::{validate_netex_subset, NetexSubsetReport, Violation};
pub use synth::generate_synthetic_gtfs;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lift::InputStreamSet;

/// Namespace of the bundled reference vocabulary (prefix `ot:`). A
/// deliberately small stand-in for a full transport ontology: nine classes
/// and the properties the bundled mappings and templates use.
pub mod vocab {
    pub const NS: &str = "http://example.org/transit#";
    /// Base for minted resource IRIs (`…/stop/S1`, `…/journey/T1`, …).
    pub const RESOURCE_BASE: &str = "http://example.org/transit/";

    pub const CLASSES: &[&str] = &[
        "Organisation",
        "Operator",
        "Line",
        "Route",
        "ScheduledStopPoint",
        "ServiceJourney",
        "PassingTime",
        "DayType",
        "Facility",
    ];

    pub const PROPERTIES: &[&str] = &[
        "name",
        "publicCode",
        "operatedBy",
        "onLine",
        "atStop",
        "arrival",
        "departure",
        "dayOffset",
        "order",
        "latitude",
        "longitude",
        "localId",
        "onJourney",
        "onDayType",
        "transportMode",
        "validFrom",
    ];

    pub fn class(name: &str) -> String {
        format!("{NS}{name}")
    }

    pub fn property(name: &str) -> String {
        format!("{NS}{name}")
    }
}

pub const REQUIRED_FILES: &[&str] = &[
    "agency.txt",
    "stops.txt",
    "routes.txt",
    "trips.txt",
    "stop_times.txt",
];

/// Header columns each table must declare. Values may still be empty on a
/// given row; lifting skips those.
pub fn required_columns(file: &str) -> &'static [&'static str] {
    match file {
        "agency.txt" => &["agency_id", "agency_name"],
        "stops.txt" => &["stop_id", "stop_name", "stop_lat", "stop_lon"],
        "routes.txt" => &[
            "route_id",
            "agency_id",
            "route_short_name",
            "route_long_name",
            "route_type",
        ],
        "trips.txt" => &["route_id", "service_id", "trip_id"],
        "stop_times.txt" => &[
            "trip_id",
            "arrival_time",
            "departure_time",
            "stop_id",
            "stop_sequence",
        ],
        "calendar.txt" => &[
            "service_id",
            "monday",
            "tuesday",
            "wednesday",
            "thursday",
            "friday",
            "saturday",
            "sunday",
            "start_date",
            "end_date",
        ],
        _ => &[],
    }
}

#[derive(Debug, Error)]
pub enum GtfsError {
    #[error("invalid GTFS feed, missing: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{file}: {message}")]
    BadTable { file: String, message: String },
}

/// A validated GTFS feed: the known `.txt` tables plus their record counts.
#[derive(Clone, Debug)]
pub struct GtfsFeed {
    tables: BTreeMap<String, Vec<u8>>,
    row_counts: BTreeMap<String, usize>,
}

impl GtfsFeed {
    pub fn table(&self, name: &str) -> Option<&[u8]> {
        self.tables.get(name).map(Vec::as_slice)
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn rows(&self, name: &str) -> usize {
        self.row_counts.get(name).copied().unwrap_or(0)
    }

    /// Total records across all tables (the Table-1 "GTFS total no. rows").
    pub fn total_rows(&self) -> usize {
        self.row_counts.values().sum()
    }

    pub fn stream_set(&self) -> InputStreamSet {
        self.tables
            .iter()
            .map(|(name, bytes)| (name.clone(), bytes.clone()))
            .collect()
    }
}

/// Check required files and required columns; every missing item is listed
/// in one error.
pub fn read_gtfs_feed(streams: &InputStreamSet) -> Result<GtfsFeed, GtfsError> {
    let mut missing = Vec::new();
    for file in REQUIRED_FILES {
        if !streams.contains(file) {
            missing.push((*file).to_string());
        }
    }

    let mut tables = BTreeMap::new();
    let mut row_counts = BTreeMap::new();
    for name in streams.names() {
        if !name.ends_with(".txt") {
            continue;
        }
        let bytes = streams.get(name).expect("name comes from the set");
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| GtfsError::BadTable {
                file: name.to_string(),
                message: e.to_string(),
            })?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        for column in required_columns(name) {
            if !headers.iter().any(|h| h == column) {
                missing.push(format!("{name}:{column}"));
            }
        }
        let mut count = 0usize;
        for record in reader.records() {
            record.map_err(|e| GtfsError::BadTable {
                file: name.to_string(),
                message: e.to_string(),
            })?;
            count += 1;
        }
        tables.insert(name.to_string(), bytes.to_vec());
        row_counts.insert(name.to_string(), count);
    }

    if !missing.is_empty() {
        missing.sort();
        return Err(GtfsError::Missing(missing));
    }
    Ok(GtfsFeed { tables, row_counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_streams() -> InputStreamSet {
        let zip = assets::MINI_GTFS_ZIP;
        crate::pipeline::zip_split(zip).unwrap().into_iter().collect()
    }

    #[test]
    fn fixture_feed_is_valid() {
        let feed = read_gtfs_feed(&fixture_streams()).unwrap();
        assert_eq!(feed.table_names().count(), 6);
        assert_eq!(feed.total_rows(), 20);
        assert_eq!(feed.rows("stop_times.txt"), 8);
    }

    #[test]
    fn missing_file_is_fatal_and_named() {
        let mut streams = InputStreamSet::new();
        for name in ["agency.txt", "stops.txt", "routes.txt", "trips.txt"] {
            let feed = fixture_streams();
            streams.insert(name, feed.get(name).unwrap().to_vec());
        }
        let err = read_gtfs_feed(&streams).unwrap_err();
        assert!(err.to_string().contains("stop_times.txt"), "{err}");
    }

    #[test]
    fn missing_column_is_fatal() {
        let mut streams = fixture_streams();
        streams.insert("stops.txt", b"id,name\n1,x\n".to_vec());
        let err = read_gtfs_feed(&streams).unwrap_err();
        assert!(err.to_string().contains("stops.txt:stop_id"), "{err}");
    }
}
