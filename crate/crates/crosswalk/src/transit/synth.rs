//! Deterministic synthetic GTFS feeds for scaling experiments.
//!
//! Counts are linear in `scale` by construction: 2 agencies, 10·scale stops,
//! 2·scale routes, 20·scale trips, 15 stop_times per trip (300·scale), and
//! 2 calendar services. Some trips start late enough that their stop times
//! cross 24:00, exercising the day-offset handling in lifting.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

/// Build a zipped feed. Byte-identical for identical (scale, seed).
pub fn generate_synthetic_gtfs(scale: u32, seed: u64) -> Vec<u8> {
    assert!(scale >= 1, "scale must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let stops = 10 * scale as usize;
    let routes = 2 * scale as usize;
    let trips = 20 * scale as usize;
    let stops_per_trip = 15usize;

    let mut agency = String::from("agency_id,agency_name,agency_url,agency_timezone\n");
    agency.push_str("A1,Synthetic Transit One,https://example.org/a1,Europe/Rome\n");
    agency.push_str("A2,Synthetic Transit Two,https://example.org/a2,Europe/Rome\n");

    let mut stops_csv = String::from("stop_id,stop_name,stop_lat,stop_lon\n");
    for i in 0..stops {
        let lat = 45.0 + (i as f64) * 1e-4 + rng.random_range(-0.5e-4..0.5e-4);
        let lon = 9.0 + (i as f64) * 1.3e-4 + rng.random_range(-0.5e-4..0.5e-4);
        stops_csv.push_str(&format!("S{i:05},Stop {i},{lat:.6},{lon:.6}\n"));
    }

    let mut routes_csv =
        String::from("route_id,agency_id,route_short_name,route_long_name,route_type\n");
    for i in 0..routes {
        let agency_id = if i % 2 == 0 { "A1" } else { "A2" };
        let route_type = if i % 2 == 0 { 3 } else { 1 };
        routes_csv.push_str(&format!(
            "R{i:05},{agency_id},L{i},Synthetic Line {i},{route_type}\n"
        ));
    }

    let mut trips_csv = String::from("route_id,service_id,trip_id\n");
    let mut stop_times_csv =
        String::from("trip_id,arrival_time,departure_time,stop_id,stop_sequence\n");
    for t in 0..trips {
        let route = t % routes;
        let service = if t % 2 == 0 { "WK" } else { "WE" };
        trips_csv.push_str(&format!("R{route:05},{service},T{t:06}\n"));

        // Every tenth trip is a late-night run that crosses 24:00; the rest
        // start between 05:00 and 23:00.
        let start_min = if t % 10 == 9 {
            23 * 60 + 30
        } else {
            300 + (t * 37) % 1080
        };
        let mut clock = (start_min * 60) as u64;
        for k in 0..stops_per_trip {
            let stop = (t * 7 + k * 3) % stops;
            let arrival = clock;
            let departure = arrival + 30 + rng.random_range(0..30);
            stop_times_csv.push_str(&format!(
                "T{t:06},{},{},S{stop:05},{}\n",
                fmt_time(arrival),
                fmt_time(departure),
                k + 1
            ));
            clock = departure + 60 + rng.random_range(0..120);
        }
    }

    let calendar = "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n\
                    WK,1,1,1,1,1,0,0,20200101,20201231\n\
                    WE,0,0,0,0,0,1,1,20200101,20201231\n";

    let files = [
        ("agency.txt", agency.as_str()),
        ("calendar.txt", calendar),
        ("routes.txt", routes_csv.as_str()),
        ("stop_times.txt", stop_times_csv.as_str()),
        ("stops.txt", stops_csv.as_str()),
        ("trips.txt", trips_csv.as_str()),
    ];

    let mut writer = ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(zip::DateTime::default());
    for (name, content) in files {
        writer.start_file(name, options).expect("in-memory zip");
        writer
            .write_all(content.as_bytes())
            .expect("in-memory zip");
    }
    writer.finish().expect("in-memory zip").into_inner()
}

/// GTFS clock: hours keep counting past 23 on service days that run past
/// midnight.
fn fmt_time(total_seconds: u64) -> String {
    format!(
        "{:02}:{:02}:{:02}",
        total_seconds / 3600,
        (total_seconds / 60) % 60,
        total_seconds % 60
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::InputStreamSet;
    use crate::transit::read_gtfs_feed;

    fn streams(zip: &[u8]) -> InputStreamSet {
        crate::pipeline::zip_split(zip).unwrap().into_iter().collect()
    }

    #[test]
    fn scale_one_counts() {
        let feed = read_gtfs_feed(&streams(&generate_synthetic_gtfs(1, 7))).unwrap();
        assert_eq!(feed.rows("agency.txt"), 2);
        assert_eq!(feed.rows("stops.txt"), 10);
        assert_eq!(feed.rows("routes.txt"), 2);
        assert_eq!(feed.rows("trips.txt"), 20);
        assert_eq!(feed.rows("stop_times.txt"), 300);
        assert_eq!(feed.rows("calendar.txt"), 2);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        assert_eq!(generate_synthetic_gtfs(10, 42), generate_synthetic_gtfs(10, 42));
        assert_ne!(generate_synthetic_gtfs(10, 42), generate_synthetic_gtfs(10, 43));
    }

    #[test]
    fn some_trips_cross_midnight() {
        let zip = generate_synthetic_gtfs(1, 1);
        let set = streams(&zip);
        let text = String::from_utf8(set.get("stop_times.txt").unwrap().to_vec()).unwrap();
        assert!(
            text.lines().any(|l| {
                l.split(',')
                    .nth(2)
                    .and_then(|t| t.split(':').next())
                    .and_then(|h| h.parse::<u32>().ok())
                    .is_some_and(|h| h >= 24)
            }),
            "expected at least one departure past 24:00"
        );
    }

    #[test]
    fn times_strictly_increasing_within_trip() {
        let zip = generate_synthetic_gtfs(1, 5);
        let set = streams(&zip);
        let text = String::from_utf8(set.get("stop_times.txt").unwrap().to_vec()).unwrap();
        let mut last: Option<(String, u64)> = None;
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let secs = |t: &str| -> u64 {
                let p: Vec<u64> = t.split(':').map(|x| x.parse().unwrap()).collect();
                p[0] * 3600 + p[1] * 60 + p[2]
            };
            let (arr, dep) = (secs(cols[1]), secs(cols[2]));
            assert!(dep > arr);
            if let Some((trip, prev_dep)) = &last {
                if trip == cols[0] {
                    assert!(arr > *prev_dep, "{line}");
                }
            }
            last = Some((cols[0].to_string(), dep));
        }
    }
}
