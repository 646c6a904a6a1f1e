//! Statistics emission in the conversion-statistics table shape:
//! total rows, lifting/lowering seconds, total time as m:ss, triple count,
//! output megabytes.

use std::path::Path;

use crosswalk::pipeline::StatsReport;
use serde_json::json;

pub fn table_stats_json(report: &StatsReport) -> serde_json::Value {
    json!({
        "gtfsTotalRows": report.gtfs_total_rows,
        "liftingTimeS": round_seconds(report.lifting_time_ms),
        "loweringTimeS": round_seconds(report.lowering_time_ms),
        "conversionTime": minutes_seconds(report.conversion_time_ms),
        "numTriples": report.num_triples,
        "outputSizeMB": megabytes(report.output_size_bytes),
    })
}

/// Write the stats record as JSON.
pub fn emit_stats(report: &StatsReport, path: &Path) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(&table_stats_json(report)).expect("valid JSON");
    text.push('\n');
    std::fs::write(path, text)
}

fn round_seconds(ms: u64) -> u64 {
    (ms + 500) / 1000
}

fn minutes_seconds(ms: u64) -> String {
    let total = round_seconds(ms);
    format!("{}:{:02}", total / 60, total % 60)
}

fn megabytes(bytes: u64) -> f64 {
    (bytes as f64 / 1_000_000.0 * 10.0).round() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_record_renders_like_the_table() {
        let report = StatsReport {
            gtfs_total_rows: 168_759,
            lifting_time_ms: 121_000,
            lowering_time_ms: 98_000,
            conversion_time_ms: 219_000,
            num_triples: 1_692_802,
            output_size_bytes: 182_300_000,
        };
        let value = table_stats_json(&report);
        assert_eq!(value["gtfsTotalRows"], 168_759);
        assert_eq!(value["liftingTimeS"], 121);
        assert_eq!(value["loweringTimeS"], 98);
        assert_eq!(value["conversionTime"], "3:39");
        assert_eq!(value["numTriples"], 1_692_802);
        assert_eq!(value["outputSizeMB"], 182.3);
    }

    #[test]
    fn zero_run_renders_zeros() {
        let value = table_stats_json(&StatsReport::default());
        assert_eq!(value["conversionTime"], "0:00");
        assert_eq!(value["liftingTimeS"], 0);
        assert_eq!(value["outputSizeMB"], 0.0);
    }

    #[test]
    fn long_runs_roll_into_minutes() {
        let report = StatsReport {
            conversion_time_ms: 3_520_000,
            ..Default::default()
        };
        assert_eq!(table_stats_json(&report)["conversionTime"], "58:40");
    }
}
