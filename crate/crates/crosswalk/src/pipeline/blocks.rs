//! Standalone block operations: zip splitting and GTFS preprocessing.

use std::collections::BTreeMap;
use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZipSplitError {
    #[error("corrupt zip archive: {0}")]
    Corrupt(String),
}

/// Explode a zip archive into named streams. Directory entries are skipped
/// and entry names are flattened to their base names.
pub fn zip_split(payload: &[u8]) -> Result<BTreeMap<String, Vec<u8>>, ZipSplitError> {
    let cursor = std::io::Cursor::new(payload);
    let mut archive =
        zip::ZipArchive::new(cursor).map_err(|e| ZipSplitError::Corrupt(e.to_string()))?;
    let mut out = BTreeMap::new();
    for i in 0..archive.len() {
        let mut entry = archive
            .by_index(i)
            .map_err(|e| ZipSplitError::Corrupt(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().to_string();
        let base = name.rsplit('/').next().unwrap_or(&name).to_string();
        if base.is_empty() {
            continue;
        }
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut bytes)
            .map_err(|e| ZipSplitError::Corrupt(e.to_string()))?;
        out.insert(base, bytes);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid UTF-8 in {0}")]
    InvalidUtf8(String),
    #[error("filter file {0:?} not present")]
    MissingFile(String),
    #[error("filter column {column:?} absent from {file} header")]
    MissingColumn { file: String, column: String },
    #[error("{file}: {message}")]
    BadCsv { file: String, message: String },
}

const UTF8_BOM: &[u8] = &[0xEF, 0xBB, 0xBF];

/// Encoding checks plus column-value splitting.
///
/// Every `.txt`/`.csv` payload gets its UTF-8 BOM stripped and its encoding
/// verified. For each `(file, column)` filter the file is split into one
/// derived stream per distinct column value, named `file#value`, each
/// retaining the header; the original stream is kept.
pub fn gtfs_preprocess(
    streams: &mut BTreeMap<String, Vec<u8>>,
    filters: &[(String, String)],
) -> Result<(), PreprocessError> {
    let names: Vec<String> = streams.keys().cloned().collect();
    for name in &names {
        if !(name.ends_with(".txt") || name.ends_with(".csv")) {
            continue;
        }
        let bytes = streams.get_mut(name).expect("name from the map");
        if bytes.starts_with(UTF8_BOM) {
            bytes.drain(..UTF8_BOM.len());
        }
        if std::str::from_utf8(bytes).is_err() {
            return Err(PreprocessError::InvalidUtf8(name.clone()));
        }
    }

    for (file, column) in filters {
        let bytes = streams
            .get(file)
            .ok_or_else(|| PreprocessError::MissingFile(file.clone()))?
            .clone();
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
        let headers = reader
            .headers()
            .map_err(|e| PreprocessError::BadCsv {
                file: file.clone(),
                message: e.to_string(),
            })?
            .clone();
        let column_idx = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| PreprocessError::MissingColumn {
                file: file.clone(),
                column: column.clone(),
            })?;

        let mut groups: BTreeMap<String, Vec<csv::StringRecord>> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| PreprocessError::BadCsv {
                file: file.clone(),
                message: e.to_string(),
            })?;
            let value = record.get(column_idx).unwrap_or("").to_string();
            groups.entry(value).or_default().push(record);
        }

        for (value, records) in groups {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(&headers).expect("in-memory CSV");
            for record in records {
                writer.write_record(&record).expect("in-memory CSV");
            }
            let bytes = writer.into_inner().expect("in-memory CSV");
            streams.insert(format!("{file}#{value}"), bytes);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use zip::write::SimpleFileOptions;

    fn zip_of(entries: &[(&str, &[u8])]) -> Vec<u8> {
        let mut writer = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
        let options =
            SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
        for (name, bytes) in entries {
            if name.ends_with('/') {
                writer.add_directory(name.trim_end_matches('/'), options).unwrap();
            } else {
                writer.start_file(*name, options).unwrap();
                writer.write_all(bytes).unwrap();
            }
        }
        writer.finish().unwrap().into_inner()
    }

    #[test]
    fn splits_entries() {
        let zip = zip_of(&[("stops.txt", b"a"), ("routes.txt", b"b")]);
        let streams = zip_split(&zip).unwrap();
        assert_eq!(streams.len(), 2);
        assert_eq!(streams["stops.txt"], b"a");
    }

    #[test]
    fn flattens_directories() {
        let zip = zip_of(&[("dir/", b""), ("dir/stops.txt", b"x")]);
        let streams = zip_split(&zip).unwrap();
        assert_eq!(streams.len(), 1);
        assert_eq!(streams["stops.txt"], b"x");
    }

    #[test]
    fn truncated_zip_is_fatal() {
        let mut zip = zip_of(&[("stops.txt", b"abcdef")]);
        zip.truncate(zip.len() / 2);
        assert!(zip_split(&zip).is_err());
    }

    #[test]
    fn empty_archive_yields_no_streams() {
        let zip = zip_of(&[]);
        assert!(zip_split(&zip).unwrap().is_empty());
    }

    #[test]
    fn bom_stripped() {
        let mut streams = BTreeMap::new();
        let mut payload = vec![0xEF, 0xBB, 0xBF];
        payload.extend_from_slice(b"stop_id,stop_name\nS1,Alpha\n");
        streams.insert("stops.txt".to_string(), payload);
        gtfs_preprocess(&mut streams, &[]).unwrap();
        assert!(streams["stops.txt"].starts_with(b"stop_id"));
    }

    #[test]
    fn invalid_utf8_is_fatal_and_named() {
        let mut streams = BTreeMap::new();
        streams.insert("routes.txt".to_string(), vec![b'a', 0xFF, b'b']);
        let err = gtfs_preprocess(&mut streams, &[]).unwrap_err();
        assert_eq!(err.to_string(), "invalid UTF-8 in routes.txt");
    }

    #[test]
    fn splits_by_column_value() {
        let mut streams = BTreeMap::new();
        streams.insert(
            "routes.txt".to_string(),
            b"route_id,route_type\nR1,3\nR2,3\nR3,1\n".to_vec(),
        );
        gtfs_preprocess(
            &mut streams,
            &[("routes.txt".to_string(), "route_type".to_string())],
        )
        .unwrap();
        assert!(streams.contains_key("routes.txt"), "original retained");
        let three = String::from_utf8(streams["routes.txt#3"].clone()).unwrap();
        assert_eq!(three.lines().count(), 3, "header + 2 records");
        let one = String::from_utf8(streams["routes.txt#1"].clone()).unwrap();
        assert_eq!(one.lines().count(), 2);
    }

    #[test]
    fn filter_column_absent_is_fatal() {
        let mut streams = BTreeMap::new();
        streams.insert("routes.txt".to_string(), b"route_id\nR1\n".to_vec());
        let err = gtfs_preprocess(
            &mut streams,
            &[("routes.txt".to_string(), "route_type".to_string())],
        )
        .unwrap_err();
        assert!(err.to_string().contains("route_type"), "{err}");
    }
}
