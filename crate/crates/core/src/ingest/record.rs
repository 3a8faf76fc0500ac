//! NDJSON media records: one geo-located, time-stamped, tagged record per
//! line.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::normalize_term;

use super::IngestError;

/// One photo-like record. Tags are normalized and deduplicated; coordinates
/// are WGS84 degrees; the timestamp is UTC seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaRecord {
    pub id: String,
    pub user_id: String,
    pub timestamp: i64,
    pub lat: f64,
    pub lon: f64,
    pub tags: BTreeSet<String>,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    user_id: String,
    timestamp: i64,
    lat: f64,
    lon: f64,
    tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecords {
    pub records: Vec<MediaRecord>,
    /// Malformed lines skipped during the load.
    pub skipped: usize,
}

/// Timestamps must stay inside the range month bucketing can handle.
/// Anything outside is treated as malformed.
fn timestamp_in_range(ts: i64) -> bool {
    chrono::DateTime::from_timestamp(ts, 0).is_some()
}

fn validate(raw: RawRecord) -> Option<MediaRecord> {
    if !(-90.0..=90.0).contains(&raw.lat) || !(-180.0..=180.0).contains(&raw.lon) {
        return None;
    }
    if raw.lat.is_nan() || raw.lon.is_nan() || !timestamp_in_range(raw.timestamp) {
        return None;
    }
    let tags: BTreeSet<String> = raw
        .tags
        .iter()
        .map(|t| normalize_term(t))
        .filter(|t| !t.is_empty())
        .collect();
    Some(MediaRecord {
        id: raw.id,
        user_id: raw.user_id,
        timestamp: raw.timestamp,
        lat: raw.lat,
        lon: raw.lon,
        tags,
    })
}

/// Loads newline-delimited JSON records. Malformed lines (bad JSON, missing
/// fields, out-of-range coordinates or timestamps) are skipped and counted;
/// blank lines are ignored.
pub fn load_records(path: &Path) -> Result<LoadedRecords, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for line in reader.lines() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawRecord>(&line) {
            Ok(raw) => match validate(raw) {
                Some(record) => records.push(record),
                None => skipped += 1,
            },
            Err(_) => skipped += 1,
        }
    }
    Ok(LoadedRecords { records, skipped })
}
