//! Input ingestion: media records (NDJSON), neighborhood polygons
//! (GeoJSON), census tables (CSV), point-to-neighborhood assignment, and the
//! local-user / cultural record filters.

mod census;
mod filter;
mod geo;
mod record;

pub use census::{load_census, CensusMetric, CensusRow, CensusTable};
pub use filter::{cultural_filter, local_user_filter, CulturalRecord, FilterOutcome, LocalMode};
pub use geo::{assign_location, assign_records, load_neighborhoods, Neighborhood};
pub use record::{load_records, LoadedRecords, MediaRecord};

use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("integrity violation: {message}")]
    Integrity { message: String },
    #[error("invalid geometry: {message}")]
    Geometry { message: String },
}
