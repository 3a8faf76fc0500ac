//! Census table loading: per-location, per-year income, development index,
//! and house price. Any field may be absent for a (location, year) pair.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMetric {
    Income,
    Dev,
    HousePrice,
}

impl CensusMetric {
    pub fn name(self) -> &'static str {
        match self {
            CensusMetric::Income => "income",
            CensusMetric::Dev => "dev",
            CensusMetric::HousePrice => "house_price",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub location: String,
    pub year: u16,
    pub income: Option<f64>,
    pub dev: Option<f64>,
    pub house_price: Option<f64>,
}

impl CensusRow {
    pub fn metric(&self, metric: CensusMetric) -> Option<f64> {
        match metric {
            CensusMetric::Income => self.income,
            CensusMetric::Dev => self.dev,
            CensusMetric::HousePrice => self.house_price,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CensusTable {
    rows: BTreeMap<(String, u16), CensusRow>,
}

impl CensusTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, location: &str, year: u16) -> Option<&CensusRow> {
        self.rows.get(&(location.to_string(), year))
    }

    pub fn rows(&self) -> impl Iterator<Item = &CensusRow> {
        self.rows.values()
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        let mut seen = std::collections::BTreeSet::new();
        self.rows
            .values()
            .filter(move |r| seen.insert(r.location.clone()))
            .map(|r| r.location.as_str())
    }

    /// One metric for one year across locations, skipping absent values.
    pub fn metric_by_location(&self, metric: CensusMetric, year: u16) -> BTreeMap<String, f64> {
        self.rows
            .values()
            .filter(|r| r.year == year)
            .filter_map(|r| r.metric(metric).map(|v| (r.location.clone(), v)))
            .collect()
    }

    /// Per-location mean of a metric over an inclusive year range, using the
    /// years that actually carry a value. Locations with none are absent
    /// from the result.
    pub fn metric_mean_over_years(
        &self,
        metric: CensusMetric,
        from: u16,
        to: u16,
    ) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, (f64, u32)> = BTreeMap::new();
        for row in self.rows.values() {
            if row.year < from || row.year > to {
                continue;
            }
            if let Some(v) = row.metric(metric) {
                let entry = sums.entry(row.location.clone()).or_insert((0.0, 0));
                entry.0 += v;
                entry.1 += 1;
            }
        }
        sums.into_iter()
            .map(|(loc, (sum, n))| (loc, sum / n as f64))
            .collect()
    }
}

fn parse_optional(field: &str) -> Result<Option<f64>, String> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("{trimmed:?} is not a number: {e}"))
}

/// Loads a census CSV with header `location,year,income,dev,house_price`.
/// Blank numeric fields load as absent; duplicate (location, year) rows are
/// an integrity error.
pub fn load_census(path: &Path) -> Result<CensusTable, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Format {
            path: path.to_path_buf(),
            message: format!("missing header: {e}"),
        })?
        .clone();
    let expected = ["location", "year", "income", "dev", "house_price"];
    let mut positions = [0usize; 5];
    for (i, name) in expected.iter().enumerate() {
        positions[i] =
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| IngestError::Format {
                    path: path.to_path_buf(),
                    message: format!("missing required column {name:?}"),
                })?;
    }

    let mut table = CensusTable::default();
    for (i, result) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = result.map_err(|e| IngestError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let field = |idx: usize| record.get(positions[idx]).unwrap_or("");
        let location = field(0).to_string();
        if location.is_empty() {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line,
                message: "empty location".into(),
            });
        }
        let year: u16 = field(1).parse().map_err(|_| IngestError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("year {:?} is not an integer", field(1)),
        })?;
        if !(1000..=9999).contains(&year) {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("year {year} is not a 4-digit year"),
            });
        }
        let parse = |idx: usize| {
            parse_optional(field(idx)).map_err(|message| IngestError::Parse {
                path: path.to_path_buf(),
                line,
                message,
            })
        };
        let row = CensusRow {
            location: location.clone(),
            year,
            income: parse(2)?,
            dev: parse(3)?,
            house_price: parse(4)?,
        };
        if table.rows.insert((location.clone(), year), row).is_some() {
            return Err(IngestError::Integrity {
                message: format!("duplicate census row for ({location:?}, {year})"),
            });
        }
    }
    Ok(table)
}
