//! Capital, specialization, diversity, and temporal metrics over
//! per-neighborhood tag statistics.
//!
//! All z-scores use population moments over the included locations, so every
//! emitted vector has mean 0 and population standard deviation 1. Category
//! fractions are ratios of integer counts; their per-location counts sum to
//! the cultural count exactly.

mod events;

pub use events::{detect_events, EventPeak};

use std::collections::BTreeMap;
use std::thread;

use chrono::Datelike;

use crate::ingest::{CensusMetric, CensusTable, MediaRecord};
use crate::taxonomy::{match_tags, Taxonomy, MACRO_CATEGORIES};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("need at least {needed} locations with defined values, found {got}")]
    TooFewLocations { needed: usize, got: usize },
    #[error("degenerate distribution: {context} has zero variance")]
    DegenerateDistribution { context: String },
    #[error("insufficient data: {context}: need {needed}, got {got}")]
    InsufficientData {
        context: String,
        needed: usize,
        got: usize,
    },
}

/// A UTC calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey {
    pub year: i32,
    pub month: u8,
}

impl MonthKey {
    /// Month of a UTC timestamp in seconds. Timestamps are validated at
    /// ingestion, so the conversion cannot fail there.
    pub fn from_unix(ts: i64) -> Option<MonthKey> {
        let dt = chrono::DateTime::from_timestamp(ts, 0)?;
        Some(MonthKey {
            year: dt.year(),
            month: dt.month() as u8,
        })
    }

    pub fn next(self) -> MonthKey {
        if self.month == 12 {
            MonthKey {
                year: self.year + 1,
                month: 1,
            }
        } else {
            MonthKey {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl std::fmt::Display for MonthKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Per-month tag tallies for one location.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonthStats {
    /// Tag occurrences over all records that month.
    pub n_tags: u64,
    /// Tag occurrences that matched the taxonomy.
    pub n_cultural: u64,
    /// Tag occurrences restricted to records with at least one match.
    pub n_tags_cultural_records: u64,
    /// Matched term → occurrence count.
    pub term_counts: BTreeMap<String, u64>,
}

/// Tag statistics for one location: totals, per-macro-category counts, and
/// the monthly series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocationStats {
    pub n_tags: u64,
    pub n_cultural: u64,
    /// Macro category code → cultural tag occurrences.
    pub category_counts: BTreeMap<u16, u64>,
    pub months: BTreeMap<MonthKey, MonthStats>,
}

impl LocationStats {
    fn merge(&mut self, other: LocationStats) {
        self.n_tags += other.n_tags;
        self.n_cultural += other.n_cultural;
        for (code, count) in other.category_counts {
            *self.category_counts.entry(code).or_insert(0) += count;
        }
        for (month, stats) in other.months {
            let entry = self.months.entry(month).or_default();
            entry.n_tags += stats.n_tags;
            entry.n_cultural += stats.n_cultural;
            entry.n_tags_cultural_records += stats.n_tags_cultural_records;
            for (term, count) in stats.term_counts {
                *entry.term_counts.entry(term).or_insert(0) += count;
            }
        }
    }
}

/// Aggregates assigned records into per-location statistics. Tag
/// occurrences count once per (record, normalized tag); a tag matching a
/// taxonomy term counts as cultural under the term's macro category.
/// Partitions may run on worker threads; counts merge additively in sorted
/// location order, so the result is independent of the partitioning.
pub fn aggregate_stats(
    assigned: &[(MediaRecord, String)],
    tax: &Taxonomy,
    workers: usize,
) -> BTreeMap<String, LocationStats> {
    let aggregate_chunk = |chunk: &[(MediaRecord, String)]| {
        let mut stats: BTreeMap<String, LocationStats> = BTreeMap::new();
        for (record, location) in chunk {
            let entry = stats.entry(location.clone()).or_default();
            let matches = match_tags(record.tags.iter().map(String::as_str), tax);
            let n_tags = record.tags.len() as u64;
            let n_cultural = matches.len() as u64;
            entry.n_tags += n_tags;
            entry.n_cultural += n_cultural;
            let month_key =
                MonthKey::from_unix(record.timestamp).expect("timestamps validated at ingestion");
            let month = entry.months.entry(month_key).or_default();
            month.n_tags += n_tags;
            month.n_cultural += n_cultural;
            if !matches.is_empty() {
                month.n_tags_cultural_records += n_tags;
            }
            for (term, code) in matches {
                let macro_code = code / 100 * 100;
                *entry.category_counts.entry(macro_code).or_insert(0) += 1;
                *month.term_counts.entry(term).or_insert(0) += 1;
            }
        }
        stats
    };

    let workers = workers.max(1).min(assigned.len().max(1));
    if workers <= 1 {
        return aggregate_chunk(assigned);
    }
    let chunk_size = assigned.len().div_ceil(workers);
    let partials: Vec<BTreeMap<String, LocationStats>> = thread::scope(|scope| {
        let handles: Vec<_> = assigned
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(|| aggregate_chunk(chunk)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut merged: BTreeMap<String, LocationStats> = BTreeMap::new();
    for partial in partials {
        for (location, stats) in partial {
            merged.entry(location).or_default().merge(stats);
        }
    }
    merged
}

/// Fraction of a location's tags that are cultural, or `None` when the
/// location has no tags at all (excluded downstream and reported).
pub fn fraction_cultural(stats: &LocationStats) -> Option<f64> {
    if stats.n_tags == 0 {
        None
    } else {
        Some(stats.n_cultural as f64 / stats.n_tags as f64)
    }
}

/// What a capital vector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CapitalKind {
    Cultural,
    Economic,
    Penetration,
    Category(u16),
}

impl std::fmt::Display for CapitalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CapitalKind::Cultural => write!(f, "cultural"),
            CapitalKind::Economic => write!(f, "economic"),
            CapitalKind::Penetration => write!(f, "penetration"),
            CapitalKind::Category(code) => write!(f, "category_{code}"),
        }
    }
}

/// A z-scored per-location vector: mean 0, population std 1 over the
/// included locations.
#[derive(Debug, Clone, PartialEq)]
pub struct CapitalVector {
    pub kind: CapitalKind,
    pub values: BTreeMap<String, f64>,
}

/// Plain z-score over a location→value map with population moments.
pub fn zscore_values(
    values: &BTreeMap<String, f64>,
    context: &str,
) -> Result<BTreeMap<String, f64>, MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewLocations {
            needed: 2,
            got: values.len(),
        });
    }
    let first = *values.values().next().expect("checked non-empty");
    if values.values().all(|&v| v == first) {
        return Err(MetricsError::DegenerateDistribution {
            context: context.to_string(),
        });
    }
    let n = values.len() as f64;
    let mean = values.values().sum::<f64>() / n;
    let variance = values.values().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = variance.sqrt();
    if std == 0.0 {
        return Err(MetricsError::DegenerateDistribution {
            context: context.to_string(),
        });
    }
    Ok(values
        .iter()
        .map(|(k, v)| (k.clone(), (v - mean) / std))
        .collect())
}

/// Z-scores a value map into a capital vector.
pub fn zscore(
    values: &BTreeMap<String, f64>,
    kind: CapitalKind,
) -> Result<CapitalVector, MetricsError> {
    Ok(CapitalVector {
        values: zscore_values(values, &kind.to_string())?,
        kind,
    })
}

/// Cultural capital: z-scored cultural tag fraction. Locations with zero
/// tags are excluded and returned separately.
pub fn cultural_capital(
    stats: &BTreeMap<String, LocationStats>,
) -> Result<(CapitalVector, Vec<String>), MetricsError> {
    let mut values = BTreeMap::new();
    let mut excluded = Vec::new();
    for (location, s) in stats {
        match fraction_cultural(s) {
            Some(f) => {
                values.insert(location.clone(), f);
            }
            None => excluded.push(location.clone()),
        }
    }
    Ok((zscore(&values, CapitalKind::Cultural)?, excluded))
}

/// Economic capital: z-scored median income, averaged per location over the
/// available years of an inclusive range. Locations with no income data are
/// excluded and returned.
pub fn economic_capital(
    census: &CensusTable,
    year_from: u16,
    year_to: u16,
) -> Result<(CapitalVector, Vec<String>), MetricsError> {
    let values = census.metric_mean_over_years(CensusMetric::Income, year_from, year_to);
    let excluded: Vec<String> = census
        .locations()
        .filter(|l| !values.contains_key(*l))
        .map(String::from)
        .collect();
    Ok((zscore(&values, CapitalKind::Economic)?, excluded))
}

/// Penetration control: z-score of the total tag volume.
pub fn penetration(stats: &BTreeMap<String, LocationStats>) -> Result<CapitalVector, MetricsError> {
    let values: BTreeMap<String, f64> = stats
        .iter()
        .map(|(l, s)| (l.clone(), s.n_tags as f64))
        .collect();
    zscore(&values, CapitalKind::Penetration)
}

/// Per-location fraction of cultural tags in one macro category, z-scored
/// across locations. Locations with no cultural tags are excluded.
pub fn category_capital(
    stats: &BTreeMap<String, LocationStats>,
    macro_code: u16,
) -> Result<(CapitalVector, Vec<String>), MetricsError> {
    let mut values = BTreeMap::new();
    let mut excluded = Vec::new();
    for (location, s) in stats {
        if s.n_cultural == 0 {
            excluded.push(location.clone());
            continue;
        }
        let count = s.category_counts.get(&macro_code).copied().unwrap_or(0);
        values.insert(location.clone(), count as f64 / s.n_cultural as f64);
    }
    Ok((
        zscore(&values, CapitalKind::Category(macro_code))?,
        excluded,
    ))
}

/// Category capital for each of the nine macro categories; categories that
/// are degenerate city-wide are skipped with the reason.
pub fn all_category_capitals(
    stats: &BTreeMap<String, LocationStats>,
) -> (BTreeMap<u16, CapitalVector>, Vec<(u16, String)>) {
    let mut vectors = BTreeMap::new();
    let mut skipped = Vec::new();
    for (code, _) in MACRO_CATEGORIES {
        match category_capital(stats, code) {
            Ok((vector, _)) => {
                vectors.insert(code, vector);
            }
            Err(e) => skipped.push((code, e.to_string())),
        }
    }
    (vectors, skipped)
}

/// Argmax over coded values with ties broken to the lowest code.
pub fn argmax_lowest_code(values: &BTreeMap<u16, f64>) -> Option<u16> {
    let mut best: Option<(u16, f64)> = None;
    for (&code, &value) in values {
        // Strictly-greater keeps the lowest code on ties.
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((code, value));
        }
    }
    best.map(|(code, _)| code)
}

/// Cultural specialization: per location, the macro category with the
/// highest category capital; ties break to the lowest code. Locations with
/// no computable category are reported separately.
pub fn specialization(
    stats: &BTreeMap<String, LocationStats>,
) -> (BTreeMap<String, u16>, Vec<String>) {
    let (vectors, _) = all_category_capitals(stats);
    let mut out = BTreeMap::new();
    let mut unassigned = Vec::new();
    for location in stats.keys() {
        let per_category: BTreeMap<u16, f64> = vectors
            .iter()
            .filter_map(|(&code, vector)| vector.values.get(location).map(|&value| (code, value)))
            .collect();
        match argmax_lowest_code(&per_category) {
            Some(code) => {
                out.insert(location.clone(), code);
            }
            None => unassigned.push(location.clone()),
        }
    }
    (out, unassigned)
}

/// A diversity estimate, kept as its two components so the bias correction
/// stays exactly inspectable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityScore {
    /// Plugin Shannon entropy over the category fractions, in nats.
    pub plugin: f64,
    /// Small-sample correction (m - 1) / (2N), where m counts the categories
    /// with a nonzero count and N the cultural tags.
    pub correction: f64,
}

impl DiversityScore {
    /// The bias-corrected estimate.
    pub fn value(&self) -> f64 {
        self.plugin + self.correction
    }
}

/// Cultural diversity of one location, or `None` when it has no cultural
/// tags.
pub fn diversity(stats: &LocationStats) -> Option<DiversityScore> {
    if stats.n_cultural == 0 {
        return None;
    }
    let n = stats.n_cultural as f64;
    let mut plugin = 0.0;
    let mut observed = 0u64;
    for &count in stats.category_counts.values() {
        if count == 0 {
            continue;
        }
        observed += 1;
        let fraction = count as f64 / n;
        plugin -= fraction * fraction.ln();
    }
    let correction = (observed.saturating_sub(1)) as f64 / (2.0 * n);
    Some(DiversityScore { plugin, correction })
}

/// Diversity for every location with cultural tags; the rest are reported.
pub fn diversity_all(
    stats: &BTreeMap<String, LocationStats>,
) -> (BTreeMap<String, DiversityScore>, Vec<String>) {
    let mut out = BTreeMap::new();
    let mut excluded = Vec::new();
    for (location, s) in stats {
        match diversity(s) {
            Some(score) => {
                out.insert(location.clone(), score);
            }
            None => excluded.push(location.clone()),
        }
    }
    (out, excluded)
}

/// Which denominator the monthly cultural fraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonthlyDenominator {
    /// All tags posted that month (consistent with the city-level fraction).
    AllTags,
    /// Only tags of records that carried at least one cultural match.
    CulturalRecordTags,
}

impl MonthlyDenominator {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" => Some(MonthlyDenominator::AllTags),
            "cultural" => Some(MonthlyDenominator::CulturalRecordTags),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MonthlyDenominator::AllTags => "all",
            MonthlyDenominator::CulturalRecordTags => "cultural",
        }
    }
}

/// A location's monthly cultural-capital series: per-month z-scores against
/// the location's own monthly mean and population std.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub z: BTreeMap<MonthKey, f64>,
    /// Calendar months inside the observed range with no defined fraction
    /// (no records or a zero denominator), excluded from the moments.
    pub gaps: Vec<MonthKey>,
}

/// Monthly cultural capital for one location.
pub fn monthly_capital(
    stats: &LocationStats,
    denominator: MonthlyDenominator,
) -> Result<MonthlySeries, MetricsError> {
    let mut fractions: BTreeMap<MonthKey, f64> = BTreeMap::new();
    let mut gaps = Vec::new();
    for (&month, m) in &stats.months {
        let denom = match denominator {
            MonthlyDenominator::AllTags => m.n_tags,
            MonthlyDenominator::CulturalRecordTags => m.n_tags_cultural_records,
        };
        if denom == 0 {
            gaps.push(month);
        } else {
            fractions.insert(month, m.n_cultural as f64 / denom as f64);
        }
    }
    // Calendar months between the observed endpoints with no records at all
    // are gaps too.
    if let (Some(&first), Some(&last)) =
        (stats.months.keys().next(), stats.months.keys().next_back())
    {
        let mut month = first;
        while month <= last {
            if !stats.months.contains_key(&month) {
                gaps.push(month);
            }
            month = month.next();
        }
        gaps.sort();
    }

    if fractions.len() < 2 {
        return Err(MetricsError::InsufficientData {
            context: "monthly series".into(),
            needed: 2,
            got: fractions.len(),
        });
    }
    let plain: BTreeMap<String, f64> = fractions
        .iter()
        .map(|(month, &f)| (month.to_string(), f))
        .collect();
    let z_plain = zscore_values(&plain, "monthly series")?;
    Ok(MonthlySeries {
        z: fractions
            .keys()
            .map(|&month| (month, z_plain[&month.to_string()]))
            .collect(),
        gaps,
    })
}

#[cfg(test)]
mod tests;
