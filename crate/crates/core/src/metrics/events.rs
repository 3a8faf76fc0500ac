//! Event-peak detection on monthly cultural-capital series.
//!
//! A month is a peak when its z value clears the upper Tukey fence
//! Q3 + k·IQR of the location's own series (quartiles by linear
//! interpolation, k = 1.5 by boxplot convention, configurable).

use std::collections::BTreeMap;

use crate::quantile::quartiles;

use super::{MetricsError, MonthKey, MonthStats};

#[derive(Debug, Clone, PartialEq)]
pub struct EventPeak {
    pub location: String,
    pub month: MonthKey,
    /// The month's cultural-capital z value.
    pub value: f64,
    /// The fence it cleared.
    pub fence: f64,
    /// Top cultural terms of that month by count (at most five), count
    /// descending, term ascending.
    pub top_terms: Vec<(String, u64)>,
}

fn top_terms(stats: Option<&MonthStats>) -> Vec<(String, u64)> {
    let mut terms: Vec<(String, u64)> = stats
        .map(|m| m.term_counts.iter().map(|(t, &c)| (t.clone(), c)).collect())
        .unwrap_or_default();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    terms.truncate(5);
    terms
}

/// Flags the months whose z value exceeds the upper Tukey fence. Peaks come
/// back sorted by z descending, month ascending on ties. Needs at least 4
/// months of defined values.
pub fn detect_events(
    location: &str,
    z_series: &BTreeMap<MonthKey, f64>,
    months: &BTreeMap<MonthKey, MonthStats>,
    fence_multiplier: f64,
) -> Result<Vec<EventPeak>, MetricsError> {
    if z_series.len() < 4 {
        return Err(MetricsError::InsufficientData {
            context: "event detection".into(),
            needed: 4,
            got: z_series.len(),
        });
    }
    let values: Vec<f64> = z_series.values().copied().collect();
    let q = quartiles(&values).expect("series checked non-empty");
    let fence = q.q3 + fence_multiplier * q.iqr();

    let mut peaks: Vec<EventPeak> = z_series
        .iter()
        .filter(|(_, &z)| z > fence)
        .map(|(&month, &z)| EventPeak {
            location: location.to_string(),
            month,
            value: z,
            fence,
            top_terms: top_terms(months.get(&month)),
        })
        .collect();
    peaks.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .expect("z values are finite")
            .then_with(|| a.month.cmp(&b.month))
    });
    Ok(peaks)
}
