//! The local-user filter and the cultural-tag filter.

use std::collections::{BTreeMap, BTreeSet};

use crate::taxonomy::{match_tags, Taxonomy};

use super::MediaRecord;

const SECONDS_PER_DAY: i64 = 86_400;

/// How "active in the city for at least N days" is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// max(timestamp) - min(timestamp) >= N days. The default reading.
    Span,
    /// At least N distinct UTC days with activity.
    Days,
    /// No filtering.
    Off,
}

impl LocalMode {
    pub fn parse(s: &str) -> Option<LocalMode> {
        match s {
            "span" => Some(LocalMode::Span),
            "days" => Some(LocalMode::Days),
            "off" => Some(LocalMode::Off),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LocalMode::Span => "span",
            LocalMode::Days => "days",
            LocalMode::Off => "off",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub records: Vec<MediaRecord>,
    pub dropped_users: usize,
    pub dropped_records: usize,
}

/// Keeps records of users whose activity qualifies them as locals. Input
/// order is preserved; the record set must already be city-scoped.
pub fn local_user_filter(records: Vec<MediaRecord>, mode: LocalMode, days: u32) -> FilterOutcome {
    if matches!(mode, LocalMode::Off) {
        return FilterOutcome {
            records,
            dropped_users: 0,
            dropped_records: 0,
        };
    }
    let mut qualifies: BTreeMap<String, bool> = BTreeMap::new();
    match mode {
        LocalMode::Span => {
            let mut spans: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
            for r in &records {
                let entry = spans
                    .entry(r.user_id.as_str())
                    .or_insert((r.timestamp, r.timestamp));
                entry.0 = entry.0.min(r.timestamp);
                entry.1 = entry.1.max(r.timestamp);
            }
            for (user, (min, max)) in spans {
                qualifies.insert(
                    user.to_string(),
                    max - min >= i64::from(days) * SECONDS_PER_DAY,
                );
            }
        }
        LocalMode::Days => {
            let mut active_days: BTreeMap<&str, BTreeSet<i64>> = BTreeMap::new();
            for r in &records {
                active_days
                    .entry(r.user_id.as_str())
                    .or_default()
                    .insert(r.timestamp.div_euclid(SECONDS_PER_DAY));
            }
            for (user, days_set) in active_days {
                qualifies.insert(user.to_string(), days_set.len() >= days as usize);
            }
        }
        LocalMode::Off => unreachable!(),
    }

    let dropped_users = qualifies.values().filter(|q| !**q).count();
    let (kept, dropped): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| qualifies[r.user_id.as_str()]);
    FilterOutcome {
        records: kept,
        dropped_users,
        dropped_records: dropped.len(),
    }
}

/// A record that passed the cultural filter, annotated with its matched
/// (term, subcategory code) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CulturalRecord {
    pub record: MediaRecord,
    pub matches: BTreeSet<(String, u16)>,
}

/// Keeps records carrying at least one tag that matches the taxonomy.
pub fn cultural_filter(records: Vec<MediaRecord>, tax: &Taxonomy) -> Vec<CulturalRecord> {
    records
        .into_iter()
        .filter_map(|record| {
            let matches = match_tags(record.tags.iter().map(String::as_str), tax);
            if matches.is_empty() {
                None
            } else {
                Some(CulturalRecord { record, matches })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(user: &str, day: i64, tags: &[&str]) -> MediaRecord {
        MediaRecord {
            id: format!("{user}-{day}"),
            user_id: user.to_string(),
            timestamp: day * SECONDS_PER_DAY,
            lat: 0.0,
            lon: 0.0,
            tags: tags.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn span_mode_keeps_users_with_31_day_span() {
        let records = vec![record("u", 0, &[]), record("u", 31, &[])];
        let outcome = local_user_filter(records, LocalMode::Span, 30);
        assert_eq!(outcome.records.len(), 2);
        assert_eq!(outcome.dropped_users, 0);
    }

    #[test]
    fn span_mode_drops_users_with_20_day_span() {
        let records = vec![record("u", 0, &[]), record("u", 20, &[])];
        let outcome = local_user_filter(records, LocalMode::Span, 30);
        assert!(outcome.records.is_empty());
        assert_eq!(outcome.dropped_users, 1);
        assert_eq!(outcome.dropped_records, 2);
    }

    #[test]
    fn single_photo_user_is_dropped() {
        let outcome = local_user_filter(vec![record("u", 5, &[])], LocalMode::Span, 30);
        assert!(outcome.records.is_empty());
    }

    #[test]
    fn days_mode_counts_distinct_days() {
        // 31 distinct active days qualifies; 2 does not.
        let mut records: Vec<MediaRecord> = (0..31).map(|d| record("many", d, &[])).collect();
        records.push(record("few", 0, &[]));
        records.push(record("few", 100, &[]));
        let outcome = local_user_filter(records, LocalMode::Days, 30);
        assert!(outcome.records.iter().all(|r| r.user_id == "many"));
        assert_eq!(outcome.dropped_users, 1);
    }

    #[test]
    fn off_mode_is_a_passthrough() {
        let records = vec![record("u", 0, &[])];
        let outcome = local_user_filter(records.clone(), LocalMode::Off, 30);
        assert_eq!(outcome.records, records);
    }

    #[test]
    fn filter_is_idempotent() {
        let records = vec![
            record("a", 0, &[]),
            record("a", 40, &[]),
            record("b", 0, &[]),
        ];
        let once = local_user_filter(records, LocalMode::Span, 30);
        let twice = local_user_filter(once.records.clone(), LocalMode::Span, 30);
        assert_eq!(once.records, twice.records);
        assert_eq!(twice.dropped_users, 0);
    }

    #[test]
    fn cultural_filter_keeps_and_annotates_matches() {
        let mut tax = Taxonomy::seed_categories();
        tax.insert_term("museum", 803).unwrap();
        tax.insert_term("concert", 901).unwrap();

        let records = vec![
            record("u", 0, &["museum", "dog"]),
            record("u", 1, &["dog"]),
            record("u", 2, &["museum", "concert"]),
        ];
        let kept = cultural_filter(records, &tax);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].matches.len(), 1);
        assert!(kept[0].matches.contains(&("museum".to_string(), 803)));
        assert_eq!(kept[1].matches.len(), 2);
    }

    #[test]
    fn cultural_filter_output_is_a_subset_with_annotations() {
        let mut tax = Taxonomy::seed_categories();
        tax.insert_term("art", 801).unwrap();
        let records = vec![record("u", 0, &["art"]), record("u", 1, &["cat"])];
        let kept = cultural_filter(records.clone(), &tax);
        assert!(kept.len() <= records.len());
        for c in &kept {
            assert!(!c.matches.is_empty());
        }
    }
}
