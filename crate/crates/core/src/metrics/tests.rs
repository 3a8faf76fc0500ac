use std::collections::BTreeMap;

use super::*;
use crate::ingest::MediaRecord;
use crate::taxonomy::Taxonomy;

const DAY: i64 = 86_400;

fn location_values(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn stats_with(n_tags: u64, n_cultural: u64, categories: &[(u16, u64)]) -> LocationStats {
    LocationStats {
        n_tags,
        n_cultural,
        category_counts: categories.iter().copied().collect(),
        months: BTreeMap::new(),
    }
}

#[test]
fn fraction_cultural_basic_arithmetic() {
    assert_eq!(fraction_cultural(&stats_with(20, 5, &[])), Some(0.25));
    assert_eq!(fraction_cultural(&stats_with(10, 0, &[])), Some(0.0));
    assert_eq!(fraction_cultural(&stats_with(0, 0, &[])), None);
}

#[test]
fn zscore_of_three_values() {
    let z = zscore_values(&location_values(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]), "t").unwrap();
    assert!((z["a"] - (-1.224744871391589)).abs() < 1e-12);
    assert!(z["b"].abs() < 1e-12);
    assert!((z["c"] - 1.224744871391589).abs() < 1e-12);
}

#[test]
fn zscore_of_two_values() {
    let z = zscore_values(&location_values(&[("a", 0.0), ("b", 1.0)]), "t").unwrap();
    assert_eq!(z["a"], -1.0);
    assert_eq!(z["b"], 1.0);
}

#[test]
fn zscore_rejects_degenerate_and_tiny_inputs() {
    assert!(matches!(
        zscore_values(&location_values(&[("a", 5.0), ("b", 5.0)]), "t"),
        Err(MetricsError::DegenerateDistribution { .. })
    ));
    assert!(matches!(
        zscore_values(&location_values(&[("a", 5.0)]), "t"),
        Err(MetricsError::TooFewLocations { .. })
    ));
}

#[test]
fn zscore_output_has_zero_mean_and_unit_std() {
    let values = location_values(&[("a", 3.0), ("b", 9.5), ("c", -2.0), ("d", 14.25)]);
    let vector = zscore(&values, CapitalKind::Cultural).unwrap();
    let zs: Vec<f64> = vector.values.values().copied().collect();
    let mean = zs.iter().sum::<f64>() / zs.len() as f64;
    let std = (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / zs.len() as f64).sqrt();
    assert!(mean.abs() < 1e-12);
    assert!((std - 1.0).abs() < 1e-12);
}

#[test]
fn cultural_capital_from_two_fractions() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 1, &[])); // 0.1
    stats.insert("b".to_string(), stats_with(10, 3, &[])); // 0.3
    let (vector, excluded) = cultural_capital(&stats).unwrap();
    assert!((vector.values["a"] + 1.0).abs() < 1e-12);
    assert!((vector.values["b"] - 1.0).abs() < 1e-12);
    assert!(excluded.is_empty());
}

#[test]
fn cultural_capital_excludes_tagless_locations() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 1, &[]));
    stats.insert("b".to_string(), stats_with(10, 3, &[]));
    stats.insert("empty".to_string(), stats_with(0, 0, &[]));
    let (vector, excluded) = cultural_capital(&stats).unwrap();
    assert_eq!(excluded, vec!["empty".to_string()]);
    assert!(!vector.values.contains_key("empty"));
}

#[test]
fn economic_capital_averages_year_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("census.csv");
    // "a" has two available years in 2010-2014; the 2020 row must not leak
    // into the range.
    std::fs::write(
        &path,
        "location,year,income,dev,house_price\n\
         a,2010,100,,\na,2014,300,,\na,2020,9000,,\nb,2012,100,,\nnoinc,2012,,,5\n",
    )
    .unwrap();
    let census = crate::ingest::load_census(&path).unwrap();
    let (vector, excluded) = economic_capital(&census, 2010, 2014).unwrap();
    // mean(a) = 200, mean(b) = 100 → z = {+1, -1}
    assert_eq!(vector.values["a"], 1.0);
    assert_eq!(vector.values["b"], -1.0);
    assert_eq!(excluded, vec!["noinc".to_string()]);
}

#[test]
fn identical_incomes_are_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("census.csv");
    std::fs::write(
        &path,
        "location,year,income,dev,house_price\na,2010,100,,\nb,2010,100,,\n",
    )
    .unwrap();
    let census = crate::ingest::load_census(&path).unwrap();
    assert!(matches!(
        economic_capital(&census, 2010, 2010),
        Err(MetricsError::DegenerateDistribution { .. })
    ));
}

#[test]
fn category_capital_z_scores_category_fractions() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 5, &[(200, 1), (900, 4)])); // f(200)=0.2
    stats.insert("b".to_string(), stats_with(10, 5, &[(200, 2), (900, 3)])); // f(200)=0.4
    let (vector, _) = category_capital(&stats, 200).unwrap();
    assert!((vector.values["a"] + 1.0).abs() < 1e-12);
    assert!((vector.values["b"] - 1.0).abs() < 1e-12);
}

#[test]
fn category_fractions_cover_the_whole_location() {
    // All cultural tags in one category: f = 1 there, 0 elsewhere.
    let stats = stats_with(10, 5, &[(900, 5)]);
    assert_eq!(
        stats.category_counts.values().sum::<u64>(),
        stats.n_cultural
    );
    let mut map = BTreeMap::new();
    map.insert("only".to_string(), stats);
    map.insert("other".to_string(), stats_with(10, 5, &[(200, 5)]));
    let (v900, _) = category_capital(&map, 900).unwrap();
    // fractions {1.0, 0.0} → z {+1, -1}
    assert_eq!(v900.values["only"], 1.0);
    assert_eq!(v900.values["other"], -1.0);
}

#[test]
fn city_wide_absent_category_is_degenerate() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 5, &[(200, 5)]));
    stats.insert("b".to_string(), stats_with(10, 5, &[(200, 5)]));
    assert!(matches!(
        category_capital(&stats, 700),
        Err(MetricsError::DegenerateDistribution { .. })
    ));
}

#[test]
fn specialization_takes_the_argmax_with_lowest_code_ties() {
    let mut stats = BTreeMap::new();
    stats.insert(
        "l1".to_string(),
        stats_with(10, 5, &[(200, 2), (300, 2), (600, 1)]),
    );
    stats.insert(
        "l2".to_string(),
        stats_with(10, 5, &[(200, 1), (300, 1), (600, 3)]),
    );
    let (spec, unassigned) = specialization(&stats);
    assert_eq!(spec["l1"], 200, "tie between 200 and 300 goes to 200");
    assert_eq!(spec["l2"], 600);
    assert!(unassigned.is_empty());
}

#[test]
fn specialization_reports_locations_without_categories() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 5, &[(200, 3), (900, 2)]));
    stats.insert("b".to_string(), stats_with(10, 5, &[(200, 2), (900, 3)]));
    stats.insert("none".to_string(), stats_with(10, 0, &[]));
    let (spec, unassigned) = specialization(&stats);
    assert!(!spec.contains_key("none"));
    assert_eq!(unassigned, vec!["none".to_string()]);
}

#[test]
fn diversity_of_uniform_nine_categories_is_ln_nine() {
    let categories: Vec<(u16, u64)> = (1..=9).map(|i| (i * 100, 100)).collect();
    let stats = stats_with(10_000, 900, &categories);
    let score = diversity(&stats).unwrap();
    assert!((score.plugin - 9.0_f64.ln()).abs() < 1e-12);
    assert_eq!(score.correction, 8.0 / (2.0 * 900.0));
}

#[test]
fn diversity_of_single_category_is_zero() {
    let stats = stats_with(100, 40, &[(200, 40)]);
    let score = diversity(&stats).unwrap();
    assert_eq!(score.plugin, 0.0);
    assert_eq!(score.correction, 0.0);
    assert_eq!(score.value(), 0.0);
}

#[test]
fn diversity_of_three_one_split() {
    // Counts {3, 1}: plugin 0.562335…, correction 1/8. Frozen from hand
    // arithmetic.
    let stats = stats_with(4, 4, &[(200, 3), (900, 1)]);
    let score = diversity(&stats).unwrap();
    assert!((score.plugin - 0.5623351446188083).abs() < 1e-12);
    assert_eq!(score.correction, 0.125);
    assert!((score.value() - 0.68734).abs() < 1e-5);
}

#[test]
fn diversity_requires_cultural_tags() {
    assert_eq!(diversity(&stats_with(10, 0, &[])), None);
}

fn month(year: i32, month: u8) -> MonthKey {
    MonthKey { year, month }
}

fn monthly_stats(per_month: &[(MonthKey, u64, u64)]) -> LocationStats {
    let mut stats = LocationStats::default();
    for &(key, n_tags, n_cultural) in per_month {
        stats.n_tags += n_tags;
        stats.n_cultural += n_cultural;
        stats.months.insert(
            key,
            MonthStats {
                n_tags,
                n_cultural,
                n_tags_cultural_records: n_cultural,
                term_counts: BTreeMap::new(),
            },
        );
    }
    stats
}

#[test]
fn monthly_capital_z_scores_against_own_moments() {
    // Fractions {0.1, 0.1, 0.4}: mean 0.2, population std sqrt(0.02).
    let stats = monthly_stats(&[
        (month(2010, 1), 10, 1),
        (month(2010, 2), 10, 1),
        (month(2010, 3), 10, 4),
    ]);
    let series = monthly_capital(&stats, MonthlyDenominator::AllTags).unwrap();
    assert!((series.z[&month(2010, 1)] - (-0.7071067811865475)).abs() < 1e-12);
    assert!((series.z[&month(2010, 2)] - (-0.7071067811865475)).abs() < 1e-12);
    assert!((series.z[&month(2010, 3)] - 1.414213562373095).abs() < 1e-12);
    assert!(series.gaps.is_empty());
}

#[test]
fn constant_monthly_series_is_degenerate() {
    let stats = monthly_stats(&[
        (month(2010, 1), 10, 2),
        (month(2010, 2), 10, 2),
        (month(2010, 3), 10, 2),
    ]);
    assert!(matches!(
        monthly_capital(&stats, MonthlyDenominator::AllTags),
        Err(MetricsError::DegenerateDistribution { .. })
    ));
}

#[test]
fn empty_months_are_flagged_gaps() {
    let mut stats = monthly_stats(&[(month(2010, 1), 10, 1), (month(2010, 3), 10, 4)]);
    // A month with records but zero tags is also a gap.
    stats.months.insert(month(2010, 4), MonthStats::default());
    let series = monthly_capital(&stats, MonthlyDenominator::AllTags).unwrap();
    assert_eq!(series.z.len(), 2);
    assert_eq!(series.gaps, vec![month(2010, 2), month(2010, 4)]);
}

#[test]
fn monthly_denominator_switch_changes_the_series() {
    let mut stats = LocationStats {
        n_tags: 30,
        n_cultural: 3,
        ..LocationStats::default()
    };
    // Month 1: 10 tags, 2 cultural, cultural records carry 4 tags.
    stats.months.insert(
        month(2010, 1),
        MonthStats {
            n_tags: 10,
            n_cultural: 2,
            n_tags_cultural_records: 4,
            term_counts: BTreeMap::new(),
        },
    );
    stats.months.insert(
        month(2010, 2),
        MonthStats {
            n_tags: 20,
            n_cultural: 1,
            n_tags_cultural_records: 4,
            term_counts: BTreeMap::new(),
        },
    );
    let all = monthly_capital(&stats, MonthlyDenominator::AllTags).unwrap();
    let cultural = monthly_capital(&stats, MonthlyDenominator::CulturalRecordTags).unwrap();
    assert_ne!(all.z, cultural.z);
}

#[test]
fn event_detection_matches_the_quartile_oracle() {
    // Series {0,0,0,3}: Q3 = 0.75, IQR = 0.75, fence = 1.875 → only the
    // fourth month is flagged.
    let mut z = BTreeMap::new();
    z.insert(month(2010, 1), 0.0);
    z.insert(month(2010, 2), 0.0);
    z.insert(month(2010, 3), 0.0);
    z.insert(month(2010, 4), 3.0);
    let peaks = detect_events("loc", &z, &BTreeMap::new(), 1.5).unwrap();
    assert_eq!(peaks.len(), 1);
    assert_eq!(peaks[0].month, month(2010, 4));
    assert_eq!(peaks[0].fence, 1.875);
    assert_eq!(peaks[0].value, 3.0);
}

#[test]
fn constant_series_has_no_peaks() {
    let z: BTreeMap<MonthKey, f64> = (1..=6).map(|m| (month(2010, m), 1.0)).collect();
    let peaks = detect_events("loc", &z, &BTreeMap::new(), 1.5).unwrap();
    assert!(peaks.is_empty());
}

#[test]
fn equal_maxima_order_by_month() {
    let mut z: BTreeMap<MonthKey, f64> = (1..=6).map(|m| (month(2010, m), 0.0)).collect();
    z.insert(month(2010, 7), 5.0);
    z.insert(month(2010, 8), 5.0);
    let peaks = detect_events("loc", &z, &BTreeMap::new(), 1.5).unwrap();
    assert_eq!(peaks.len(), 2);
    assert_eq!(peaks[0].month, month(2010, 7));
    assert_eq!(peaks[1].month, month(2010, 8));
}

#[test]
fn short_series_is_an_error() {
    let z: BTreeMap<MonthKey, f64> = (1..=3).map(|m| (month(2010, m), 0.0)).collect();
    assert!(matches!(
        detect_events("loc", &z, &BTreeMap::new(), 1.5),
        Err(MetricsError::InsufficientData { .. })
    ));
}

#[test]
fn peaks_report_top_terms_of_their_month() {
    let mut z = BTreeMap::new();
    for m in 1..=4 {
        z.insert(month(2010, m), 0.0);
    }
    z.insert(month(2010, 5), 9.0);
    let mut months = BTreeMap::new();
    let mut term_counts = BTreeMap::new();
    for (term, count) in [
        ("art", 7u64),
        ("ballet", 7),
        ("concert", 10),
        ("dance", 2),
        ("expo", 1),
        ("fair", 1),
    ] {
        term_counts.insert(term.to_string(), count);
    }
    months.insert(
        month(2010, 5),
        MonthStats {
            n_tags: 30,
            n_cultural: 28,
            n_tags_cultural_records: 30,
            term_counts,
        },
    );
    let peaks = detect_events("loc", &z, &months, 1.5).unwrap();
    assert_eq!(peaks.len(), 1);
    let names: Vec<&str> = peaks[0].top_terms.iter().map(|(t, _)| t.as_str()).collect();
    // Count descending, term ascending on ties, capped at five.
    assert_eq!(names, vec!["concert", "art", "ballet", "dance", "expo"]);
}

fn record(user: &str, day: i64, lat: f64, lon: f64, tags: &[&str]) -> MediaRecord {
    MediaRecord {
        id: format!("{user}-{day}"),
        user_id: user.to_string(),
        timestamp: day * DAY,
        lat,
        lon,
        tags: tags.iter().map(|t| t.to_string()).collect(),
    }
}

fn test_taxonomy() -> Taxonomy {
    let mut tax = Taxonomy::seed_categories();
    tax.insert_term("museum", 803).unwrap();
    tax.insert_term("concert", 901).unwrap();
    tax.insert_term("gallery", 801).unwrap();
    tax
}

#[test]
fn aggregation_counts_tags_and_categories() {
    let tax = test_taxonomy();
    let assigned = vec![
        (
            record("u", 0, 0.5, 0.5, &["museum", "dog"]),
            "A".to_string(),
        ),
        (
            record("u", 1, 0.5, 0.5, &["concert", "museum"]),
            "A".to_string(),
        ),
        (record("v", 2, 0.5, 0.5, &["cat"]), "B".to_string()),
    ];
    let stats = aggregate_stats(&assigned, &tax, 1);
    let a = &stats["A"];
    assert_eq!(a.n_tags, 4);
    assert_eq!(a.n_cultural, 3);
    assert_eq!(a.category_counts[&800], 2);
    assert_eq!(a.category_counts[&900], 1);
    assert_eq!(a.category_counts.values().sum::<u64>(), a.n_cultural);
    let b = &stats["B"];
    assert_eq!(b.n_tags, 1);
    assert_eq!(b.n_cultural, 0);
    // Both records of user u land in 1970-01.
    assert_eq!(a.months.len(), 1);
    let jan = &a.months[&month(1970, 1)];
    assert_eq!(jan.n_tags, 4);
    assert_eq!(jan.n_cultural, 3);
    assert_eq!(jan.term_counts["museum"], 2);
}

#[test]
fn aggregation_is_worker_invariant() {
    let tax = test_taxonomy();
    let assigned: Vec<(MediaRecord, String)> = (0..200)
        .map(|i| {
            let tags: Vec<&str> = match i % 4 {
                0 => vec!["museum", "dog"],
                1 => vec!["concert"],
                2 => vec!["gallery", "museum"],
                _ => vec!["nothing"],
            };
            (
                record(&format!("u{}", i % 7), i, 0.0, 0.0, &tags),
                format!("loc{}", i % 5),
            )
        })
        .collect();
    let one = aggregate_stats(&assigned, &tax, 1);
    let four = aggregate_stats(&assigned, &tax, 4);
    let seven = aggregate_stats(&assigned, &tax, 7);
    assert_eq!(one, four);
    assert_eq!(one, seven);
}

#[test]
fn month_key_formats_and_orders() {
    assert_eq!(month(2010, 3).to_string(), "2010-03");
    assert!(month(2010, 12) < month(2011, 1));
    assert_eq!(month(2010, 12).next(), month(2011, 1));
    // 2010-01-15 00:00:00 UTC
    assert_eq!(MonthKey::from_unix(1_263_513_600), Some(month(2010, 1)));
}

#[test]
fn penetration_is_z_of_tag_volume() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(100, 0, &[]));
    stats.insert("b".to_string(), stats_with(300, 0, &[]));
    let vector = penetration(&stats).unwrap();
    assert_eq!(vector.values["a"], -1.0);
    assert_eq!(vector.values["b"], 1.0);
}

#[test]
fn diversity_all_reports_excluded() {
    let mut stats = BTreeMap::new();
    stats.insert("a".to_string(), stats_with(10, 4, &[(200, 3), (900, 1)]));
    stats.insert("bare".to_string(), stats_with(10, 0, &[]));
    let (scores, excluded) = diversity_all(&stats);
    assert!(scores.contains_key("a"));
    assert_eq!(excluded, vec!["bare".to_string()]);
}

#[test]
fn unused_macro_code_never_panics_aggregation() {
    // A taxonomy term under subcategory 505 maps to macro 500.
    let mut tax = Taxonomy::seed_categories();
    tax.insert_term("photo", 505).unwrap();
    let assigned = vec![(record("u", 0, 0.0, 0.0, &["photo"]), "A".to_string())];
    let stats = aggregate_stats(&assigned, &tax, 1);
    assert_eq!(stats["A"].category_counts[&500], 1);
}
