//! The shared ingest prelude: records → neighborhood assignment →
//! local-user filter → per-location aggregation.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};

use culturank_core::ingest::{
    assign_records, load_neighborhoods, load_records, local_user_filter, LocalMode,
};
use culturank_core::metrics::{aggregate_stats, LocationStats};
use culturank_core::taxonomy::load_taxonomy;

pub struct PipelineReport {
    pub records_loaded: usize,
    pub records_skipped: usize,
    pub records_unassigned: usize,
    pub local_dropped_users: usize,
    pub local_dropped_records: usize,
    pub locations: usize,
    pub total_tags: u64,
    pub cultural_tags: u64,
}

impl PipelineReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "records_loaded": self.records_loaded,
            "records_skipped": self.records_skipped,
            "records_unassigned": self.records_unassigned,
            "local_dropped_users": self.local_dropped_users,
            "local_dropped_records": self.local_dropped_records,
            "locations": self.locations,
            "total_tags": self.total_tags,
            "cultural_tags": self.cultural_tags,
        })
    }
}

pub struct StatsPipeline {
    pub stats: BTreeMap<String, LocationStats>,
    pub report: PipelineReport,
}

/// Runs the standard prelude shared by the metric subcommands.
pub fn run_stats_pipeline(
    records_path: &Path,
    neighborhoods_path: &Path,
    taxonomy_path: &Path,
    local_mode: LocalMode,
    local_days: u32,
    workers: usize,
) -> Result<StatsPipeline> {
    let loaded = load_records(records_path)?;
    let neighborhoods = load_neighborhoods(neighborhoods_path)?;
    let taxonomy = load_taxonomy(taxonomy_path)?;

    let records_loaded = loaded.records.len();
    let assignments = assign_records(&loaded.records, &neighborhoods, workers);
    let mut assigned = Vec::with_capacity(records_loaded);
    let mut unassigned = 0usize;
    for (record, location) in loaded.records.into_iter().zip(assignments) {
        match location {
            Some(loc) => assigned.push((record, loc)),
            None => unassigned += 1,
        }
    }

    // The local filter runs on city-scoped (assigned) records. It decides
    // per user, so surviving users identify the surviving pairs.
    let records: Vec<_> = assigned.iter().map(|(r, _)| r.clone()).collect();
    let filtered = local_user_filter(records, local_mode, local_days);
    let kept_users: std::collections::BTreeSet<String> =
        filtered.records.iter().map(|r| r.user_id.clone()).collect();
    let assigned: Vec<_> = assigned
        .into_iter()
        .filter(|(r, _)| kept_users.contains(&r.user_id))
        .collect();

    if assigned.is_empty() {
        bail!("no records survived assignment and the local-user filter");
    }

    let stats = aggregate_stats(&assigned, &taxonomy, workers);
    let report = PipelineReport {
        records_loaded,
        records_skipped: loaded.skipped,
        records_unassigned: unassigned,
        local_dropped_users: filtered.dropped_users,
        local_dropped_records: filtered.dropped_records,
        locations: stats.len(),
        total_tags: stats.values().map(|s| s.n_tags).sum(),
        cultural_tags: stats.values().map(|s| s.n_cultural).sum(),
    };
    Ok(StatsPipeline { stats, report })
}
