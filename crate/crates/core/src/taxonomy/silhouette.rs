//! Similarity-based clustering silhouette for taxonomy validation.
//!
//! For a term i in cluster C, `int(i)` is the mean path similarity between i
//! and every other term of C, and `ext(i)` is the highest, over the other
//! clusters, of the mean similarity between i and that cluster's terms. Then
//! `s(i) = (int - ext) / max(int, ext)`, in [-1, 1]; higher is more
//! cohesive. Computed on similarities directly, so the sign convention is
//! that a larger internal similarity raises s.

use std::collections::BTreeMap;

use crate::lexsim::{DistanceCache, LexGraph};
use crate::quantile::{quartiles, Quartiles};
use crate::text::normalize_term;

use super::TaxonomyError;

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteEntry {
    pub term: String,
    /// The cluster the term was scored in (a macro category code).
    pub category: u16,
    pub value: f64,
    /// Both mean similarities were 0; the score is defined as 0 and flagged.
    pub zero_denominator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteReport {
    pub entries: Vec<SilhouetteEntry>,
    /// (term, reason) pairs left out of the scoring.
    pub excluded: Vec<(String, String)>,
    pub summary: Quartiles,
}

impl SilhouetteReport {
    pub fn median(&self) -> f64 {
        self.summary.median
    }
}

/// Scores every term against its cluster.
///
/// Terms missing from the lexicon are excluded and reported, as are terms
/// whose cluster has no other member. A term listed under several clusters
/// collapses to the lowest code. Needs at least two clusters with a
/// scorable term.
pub fn silhouette(
    terms: &[(String, u16)],
    lex: &LexGraph,
    depth: u32,
) -> Result<SilhouetteReport, TaxonomyError> {
    let mut by_term: BTreeMap<String, u16> = BTreeMap::new();
    for (surface, cluster) in terms {
        let normalized = normalize_term(surface);
        by_term
            .entry(normalized)
            .and_modify(|c| *c = (*c).min(*cluster))
            .or_insert(*cluster);
    }

    let mut excluded: Vec<(String, String)> = Vec::new();
    let mut scorable: Vec<(String, u16)> = Vec::new();
    for (term, cluster) in by_term {
        if lex.contains_term(&term) {
            scorable.push((term, cluster));
        } else {
            excluded.push((term, "not in lexicon".to_string()));
        }
    }

    let mut clusters: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
    for (i, (_, cluster)) in scorable.iter().enumerate() {
        clusters.entry(*cluster).or_default().push(i);
    }
    if clusters.len() < 2 {
        return Err(TaxonomyError::InvalidArgument {
            message: format!(
                "silhouette needs at least 2 categories with scorable terms, found {}",
                clusters.len()
            ),
        });
    }

    let mut cache = DistanceCache::new(lex);
    let mut entries = Vec::new();
    for (i, (term, cluster)) in scorable.iter().enumerate() {
        let own: Vec<usize> = clusters[cluster]
            .iter()
            .copied()
            .filter(|&j| j != i)
            .collect();
        if own.is_empty() {
            excluded.push((term.clone(), "only member of its category".to_string()));
            continue;
        }
        let mean_to =
            |cache: &mut DistanceCache, members: &[usize]| -> Result<f64, TaxonomyError> {
                let mut total = 0.0;
                for &j in members {
                    total += cache.similarity(term, &scorable[j].0, depth)? as f64;
                }
                Ok(total / members.len() as f64)
            };
        let internal = mean_to(&mut cache, &own)?;
        let mut external = f64::NEG_INFINITY;
        for (other_cluster, members) in &clusters {
            if other_cluster == cluster {
                continue;
            }
            external = external.max(mean_to(&mut cache, members)?);
        }
        let denom = internal.max(external);
        let (value, zero_denominator) = if denom == 0.0 {
            (0.0, true)
        } else {
            ((internal - external) / denom, false)
        };
        entries.push(SilhouetteEntry {
            term: term.clone(),
            category: *cluster,
            value,
            zero_denominator,
        });
    }

    let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let summary = quartiles(&values).ok_or_else(|| TaxonomyError::InvalidArgument {
        message: "no term could be scored: every category is a singleton".to_string(),
    })?;

    Ok(SilhouetteReport {
        entries,
        excluded,
        summary,
    })
}
