//! The three-level cultural taxonomy: 9 macro categories, 25 coded
//! subcategories, and leaf terms matched against photo tags.
//!
//! Terms are grown in steps: expand subcategory labels one hop through the
//! concept graph, keep candidates a human classified as one of the four
//! culture-relevant 'is-a' classes, mine tag co-occurrences against the kept
//! candidates, keep frequent co-tags, clean against photo/term agreement
//! labels, and finally attach every term to a single parent subcategory.
//! The manual judgments arrive as decision/label files so they stay
//! auditable inputs.

mod silhouette;

pub use silhouette::{silhouette, SilhouetteEntry, SilhouetteReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::concept_graph::ConceptGraph;
use crate::lexsim::{DistanceCache, LexError, LexGraph, PairSimilaritySummary};
use crate::text::normalize_term;

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
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
    #[error("failed to parse {path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("taxonomy integrity violation: {message}")]
    Integrity { message: String },
    #[error("invalid category code {code}: {message}")]
    InvalidCode { code: u16, message: String },
    #[error("subcategory label {label:?} does not resolve to any concept node")]
    UnresolvedLabel { label: String },
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    ConceptGraph(#[from] crate::concept_graph::ConceptGraphError),
}

/// A coded category in the hundreds scheme: 100–900 are macro categories,
/// e.g. 403 is the "Fashion" subcategory under macro 400.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryCode(u16);

impl CategoryCode {
    pub fn new(code: u16) -> Result<Self, TaxonomyError> {
        if !(100..=999).contains(&code) {
            return Err(TaxonomyError::InvalidCode {
                code,
                message: "codes live in the hundreds scheme 100..=999".into(),
            });
        }
        Ok(CategoryCode(code))
    }

    pub fn get(self) -> u16 {
        self.0
    }

    /// The macro category this code belongs to: (code / 100) * 100.
    pub fn macro_code(self) -> u16 {
        self.0 / 100 * 100
    }
}

impl std::fmt::Display for CategoryCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The nine macro categories of the creative industries.
pub const MACRO_CATEGORIES: [(u16, &str); 9] = [
    (100, "Advertising and marketing"),
    (200, "Architecture"),
    (300, "Crafts"),
    (400, "Design: product, graphic and fashion"),
    (500, "Film, TV, video, radio and photography"),
    (600, "IT software and computer services"),
    (700, "Publishing"),
    (800, "Museums, galleries and libraries"),
    (900, "Music, performing and visual arts"),
];

/// The twenty-five coded subcategories seeding the taxonomy.
pub const SUBCATEGORIES: [(u16, &str); 25] = [
    (101, "Advertising"),
    (102, "Marketing"),
    (200, "Architecture"),
    (300, "Crafts"),
    (400, "Design"),
    (401, "Product design"),
    (402, "Graphic design"),
    (403, "Fashion"),
    (501, "Film"),
    (502, "Television"),
    (503, "Video"),
    (504, "Radio"),
    (505, "Photography"),
    (601, "Technology"),
    (602, "Gaming"),
    (603, "Software"),
    (700, "Publishing"),
    (801, "Arts"),
    (802, "Culture"),
    (803, "Museums"),
    (804, "Libraries"),
    (901, "Music"),
    (902, "Performance art"),
    (903, "Theatre"),
    (904, "Visual arts"),
];

/// The three-level taxonomy. Immutable after build; term surfaces are
/// normalized and unique across the whole tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    categories: BTreeMap<u16, String>,
    subcategories: BTreeMap<u16, String>,
    terms: BTreeMap<String, u16>,
}

impl Taxonomy {
    /// Levels 1–2 skeleton: the nine macro categories and the twenty-five
    /// coded subcategories, no terms yet.
    pub fn seed_categories() -> Taxonomy {
        Taxonomy {
            categories: MACRO_CATEGORIES
                .iter()
                .map(|&(c, l)| (c, l.to_string()))
                .collect(),
            subcategories: SUBCATEGORIES
                .iter()
                .map(|&(c, l)| (c, l.to_string()))
                .collect(),
            terms: BTreeMap::new(),
        }
    }

    pub fn categories(&self) -> &BTreeMap<u16, String> {
        &self.categories
    }

    pub fn subcategories(&self) -> &BTreeMap<u16, String> {
        &self.subcategories
    }

    /// Leaf terms: normalized surface → parent subcategory code.
    pub fn terms(&self) -> &BTreeMap<String, u16> {
        &self.terms
    }

    pub fn subcategory_label(&self, code: u16) -> Option<&str> {
        self.subcategories.get(&code).map(String::as_str)
    }

    /// Inserts a leaf term under a subcategory. The surface is normalized;
    /// re-inserting an identical (surface, parent) pair is a no-op, while a
    /// conflicting parent is an integrity error.
    pub fn insert_term(&mut self, surface: &str, parent: u16) -> Result<(), TaxonomyError> {
        if !self.subcategories.contains_key(&parent) {
            return Err(TaxonomyError::InvalidCode {
                code: parent,
                message: "term parent is not a known subcategory".into(),
            });
        }
        let normalized = normalize_term(surface);
        if normalized.is_empty() {
            return Err(TaxonomyError::Integrity {
                message: format!("term {surface:?} normalizes to the empty string"),
            });
        }
        match self.terms.get(&normalized) {
            Some(&existing) if existing != parent => Err(TaxonomyError::Integrity {
                message: format!(
                    "term {normalized:?} already attached to {existing}, cannot re-attach to {parent}"
                ),
            }),
            _ => {
                self.terms.insert(normalized, parent);
                Ok(())
            }
        }
    }

    fn validate(&self) -> Result<(), TaxonomyError> {
        if self.categories.len() != 9 {
            return Err(TaxonomyError::Integrity {
                message: format!(
                    "expected 9 macro categories, found {}",
                    self.categories.len()
                ),
            });
        }
        for &code in self.categories.keys() {
            if code % 100 != 0 || !(100..=900).contains(&code) {
                return Err(TaxonomyError::Integrity {
                    message: format!("{code} is not a valid macro category code"),
                });
            }
        }
        for &code in self.subcategories.keys() {
            let c = CategoryCode::new(code)?;
            if !self.categories.contains_key(&c.macro_code()) {
                return Err(TaxonomyError::Integrity {
                    message: format!("subcategory {code} has no macro parent"),
                });
            }
        }
        for (surface, parent) in &self.terms {
            if !self.subcategories.contains_key(parent) {
                return Err(TaxonomyError::Integrity {
                    message: format!("term {surface:?} has unknown parent {parent}"),
                });
            }
            if normalize_term(surface) != *surface {
                return Err(TaxonomyError::Integrity {
                    message: format!("term surface {surface:?} is not normalized"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CodedLabel {
    code: u16,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    surface: String,
    parent: u16,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyFile {
    categories: Vec<CodedLabel>,
    subcategories: Vec<CodedLabel>,
    terms: Vec<TermEntry>,
}

/// Serializes a taxonomy to its canonical JSON form (sorted, pretty,
/// trailing newline) — byte-stable across runs.
pub fn taxonomy_to_json(tax: &Taxonomy) -> String {
    let file = TaxonomyFile {
        categories: tax
            .categories
            .iter()
            .map(|(&code, label)| CodedLabel {
                code,
                label: label.clone(),
            })
            .collect(),
        subcategories: tax
            .subcategories
            .iter()
            .map(|(&code, label)| CodedLabel {
                code,
                label: label.clone(),
            })
            .collect(),
        terms: tax
            .terms
            .iter()
            .map(|(surface, &parent)| TermEntry {
                surface: surface.clone(),
                parent,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("taxonomy serializes");
    out.push('\n');
    out
}

pub fn save_taxonomy(tax: &Taxonomy, path: &Path) -> Result<(), TaxonomyError> {
    fs::write(path, taxonomy_to_json(tax)).map_err(|source| TaxonomyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy, TaxonomyError> {
    let content = fs::read_to_string(path).map_err(|source| TaxonomyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: TaxonomyFile = serde_json::from_str(&content).map_err(|e| TaxonomyError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut tax = Taxonomy {
        categories: BTreeMap::new(),
        subcategories: BTreeMap::new(),
        terms: BTreeMap::new(),
    };
    for entry in file.categories {
        if tax.categories.insert(entry.code, entry.label).is_some() {
            return Err(TaxonomyError::Integrity {
                message: format!("duplicate category code {}", entry.code),
            });
        }
    }
    for entry in file.subcategories {
        if tax.subcategories.insert(entry.code, entry.label).is_some() {
            return Err(TaxonomyError::Integrity {
                message: format!("duplicate subcategory code {}", entry.code),
            });
        }
    }
    for entry in file.terms {
        let normalized = normalize_term(&entry.surface);
        if tax.terms.insert(normalized.clone(), entry.parent).is_some() {
            return Err(TaxonomyError::Integrity {
                message: format!("duplicate term surface {normalized:?}"),
            });
        }
    }
    tax.validate()?;
    Ok(tax)
}

/// A term candidate attributed to one subcategory. A candidate linked to k
/// subcategories appears k times; the single-parent invariant is enforced
/// later by [`attach_terms`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub surface: String,
    pub subcategory: u16,
}

/// Expands every subcategory one hop through the concept graph and emits
/// article neighbors as term candidates, minus stoplist entries (matched by
/// node id or normalized title).
pub fn expand_subcategories(
    tax: &Taxonomy,
    graph: &ConceptGraph,
    stoplist: &BTreeSet<String>,
) -> Result<Vec<Candidate>, TaxonomyError> {
    let mut out = BTreeSet::new();
    for (&code, label) in &tax.subcategories {
        let node_id = graph
            .resolve_label(label)
            .ok_or_else(|| TaxonomyError::UnresolvedLabel {
                label: label.clone(),
            })?
            .to_string();
        let seeds: BTreeSet<String> = [node_id].into();
        for neighbor in graph.neighbors_1hop(&seeds)? {
            let node = graph.node(&neighbor).expect("neighbor exists");
            let surface = normalize_term(&node.title);
            if surface.is_empty() {
                continue;
            }
            if stoplist.contains(&neighbor) || stoplist.contains(&surface) {
                continue;
            }
            out.insert(Candidate {
                surface,
                subcategory: code,
            });
        }
    }
    Ok(out.into_iter().collect())
}

/// Loads a stoplist file: one slug per line, `#` comments ignored.
pub fn load_stoplist(path: &Path) -> Result<BTreeSet<String>, TaxonomyError> {
    let content = fs::read_to_string(path).map_err(|source| TaxonomyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect())
}

/// The four culture-relevant 'is-a' classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsaClass {
    Process,
    Place,
    Person,
    Product,
}

impl IsaClass {
    fn parse(s: &str) -> Option<Option<IsaClass>> {
        match s.to_lowercase().as_str() {
            "process" => Some(Some(IsaClass::Process)),
            "place" => Some(Some(IsaClass::Place)),
            "person" => Some(Some(IsaClass::Person)),
            "product" => Some(Some(IsaClass::Product)),
            "reject" => Some(None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsaOutcome {
    pub kept: Vec<Candidate>,
    /// Surfaces explicitly rejected by the decisions file.
    pub rejected: BTreeSet<String>,
    /// Surfaces with no decision on file — dropped conservatively.
    pub missing: BTreeSet<String>,
}

/// Applies an 'is-a' decisions file (TSV: surface <tab> class) to a
/// candidate set. Candidates keep their attribution when classified as one
/// of the four P classes; `reject` and absent candidates are dropped, the
/// absentees reported separately.
pub fn apply_isa_decisions(
    candidates: &[Candidate],
    decisions_path: &Path,
) -> Result<IsaOutcome, TaxonomyError> {
    let content = fs::read_to_string(decisions_path).map_err(|source| TaxonomyError::Io {
        path: decisions_path.to_path_buf(),
        source,
    })?;
    let mut decisions: BTreeMap<String, Option<IsaClass>> = BTreeMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(TaxonomyError::Parse {
                path: decisions_path.to_path_buf(),
                line,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let class = IsaClass::parse(fields[1]).ok_or_else(|| TaxonomyError::Parse {
            path: decisions_path.to_path_buf(),
            line,
            message: format!(
                "unknown decision label {:?} (expected process/place/person/product/reject)",
                fields[1]
            ),
        })?;
        decisions.insert(normalize_term(fields[0]), class);
    }

    let mut outcome = IsaOutcome {
        kept: Vec::new(),
        rejected: BTreeSet::new(),
        missing: BTreeSet::new(),
    };
    for candidate in candidates {
        match decisions.get(&candidate.surface) {
            Some(Some(_)) => outcome.kept.push(candidate.clone()),
            Some(None) => {
                outcome.rejected.insert(candidate.surface.clone());
            }
            None => {
                outcome.missing.insert(candidate.surface.clone());
            }
        }
    }
    Ok(outcome)
}

/// A photo-level co-occurrence count between a seed term and another tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CooccurrencePair {
    pub seed_term: String,
    pub other_tag: String,
    pub count: u64,
}

/// Counts photo-level co-occurrences between seed terms and every co-tag.
///
/// For each record containing at least one seed term, every unordered
/// (seed, other) tag pair present in the record counts once; a record with
/// two seed terms contributes to both seeds' pairs and to the seed–seed pair
/// once. Partitions may be processed on `workers` threads; counts merge
/// additively and rows come out in sorted (seed, other) order either way.
pub fn mine_cooccurrences<'a, I>(
    tag_sets: I,
    seeds: &BTreeSet<String>,
    workers: usize,
) -> Vec<CooccurrencePair>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let records: Vec<&BTreeSet<String>> = tag_sets.into_iter().collect();
    let workers = workers.max(1).min(records.len().max(1));

    let count_chunk = |chunk: &[&BTreeSet<String>]| {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for tags in chunk {
            let seed_tags: Vec<&String> = tags.iter().filter(|t| seeds.contains(*t)).collect();
            if seed_tags.is_empty() {
                continue;
            }
            let mut seen: BTreeSet<(&String, &String)> = BTreeSet::new();
            for seed in &seed_tags {
                for other in tags.iter() {
                    if other == *seed {
                        continue;
                    }
                    // Canonical unordered key; seed-first for mixed pairs,
                    // lexicographic for seed–seed pairs.
                    let key = if seeds.contains(other) {
                        if *seed < other {
                            (*seed, other)
                        } else {
                            (other, *seed)
                        }
                    } else {
                        (*seed, other)
                    };
                    seen.insert(key);
                }
            }
            for (seed, other) in seen {
                *counts.entry((seed.clone(), other.clone())).or_insert(0) += 1;
            }
        }
        counts
    };

    let merged = if workers <= 1 {
        count_chunk(&records)
    } else {
        let chunk_size = records.len().div_ceil(workers);
        let partials: Vec<BTreeMap<(String, String), u64>> = thread::scope(|scope| {
            let handles: Vec<_> = records
                .chunks(chunk_size)
                .map(|chunk| scope.spawn(|| count_chunk(chunk)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        let mut merged = BTreeMap::new();
        for partial in partials {
            for (key, count) in partial {
                *merged.entry(key).or_insert(0) += count;
            }
        }
        merged
    };

    merged
        .into_iter()
        .map(|((seed_term, other_tag), count)| CooccurrencePair {
            seed_term,
            other_tag,
            count,
        })
        .collect()
}

/// One row of a co-occurrence threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: u64,
    /// `None` when no retained pair could be scored.
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
    /// Pairs with count >= threshold, before lexicon filtering.
    pub retained: usize,
}

/// Sweeps co-occurrence thresholds and reports the average pair similarity
/// of the retained pairs at each step, for plateau inspection.
pub fn threshold_sweep(
    pairs: &[CooccurrencePair],
    lex: &LexGraph,
    depth: u32,
    t_min: u64,
    t_max: u64,
    step: u64,
) -> Result<Vec<SweepRow>, TaxonomyError> {
    if t_min > t_max {
        return Err(TaxonomyError::InvalidArgument {
            message: format!("threshold range is empty: {t_min} > {t_max}"),
        });
    }
    if step == 0 {
        return Err(TaxonomyError::InvalidArgument {
            message: "sweep step must be at least 1".into(),
        });
    }
    let mut rows = Vec::new();
    let mut threshold = t_min;
    loop {
        let retained: Vec<(String, String)> = pairs
            .iter()
            .filter(|p| p.count >= threshold)
            .map(|p| (p.seed_term.clone(), p.other_tag.clone()))
            .collect();
        let row = if retained.is_empty() {
            SweepRow {
                threshold,
                mean: None,
                std_dev: None,
                retained: 0,
            }
        } else {
            match lex.avg_pair_similarity(&retained, depth) {
                Ok(PairSimilaritySummary { mean, std_dev, .. }) => SweepRow {
                    threshold,
                    mean: Some(mean),
                    std_dev: Some(std_dev),
                    retained: retained.len(),
                },
                Err(LexError::EmptySample) => SweepRow {
                    threshold,
                    mean: None,
                    std_dev: None,
                    retained: retained.len(),
                },
                Err(e) => return Err(e.into()),
            }
        };
        rows.push(row);
        match threshold.checked_add(step) {
            Some(next) if next <= t_max => threshold = next,
            _ => break,
        }
    }
    Ok(rows)
}

/// Keeps every other-tag from pairs at or above the count threshold
/// (inclusive), merged with its seed attribution: term → seed terms it
/// co-occurred with.
pub fn apply_threshold(
    pairs: &[CooccurrencePair],
    threshold: u64,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for pair in pairs {
        if pair.count >= threshold {
            out.entry(pair.other_tag.clone())
                .or_default()
                .insert(pair.seed_term.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome {
    pub kept: BTreeSet<String>,
    /// Terms kept without any labels on file, flagged for review.
    pub unlabeled: BTreeSet<String>,
    /// Dropped terms with their agreement score.
    pub dropped: BTreeMap<String, f64>,
    /// Agreement per labeled term (positives / labeled).
    pub agreements: BTreeMap<String, f64>,
}

/// Cleans terms against an agreement labels file (TSV: term <tab> photo_id
/// <tab> 0|1). A term is kept when its agreement (positives / labeled) is at
/// least `min_agreement`; terms with no labels are kept but flagged.
pub fn agreement_clean(
    terms: &BTreeSet<String>,
    labels_path: &Path,
    min_agreement: f64,
) -> Result<CleanOutcome, TaxonomyError> {
    let content = fs::read_to_string(labels_path).map_err(|source| TaxonomyError::Io {
        path: labels_path.to_path_buf(),
        source,
    })?;
    let mut tallies: BTreeMap<String, (u64, u64)> = BTreeMap::new(); // (positives, total)
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(TaxonomyError::Parse {
                path: labels_path.to_path_buf(),
                line,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let positive = match fields[2] {
            "1" => true,
            "0" => false,
            other => {
                return Err(TaxonomyError::Parse {
                    path: labels_path.to_path_buf(),
                    line,
                    message: format!("label must be 0 or 1, found {other:?}"),
                })
            }
        };
        let entry = tallies.entry(normalize_term(fields[0])).or_insert((0, 0));
        entry.1 += 1;
        if positive {
            entry.0 += 1;
        }
    }

    let mut outcome = CleanOutcome {
        kept: BTreeSet::new(),
        unlabeled: BTreeSet::new(),
        dropped: BTreeMap::new(),
        agreements: BTreeMap::new(),
    };
    for term in terms {
        match tallies.get(term) {
            None => {
                outcome.kept.insert(term.clone());
                outcome.unlabeled.insert(term.clone());
            }
            Some(&(positives, total)) => {
                let agreement = positives as f64 / total as f64;
                outcome.agreements.insert(term.clone(), agreement);
                if agreement >= min_agreement {
                    outcome.kept.insert(term.clone());
                } else {
                    outcome.dropped.insert(term.clone(), agreement);
                }
            }
        }
    }
    Ok(outcome)
}

/// Normalizes tags and returns their exact matches against the taxonomy's
/// term surfaces, with the matched term's parent subcategory code.
pub fn match_tags<'a, I>(tags: I, tax: &Taxonomy) -> BTreeSet<(String, u16)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = BTreeSet::new();
    for tag in tags {
        let normalized = normalize_term(tag);
        if let Some(&parent) = tax.terms.get(&normalized) {
            out.insert((normalized, parent));
        }
    }
    out
}

/// Attaches candidate terms to the taxonomy, enforcing the single-parent
/// invariant.
///
/// Unambiguous candidates (one attribution) attach first, in sorted surface
/// order. A candidate attributed to several subcategories then attaches to
/// the one whose already-attached term set has the highest mean path
/// similarity to it; pairs that cannot be scored (empty set, term missing
/// from the lexicon) contribute 0, and ties break to the lowest subcategory
/// code.
pub fn attach_terms(
    candidates: &BTreeMap<String, BTreeSet<u16>>,
    tax: &Taxonomy,
    lex: &LexGraph,
    depth: u32,
) -> Result<Taxonomy, TaxonomyError> {
    let mut out = tax.clone();
    let mut cache = DistanceCache::new(lex);

    for (surface, attributions) in candidates {
        if attributions.is_empty() {
            return Err(TaxonomyError::Integrity {
                message: format!("candidate {surface:?} carries no attribution"),
            });
        }
        if attributions.len() == 1 {
            let &code = attributions.iter().next().expect("non-empty");
            out.insert_term(surface, code)?;
        }
    }

    for (surface, attributions) in candidates {
        if attributions.len() < 2 {
            continue;
        }
        let mut best: Option<(u16, f64)> = None;
        for &code in attributions {
            if !out.subcategories.contains_key(&code) {
                return Err(TaxonomyError::InvalidCode {
                    code,
                    message: "attribution is not a known subcategory".into(),
                });
            }
            let members: Vec<&String> = out
                .terms
                .iter()
                .filter(|&(member, &parent)| parent == code && member != surface)
                .map(|(member, _)| member)
                .collect();
            let mut total = 0.0;
            for member in &members {
                if lex.contains_term(surface) && lex.contains_term(member) {
                    total += cache.similarity(surface, member, depth)? as f64;
                }
            }
            let score = if members.is_empty() {
                0.0
            } else {
                total / members.len() as f64
            };
            // Strictly-greater keeps the lowest code on ties because codes
            // iterate in ascending order.
            if best.is_none_or(|(_, best_score)| score > best_score) {
                best = Some((code, score));
            }
        }
        let (code, _) = best.expect("at least one attribution");
        out.insert_term(surface, code)?;
    }

    out.validate()?;
    Ok(out)
}
