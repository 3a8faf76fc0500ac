//! Table readers and writers for the pipeline's intermediate files. Output
//! rows are always emitted in sorted order and floats use the shortest
//! round-trip representation, so identical inputs produce byte-identical
//! files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use culturank_core::metrics::{CapitalVector, DiversityScore, EventPeak, MonthlySeries};
use culturank_core::stats::CategoryModelTable;
use culturank_core::taxonomy::{Candidate, CooccurrencePair, SilhouetteReport, SweepRow};
use culturank_core::text::normalize_term;

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("failed to create {}", parent.display()))?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("failed to write {}", path.display()))
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("failed to read {}", path.display()))
}

// ---------------------------------------------------------------------------
// candidates / terms TSV: surface <tab> subcategory code
// ---------------------------------------------------------------------------

pub fn write_candidates_tsv(candidates: &[Candidate]) -> String {
    let mut out = String::new();
    for c in candidates {
        writeln!(out, "{}\t{}", c.surface, c.subcategory).expect("string write");
    }
    out
}

pub fn read_candidates_tsv(path: &Path) -> Result<Vec<Candidate>> {
    let content = read_to_string(path)?;
    let mut out = BTreeSet::new();
    for (i, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            bail!(
                "{}:{}: expected `surface<TAB>code`, found {} fields",
                path.display(),
                i + 1,
                fields.len()
            );
        }
        let code: u16 = fields[1].parse().with_context(|| {
            format!(
                "{}:{}: {:?} is not a category code",
                path.display(),
                i + 1,
                fields[1]
            )
        })?;
        let surface = normalize_term(fields[0]);
        if surface.is_empty() {
            bail!("{}:{}: empty term surface", path.display(), i + 1);
        }
        out.insert(Candidate {
            surface,
            subcategory: code,
        });
    }
    Ok(out.into_iter().collect())
}

/// Collapses candidate rows into surface → attributed subcategory codes.
pub fn candidate_attributions(candidates: &[Candidate]) -> BTreeMap<String, BTreeSet<u16>> {
    let mut map: BTreeMap<String, BTreeSet<u16>> = BTreeMap::new();
    for c in candidates {
        map.entry(c.surface.clone())
            .or_default()
            .insert(c.subcategory);
    }
    map
}

// ---------------------------------------------------------------------------
// co-occurrence pairs TSV: seed <tab> other <tab> count
// ---------------------------------------------------------------------------

pub fn write_pairs_tsv(pairs: &[CooccurrencePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        writeln!(out, "{}\t{}\t{}", p.seed_term, p.other_tag, p.count).expect("string write");
    }
    out
}

pub fn read_pairs_tsv(path: &Path) -> Result<Vec<CooccurrencePair>> {
    let content = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            bail!(
                "{}:{}: expected `seed<TAB>other<TAB>count`",
                path.display(),
                i + 1
            );
        }
        let count: u64 = fields[2].parse().with_context(|| {
            format!(
                "{}:{}: {:?} is not a count",
                path.display(),
                i + 1,
                fields[2]
            )
        })?;
        out.push(CooccurrencePair {
            seed_term: normalize_term(fields[0]),
            other_tag: normalize_term(fields[1]),
            count,
        });
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// vector CSV: location,value (deltas, generic correlate inputs)
// ---------------------------------------------------------------------------

pub fn write_vector_csv(values: &BTreeMap<String, f64>) -> String {
    let mut out = String::from("location,value\n");
    for (location, value) in values {
        writeln!(out, "{location},{value}").expect("string write");
    }
    out
}

pub fn read_vector_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let content = read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "location,value" => {}
        _ => bail!("{}: expected header `location,value`", path.display()),
    }
    let mut out = BTreeMap::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((location, value)) = line.split_once(',') else {
            bail!("{}:{}: expected `location,value`", path.display(), i + 1);
        };
        let value: f64 = value.trim().parse().with_context(|| {
            format!("{}:{}: {:?} is not a number", path.display(), i + 1, value)
        })?;
        if out.insert(location.trim().to_string(), value).is_some() {
            bail!(
                "{}:{}: duplicate location {:?}",
                path.display(),
                i + 1,
                location
            );
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// capital CSV: location,kind,value
// ---------------------------------------------------------------------------

pub fn write_capital_csv(vectors: &[&CapitalVector]) -> String {
    let mut rows: Vec<(String, String)> = Vec::new();
    for vector in vectors {
        let kind = vector.kind.to_string();
        for (location, value) in &vector.values {
            rows.push((kind.clone(), format!("{location},{kind},{value}")));
        }
    }
    rows.sort();
    let mut out = String::from("location,kind,value\n");
    for (_, row) in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

/// Reads one kind out of a capital CSV into a location→value map.
pub fn read_capital_csv(path: &Path, kind: &str) -> Result<BTreeMap<String, f64>> {
    let content = read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "location,kind,value" => {}
        _ => bail!("{}: expected header `location,kind,value`", path.display()),
    }
    let mut out = BTreeMap::new();
    let mut seen_kinds = BTreeSet::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!(
                "{}:{}: expected `location,kind,value`",
                path.display(),
                i + 1
            );
        }
        seen_kinds.insert(fields[1].to_string());
        if fields[1] != kind {
            continue;
        }
        let value: f64 = fields[2].parse().with_context(|| {
            format!(
                "{}:{}: {:?} is not a number",
                path.display(),
                i + 1,
                fields[2]
            )
        })?;
        out.insert(fields[0].to_string(), value);
    }
    if out.is_empty() {
        bail!(
            "{}: no rows of kind {kind:?} (present: {:?})",
            path.display(),
            seen_kinds
        );
    }
    Ok(out)
}

/// Reads every `category_<code>` kind out of a capital CSV.
pub fn read_category_capitals(path: &Path) -> Result<BTreeMap<u16, BTreeMap<String, f64>>> {
    let content = read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "location,kind,value" => {}
        _ => bail!("{}: expected header `location,kind,value`", path.display()),
    }
    let mut out: BTreeMap<u16, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!(
                "{}:{}: expected `location,kind,value`",
                path.display(),
                i + 1
            );
        }
        let Some(code_str) = fields[1].strip_prefix("category_") else {
            continue;
        };
        let code: u16 = code_str.parse().with_context(|| {
            format!(
                "{}:{}: bad category kind {:?}",
                path.display(),
                i + 1,
                fields[1]
            )
        })?;
        let value: f64 = fields[2].parse().with_context(|| {
            format!(
                "{}:{}: {:?} is not a number",
                path.display(),
                i + 1,
                fields[2]
            )
        })?;
        out.entry(code)
            .or_default()
            .insert(fields[0].to_string(), value);
    }
    if out.is_empty() {
        bail!("{}: no category_<code> rows found", path.display());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// metric tables
// ---------------------------------------------------------------------------

pub fn write_specialization_csv(spec: &BTreeMap<String, u16>) -> String {
    let mut out = String::from("location,category\n");
    for (location, code) in spec {
        writeln!(out, "{location},{code}").expect("string write");
    }
    out
}

pub fn write_diversity_csv(scores: &BTreeMap<String, DiversityScore>) -> String {
    let mut out = String::from("location,plugin_entropy,correction,diversity\n");
    for (location, score) in scores {
        writeln!(
            out,
            "{location},{},{},{}",
            score.plugin,
            score.correction,
            score.value()
        )
        .expect("string write");
    }
    out
}

pub fn write_monthly_csv(series: &BTreeMap<String, MonthlySeries>) -> String {
    let mut out = String::from("location,month,zscore\n");
    for (location, s) in series {
        for (month, z) in &s.z {
            writeln!(out, "{location},{month},{z}").expect("string write");
        }
    }
    out
}

pub fn write_events_csv(peaks: &[EventPeak]) -> String {
    let mut out = String::from("location,month,zscore,fence,top_terms\n");
    for peak in peaks {
        let terms: Vec<String> = peak
            .top_terms
            .iter()
            .map(|(term, count)| format!("{term}:{count}"))
            .collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            peak.location,
            peak.month,
            peak.value,
            peak.fence,
            terms.join("|")
        )
        .expect("string write");
    }
    out
}

pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("threshold,mean,std,n\n");
    for row in rows {
        let mean = row.mean.map(|v| v.to_string()).unwrap_or_default();
        let std = row.std_dev.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", row.threshold, mean, std, row.retained).expect("string write");
    }
    out
}

pub fn write_silhouette_csv(report: &SilhouetteReport) -> String {
    let mut out = String::from("term,category,value,flag\n");
    for entry in &report.entries {
        let flag = if entry.zero_denominator {
            "zero_denominator"
        } else {
            ""
        };
        writeln!(
            out,
            "{},{},{},{}",
            entry.term, entry.category, entry.value, flag
        )
        .expect("string write");
    }
    for (term, reason) in &report.excluded {
        writeln!(out, "{term},,,excluded: {reason}").expect("string write");
    }
    out
}

pub fn write_category_r2_csv(table: &CategoryModelTable) -> String {
    let mut out = String::from("category,r_squared,n,is_best\n");
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.category,
            row.r_squared,
            row.n,
            table.best == Some(row.category)
        )
        .expect("string write");
    }
    out
}

/// Reads per-location diversity values from either a plain `location,value`
/// CSV or the diversity table (taking its corrected `diversity` column).
pub fn read_diversity_values(path: &Path) -> Result<BTreeMap<String, f64>> {
    let content = read_to_string(path)?;
    let mut lines = content.lines().enumerate();
    let header = lines.next().map(|(_, h)| h.trim()).unwrap_or_default();
    let value_index = match header {
        "location,value" => 1,
        "location,plugin_entropy,correction,diversity" => 3,
        _ => bail!(
            "{}: expected a `location,value` or diversity table header",
            path.display()
        ),
    };
    let mut out = BTreeMap::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() <= value_index {
            bail!("{}:{}: too few columns", path.display(), i + 1);
        }
        let value: f64 = fields[value_index].parse().with_context(|| {
            format!(
                "{}:{}: {:?} is not a number",
                path.display(),
                i + 1,
                fields[value_index]
            )
        })?;
        out.insert(fields[0].to_string(), value);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// terms with attributions (threshold / clean stage output)
// ---------------------------------------------------------------------------

pub fn write_term_attributions(map: &BTreeMap<String, BTreeSet<u16>>) -> String {
    let mut out = String::new();
    for (surface, codes) in map {
        for code in codes {
            writeln!(out, "{surface}\t{code}").expect("string write");
        }
    }
    out
}
