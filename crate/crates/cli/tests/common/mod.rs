//! Deterministic fixture city and synthetic taxonomy-pipeline inputs shared
//! by the CLI integration tests and the acceptance suite.

// Not every test binary uses every fixture helper.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Output;

use culturank_core::taxonomy::{save_taxonomy, Taxonomy};
use culturank_testkit::rng::Rng;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Days from 1970-01-01 to y-m-d (civil calendar).
pub fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

pub fn month_start(year: i64, month: i64) -> i64 {
    days_from_civil(year, month, 1) * SECONDS_PER_DAY
}

pub fn run_culturank(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_culturank"));
    cmd.args(args);
    cmd.env_remove("CULTURANK_CONFIG");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

pub fn parse_summary(output: &Output) -> serde_json::Value {
    let stdout = String::from_utf8_lossy(&output.stdout);
    let line = stdout.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| {
        panic!("summary is not JSON ({e}): {stdout:?}");
    })
}

// ---------------------------------------------------------------------------
// fixture city (records + neighborhoods + census + taxonomy)
// ---------------------------------------------------------------------------

pub struct FixtureCity {
    pub records: PathBuf,
    pub neighborhoods: PathBuf,
    pub census: PathBuf,
    pub taxonomy: PathBuf,
}

/// Representative subcategory per macro category.
pub const MACRO_SUBCAT: [(u16, u16); 9] = [
    (100, 101),
    (200, 200),
    (300, 300),
    (400, 400),
    (500, 501),
    (600, 601),
    (700, 700),
    (800, 801),
    (900, 901),
];

pub fn cultural_term(macro_code: u16, variant: char) -> String {
    format!("cult_{macro_code}_{variant}")
}

/// Writes a synthetic city: `locations` unit-square neighborhoods in a row,
/// seeded records with planted per-location cultural fractions and category
/// mixes, one event spike, local users plus short-span tourists, and a
/// census table.
pub fn write_fixture_city(dir: &Path, locations: usize, seed: u64) -> FixtureCity {
    let mut rng = Rng::new(seed);

    // Neighborhoods: unit squares at x = 2i.
    let features: Vec<String> = (0..locations)
        .map(|i| {
            let x = 2.0 * i as f64;
            format!(
                r#"{{"type":"Feature","properties":{{"id":"n{i:02}","name":"Hood {i}"}},"geometry":{{"type":"Polygon","coordinates":[[[{x0},0.0],[{x1},0.0],[{x1},1.0],[{x0},1.0],[{x0},0.0]]]}}}}"#,
                x0 = x,
                x1 = x + 1.0,
            )
        })
        .collect();
    let geojson = format!(
        "{{\"type\":\"FeatureCollection\",\"features\":[{}]}}\n",
        features.join(",")
    );
    let neighborhoods = dir.join("city.geojson");
    std::fs::write(&neighborhoods, geojson).unwrap();

    // Taxonomy: two terms per macro category.
    let mut tax = Taxonomy::seed_categories();
    for (macro_code, subcat) in MACRO_SUBCAT {
        for variant in ['a', 'b'] {
            tax.insert_term(&cultural_term(macro_code, variant), subcat)
                .unwrap();
        }
    }
    let taxonomy = dir.join("taxonomy.json");
    save_taxonomy(&tax, &taxonomy).unwrap();

    // Records: 2010-01 .. 2011-12, three local users and one tourist per
    // location.
    let mut ndjson = String::new();
    let mut record_id = 0usize;
    let months: Vec<(i64, i64)> = (0..24).map(|k| (2010 + k / 12, 1 + k % 12)).collect();
    for loc in 0..locations {
        let p_cultural = 0.1 + 0.8 * loc as f64 / (locations.max(2) - 1) as f64;
        let favored = MACRO_SUBCAT[loc % 9].0;
        for (year, month) in &months {
            let base = month_start(*year, *month);
            // Extra burst in n00 on 2011-06: the planted event.
            let burst = if loc == 0 && *year == 2011 && *month == 6 {
                40
            } else {
                0
            };
            for k in 0..(10 + burst) {
                // Two records per month come from short-span tourists that
                // the local filter must drop.
                let user = if k == 8 || k == 9 {
                    format!("tourist_{loc}_{year}_{month}")
                } else {
                    format!("local_{loc}_{}", k % 3)
                };
                let ts = base
                    + rng.range_usize(0, 27) as i64 * SECONDS_PER_DAY
                    + rng.range_usize(0, SECONDS_PER_DAY as usize) as i64;
                let lon = 2.0 * loc as f64 + rng.range_f64(0.05, 0.95);
                let lat = rng.range_f64(0.05, 0.95);
                let mut tags = vec![format!("noise_{}", rng.range_usize(0, 40))];
                let cultural = burst > 0 || rng.next_f64() < p_cultural;
                if cultural {
                    let macro_code = if burst > 0 || rng.next_f64() < 0.6 {
                        favored
                    } else {
                        MACRO_SUBCAT[rng.range_usize(0, 9)].0
                    };
                    let variant = if rng.next_f64() < 0.5 { 'a' } else { 'b' };
                    tags.push(cultural_term(macro_code, variant));
                } else {
                    tags.push(format!("noise_{}", rng.range_usize(40, 80)));
                }
                let tags_json: Vec<String> = tags.iter().map(|t| format!("{t:?}")).collect();
                writeln!(
                    ndjson,
                    r#"{{"id":"r{record_id}","user_id":"{user}","timestamp":{ts},"lat":{lat:.6},"lon":{lon:.6},"tags":[{tags}]}}"#,
                    tags = tags_json.join(","),
                )
                .unwrap();
                record_id += 1;
            }
        }
    }
    let records = dir.join("records.ndjson");
    std::fs::write(&records, ndjson).unwrap();

    // Census: income rising with the location index, dev and house price
    // loosely tied to it.
    let mut census = String::from("location,year,income,dev,house_price\n");
    for loc in 0..locations {
        for year in [2010u16, 2012, 2014] {
            let income = 20_000.0
                + 900.0 * loc as f64
                + 120.0 * (year - 2010) as f64
                + rng.range_f64(-150.0, 150.0);
            writeln!(census, "n{loc:02},{year},{income:.2},,").unwrap();
        }
        let dev_2010 = 40.0 - 0.7 * loc as f64 + rng.range_f64(-1.0, 1.0);
        let dev_2015 = dev_2010 - 0.2 * loc as f64 + rng.range_f64(-1.0, 1.0);
        writeln!(census, "n{loc:02},2010,,{dev_2010:.3},").unwrap();
        writeln!(census, "n{loc:02},2015,,{dev_2015:.3},").unwrap();
        for year in [2011u16, 2013] {
            let house = 150_000.0 + 4_000.0 * loc as f64 + rng.range_f64(-2_000.0, 2_000.0);
            writeln!(census, "n{loc:02},{year},,,{house:.2}").unwrap();
        }
    }
    // 2010 and 2015 rows already exist for dev; merge income rows wrote
    // separate lines, so rebuild with unique (location, year) pairs instead.
    let census_path = dir.join("census.csv");
    std::fs::write(&census_path, merge_census_rows(&census)).unwrap();

    FixtureCity {
        records,
        neighborhoods,
        census: census_path,
        taxonomy,
    }
}

/// The generator above emits income/dev/house rows separately; the census
/// loader requires unique (location, year) rows, so merge them.
fn merge_census_rows(raw: &str) -> String {
    let mut merged: BTreeMap<(String, u16), [String; 3]> = BTreeMap::new();
    for line in raw.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let key = (fields[0].to_string(), fields[1].parse::<u16>().unwrap());
        let entry = merged
            .entry(key)
            .or_insert_with(|| [String::new(), String::new(), String::new()]);
        for (i, value) in fields[2..].iter().enumerate() {
            if !value.is_empty() {
                entry[i] = value.to_string();
            }
        }
    }
    let mut out = String::from("location,year,income,dev,house_price\n");
    for ((location, year), [income, dev, house]) in merged {
        writeln!(out, "{location},{year},{income},{dev},{house}").unwrap();
    }
    out
}

// ---------------------------------------------------------------------------
// synthetic taxonomy-pipeline world (concept graph, lexical graph, records,
// decisions, labels)
// ---------------------------------------------------------------------------

pub struct TaxonomyWorld {
    pub edges: PathBuf,
    pub titles: PathBuf,
    pub stoplist: PathBuf,
    pub decisions: PathBuf,
    pub labels: PathBuf,
    pub lexgraph: PathBuf,
    pub records: PathBuf,
    /// Co-occurrence threshold that separates planted keep-tags from
    /// drop-tags.
    pub threshold: u64,
    /// Terms planted to survive the full pipeline, per macro code.
    pub planted_keepers: Vec<(String, u16)>,
}

/// Builds a ~200-node concept graph around the 25 seed subcategories, a
/// lexical graph clustered by macro category, and 10,000 records with
/// planted co-occurrence structure.
pub fn write_taxonomy_world(dir: &Path, seed: u64) -> TaxonomyWorld {
    use culturank_core::taxonomy::SUBCATEGORIES;
    let mut rng = Rng::new(seed);

    let slug = |label: &str| culturank_core::text::slugify(label);

    // Concept graph: every subcategory node, six article neighbors each,
    // plus community pages and one ambiguous stoplisted node.
    let mut titles = String::new();
    let mut edges = String::new();
    for (code, label) in SUBCATEGORIES {
        writeln!(titles, "{}\t{}", slug(label), label).unwrap();
        for i in 0..6 {
            let id = format!("term_{code}_{i}");
            writeln!(titles, "{id}\tTerm_{code}_{i}").unwrap();
            writeln!(edges, "{}\t{id}", slug(label)).unwrap();
        }
    }
    for i in 0..20 {
        let id = format!("community_{i}");
        writeln!(titles, "{id}\tTemplate:Helper {i}").unwrap();
        let (_, label) = SUBCATEGORIES[i % 25];
        writeln!(edges, "{}\t{id}", slug(label)).unwrap();
    }
    // An ambiguous page linked to two subcategories, removed via stoplist.
    writeln!(titles, "colorish\tColorish").unwrap();
    writeln!(edges, "{}\tcolorish", slug("Arts")).unwrap();
    writeln!(edges, "{}\tcolorish", slug("Crafts")).unwrap();
    let titles_path = dir.join("titles.tsv");
    let edges_path = dir.join("edges.tsv");
    std::fs::write(&titles_path, titles).unwrap();
    std::fs::write(&edges_path, edges).unwrap();
    let stoplist_path = dir.join("stoplist.txt");
    std::fs::write(&stoplist_path, "colorish\n").unwrap();

    // Decisions: keep term_<code>_{0..3} with rotating P classes, reject
    // term_<code>_4, leave term_<code>_5 undecided.
    let classes = ["process", "place", "person", "product"];
    let mut decisions = String::new();
    for (code, _) in SUBCATEGORIES {
        for i in 0..4 {
            writeln!(decisions, "term_{code}_{i}\t{}", classes[i % 4]).unwrap();
        }
        writeln!(decisions, "term_{code}_4\treject").unwrap();
    }
    let decisions_path = dir.join("decisions.tsv");
    std::fs::write(&decisions_path, decisions).unwrap();

    // Records with planted co-occurrences. Keep-tags ride with a seed term
    // well above the threshold; drop-tags stay below it.
    let threshold = 400u64;
    let chosen: Vec<u16> = vec![101, 200, 403, 601, 901];
    let mut planted_keepers = Vec::new();
    let mut ndjson = String::new();
    let mut record_id = 0usize;
    let push_record = |rng: &mut Rng, tags: &[String], ndjson: &mut String, id: &mut usize| {
        let ts = month_start(2010, 1)
            + rng.range_usize(0, 700) as i64 * SECONDS_PER_DAY
            + rng.range_usize(0, 80_000) as i64;
        let tags_json: Vec<String> = tags.iter().map(|t| format!("{t:?}")).collect();
        writeln!(
            ndjson,
            r#"{{"id":"p{id}","user_id":"u{u}","timestamp":{ts},"lat":0.5,"lon":0.5,"tags":[{tags}]}}"#,
            id = *id,
            u = rng.range_usize(0, 50),
            tags = tags_json.join(","),
        )
        .unwrap();
        *id += 1;
    };
    for &code in &chosen {
        let seed_term = format!("term_{code}_0");
        let keep = format!("flickr_{code}_keep");
        let drop = format!("flickr_{code}_drop");
        let macro_code = code / 100 * 100;
        planted_keepers.push((keep.clone(), macro_code));
        for _ in 0..(threshold + 150) {
            let tags = vec![seed_term.clone(), keep.clone()];
            push_record(&mut rng, &tags, &mut ndjson, &mut record_id);
        }
        for _ in 0..(threshold / 4) {
            let tags = vec![seed_term.clone(), drop.clone()];
            push_record(&mut rng, &tags, &mut ndjson, &mut record_id);
        }
    }
    while record_id < 10_000 {
        let tags = vec![
            format!("noise_{}", rng.range_usize(0, 200)),
            format!("noise_{}", rng.range_usize(200, 400)),
        ];
        push_record(&mut rng, &tags, &mut ndjson, &mut record_id);
    }
    let records_path = dir.join("photo_records.ndjson");
    std::fs::write(&records_path, ndjson).unwrap();

    // Labels: strong agreement for keep-tags except flickr_403_keep, which
    // annotators reject (agreement 0.4 < 0.75).
    let mut labels = String::new();
    for (term, _) in &planted_keepers {
        let positives = if term == "flickr_403_keep" { 8 } else { 19 };
        for i in 0..20 {
            writeln!(labels, "{term}\tphoto{i}\t{}", u8::from(i < positives)).unwrap();
        }
    }
    let labels_path = dir.join("labels.tsv");
    std::fs::write(&labels_path, labels).unwrap();

    // Lexical graph: one hub per macro category, members two hops apart
    // inside a cluster; hubs chained so clusters sit far apart.
    let mut lex = String::new();
    let macro_codes: Vec<u16> = (1..=9).map(|m| m * 100).collect();
    for (i, &m) in macro_codes.iter().enumerate() {
        writeln!(lex, "C\thub_{m}").unwrap();
        if i > 0 {
            // Two relay nodes between consecutive hubs keep inter-cluster
            // distances comfortably above intra-cluster ones.
            writeln!(lex, "C\trelay_a_{m}").unwrap();
            writeln!(lex, "C\trelay_b_{m}").unwrap();
            writeln!(lex, "E\thub_{}\trelay_a_{m}", macro_codes[i - 1]).unwrap();
            writeln!(lex, "E\trelay_a_{m}\trelay_b_{m}").unwrap();
            writeln!(lex, "E\trelay_b_{m}\thub_{m}").unwrap();
        }
    }
    for (code, _) in SUBCATEGORIES {
        let macro_code = code / 100 * 100;
        for i in 0..6 {
            let concept = format!("c_term_{code}_{i}");
            writeln!(lex, "C\t{concept}").unwrap();
            writeln!(lex, "E\t{concept}\thub_{macro_code}").unwrap();
            writeln!(lex, "L\tterm_{code}_{i}\t{concept}").unwrap();
        }
    }
    for &code in &chosen {
        let macro_code = code / 100 * 100;
        for suffix in ["keep", "drop"] {
            let concept = format!("c_flickr_{code}_{suffix}");
            writeln!(lex, "C\t{concept}").unwrap();
            writeln!(lex, "E\t{concept}\thub_{macro_code}").unwrap();
            writeln!(lex, "L\tflickr_{code}_{suffix}\t{concept}").unwrap();
        }
    }
    let lexgraph_path = dir.join("lexgraph.tsv");
    std::fs::write(&lexgraph_path, lex).unwrap();

    TaxonomyWorld {
        edges: edges_path,
        titles: titles_path,
        stoplist: stoplist_path,
        decisions: decisions_path,
        labels: labels_path,
        lexgraph: lexgraph_path,
        records: records_path,
        threshold,
        planted_keepers,
    }
}
