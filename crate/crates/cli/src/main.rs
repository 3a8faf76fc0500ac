//! `culturank` — command-line front end wiring the pipeline stages
//! together: taxonomy construction, record assignment, capital /
//! specialization / diversity metrics, regressions, event detection, and an
//! SVG choropleth.
//!
//! Every subcommand prints a one-line machine-readable JSON summary to
//! standard output (command, status, effective configuration, output files,
//! and a small report). Exit codes: 0 success, 1 validation error, 2 I/O
//! error, 64 usage error.

mod choropleth;
mod config;
mod files;
mod pipeline;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use culturank_core::concept_graph::load_concept_graph;
use culturank_core::ingest::{
    assign_records, load_census, load_neighborhoods, load_records, CensusMetric, LocalMode,
};
use culturank_core::lexsim::{load_lexgraph, DepthMode, LexGraph};
use culturank_core::metrics::{
    self, all_category_capitals, cultural_capital, detect_events, diversity_all, economic_capital,
    monthly_capital, penetration, specialization, MonthlyDenominator,
};
use culturank_core::stats::{
    delta, model_category_house, model_development, model_house_price, pearson, ModelFit,
    StarThresholds,
};
use culturank_core::taxonomy::{
    agreement_clean, apply_isa_decisions, apply_threshold, attach_terms, expand_subcategories,
    load_stoplist, load_taxonomy, mine_cooccurrences, save_taxonomy, silhouette, threshold_sweep,
    CategoryCode, Taxonomy,
};

use config::{Config, Resolver};

#[derive(Parser)]
#[command(
    name = "culturank",
    version,
    about = "Neighborhood cultural-capital analytics over geo-tagged media records"
)]
struct Cli {
    /// Config file in key=value format (default: $CULTURANK_CONFIG).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages; results are identical for any
    /// worker count.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Directory for default output files.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the seed subcategories one hop through a concept graph into
    /// term candidates.
    TaxonomyExpand {
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        titles: Option<PathBuf>,
        #[arg(long)]
        stoplist: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter candidates with an 'is-a' decisions file (process / place /
    /// person / product / reject).
    TaxonomyIsa {
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mine photo-level tag co-occurrences against seed terms.
    TaxonomyCooccur {
        #[arg(long)]
        records: Option<PathBuf>,
        /// Seed terms file (surface <tab> subcategory code).
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep co-occurrence thresholds and report mean pair similarity.
    TaxonomySweep {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        lexgraph: Option<PathBuf>,
        /// Similarity depth: an integer or "exact".
        #[arg(long)]
        depth: Option<String>,
        #[arg(long, default_value_t = 100)]
        t_min: u64,
        #[arg(long, default_value_t = 2500)]
        t_max: u64,
        #[arg(long, default_value_t = 100)]
        step: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep co-tags at or above a count threshold as new term candidates.
    TaxonomyThreshold {
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Count threshold (inclusive).
        #[arg(long)]
        count: Option<u64>,
        /// Also emit the seed terms themselves.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
        include_seeds: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clean terms against photo-agreement labels; optionally attach the
    /// survivors into a final taxonomy JSON.
    TaxonomyClean {
        #[arg(long)]
        terms: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        min_agreement: Option<f64>,
        #[arg(long)]
        lexgraph: Option<PathBuf>,
        #[arg(long)]
        depth: Option<String>,
        /// Write the attached three-level taxonomy here (requires
        /// --lexgraph).
        #[arg(long)]
        taxonomy_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-term silhouette of a term set grouped by macro category.
    TaxonomySilhouette {
        /// Term attribution TSV (surface <tab> code).
        #[arg(long, conflicts_with = "taxonomy")]
        terms: Option<PathBuf>,
        /// Taxonomy JSON whose leaf terms should be scored.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        lexgraph: Option<PathBuf>,
        #[arg(long)]
        depth: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assign records to neighborhoods (point-in-polygon).
    Assign {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cultural capital and penetration (plus economic capital when a
    /// census file is given).
    Capital {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        census: Option<PathBuf>,
        /// Income year or inclusive range, e.g. 2010 or 2010:2014.
        #[arg(long)]
        income_years: Option<String>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-category cultural capital vectors.
    CategoryCapital {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cultural specialization (argmax category) per location.
    Specialize {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bias-corrected Shannon diversity per location.
    Diversity {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monthly cultural-capital z series per location.
    Monthly {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        /// Monthly fraction denominator: all | cultural.
        #[arg(long)]
        denominator: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Event peaks: months over the upper Tukey fence of their location's
    /// series.
    Events {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        local_mode: Option<String>,
        #[arg(long)]
        local_days: Option<u32>,
        #[arg(long)]
        denominator: Option<String>,
        /// Fence multiplier k in Q3 + k*IQR.
        #[arg(long)]
        fence: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Development model: dev ~ cultural + economic capital (+ extras).
    RegressDev {
        /// Capital CSV carrying `cultural` and `economic` rows.
        #[arg(long)]
        capital: Option<PathBuf>,
        #[arg(long)]
        census: Option<PathBuf>,
        /// Census year whose `dev` column is the response.
        #[arg(long, conflicts_with = "response")]
        dev_year: Option<u16>,
        /// Alternative response file (location,value CSV), e.g. a delta
        /// table.
        #[arg(long)]
        response: Option<PathBuf>,
        /// Comma-separated extras: penetration,diversity.
        #[arg(long)]
        extras: Option<String>,
        /// Diversity table (for --extras diversity).
        #[arg(long)]
        diversity: Option<PathBuf>,
        /// Output prefix; writes <prefix>.csv and <prefix>.txt.
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// House-price model: z-scored house price ~ cultural + economic
    /// capital.
    RegressHouse {
        #[arg(long)]
        capital: Option<PathBuf>,
        #[arg(long)]
        census: Option<PathBuf>,
        /// House-price year or inclusive range averaged per location.
        #[arg(long)]
        house_years: Option<String>,
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// One house-price model per macro category; reports R² per category.
    RegressCategory {
        /// Capital CSV carrying category_<code> rows.
        #[arg(long)]
        category_capital: Option<PathBuf>,
        /// Capital CSV carrying the `economic` rows.
        #[arg(long)]
        capital: Option<PathBuf>,
        #[arg(long)]
        census: Option<PathBuf>,
        #[arg(long)]
        house_years: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-location difference of a census metric between two years.
    Delta {
        #[arg(long)]
        census: Option<PathBuf>,
        /// Metric: dev | income | house_price.
        #[arg(long, default_value = "dev")]
        metric: String,
        #[arg(long)]
        year1: u16,
        #[arg(long)]
        year2: u16,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson correlation between two location,value CSVs.
    Correlate {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quartile-shaded SVG map of one capital kind.
    Choropleth {
        #[arg(long)]
        capital: Option<PathBuf>,
        /// Which kind to map (cultural, economic, penetration,
        /// category_<code>).
        #[arg(long, default_value = "cultural")]
        kind: String,
        #[arg(long)]
        neighborhoods: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::TaxonomyExpand { .. } => "taxonomy-expand",
        Command::TaxonomyIsa { .. } => "taxonomy-isa",
        Command::TaxonomyCooccur { .. } => "taxonomy-cooccur",
        Command::TaxonomySweep { .. } => "taxonomy-sweep",
        Command::TaxonomyThreshold { .. } => "taxonomy-threshold",
        Command::TaxonomyClean { .. } => "taxonomy-clean",
        Command::TaxonomySilhouette { .. } => "taxonomy-silhouette",
        Command::Assign { .. } => "assign",
        Command::Capital { .. } => "capital",
        Command::CategoryCapital { .. } => "category-capital",
        Command::Specialize { .. } => "specialize",
        Command::Diversity { .. } => "diversity",
        Command::Monthly { .. } => "monthly",
        Command::Events { .. } => "events",
        Command::RegressDev { .. } => "regress-dev",
        Command::RegressHouse { .. } => "regress-house",
        Command::RegressCategory { .. } => "regress-category",
        Command::Delta { .. } => "delta",
        Command::Correlate { .. } => "correlate",
        Command::Choropleth { .. } => "choropleth",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = command_name(&cli.command);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let is_io = err
                .chain()
                .any(|cause| cause.downcast_ref::<std::io::Error>().is_some());
            let payload = serde_json::json!({
                "command": name,
                "status": "error",
                "message": format!("{err:#}"),
            });
            println!("{payload}");
            eprintln!("error: {err:#}");
            ExitCode::from(if is_io { 2 } else { 1 })
        }
    }
}

/// One run's context: resolved globals plus the summary accumulator.
struct Ctx<'c> {
    resolver: Resolver<'c>,
    workers: usize,
    out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl<'c> Ctx<'c> {
    fn out_path(&mut self, flag: Option<PathBuf>, default_name: &str) -> PathBuf {
        let path = flag.unwrap_or_else(|| self.out_dir.join(default_name));
        self.outputs.push(path.clone());
        path
    }

    fn finish(self, command: &str, report: serde_json::Value) {
        let payload = serde_json::json!({
            "command": command,
            "status": "ok",
            "effective_config": self.resolver.effective.to_json(),
            "outputs": self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>(),
            "report": report,
        });
        println!("{payload}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    let mut resolver = Resolver::new(&config);
    let workers = resolver.u64_value("workers", cli.workers.map(|w| w as u64), 1)? as usize;
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let out_dir = resolver
        .optional_path("out_dir", cli.out_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx {
        resolver,
        workers,
        out_dir,
        outputs: Vec::new(),
    };
    let name = command_name(&cli.command);
    dispatch(cli.command, ctx, name)
}

fn dispatch(command: Command, mut ctx: Ctx, name: &str) -> Result<()> {
    match command {
        Command::TaxonomyExpand {
            edges,
            titles,
            stoplist,
            out,
        } => {
            let edges = ctx.resolver.required_path("edges", edges)?;
            let titles = ctx.resolver.required_path("titles", titles)?;
            let stoplist = match ctx.resolver.optional_path("stoplist", stoplist) {
                Some(path) => load_stoplist(&path)?,
                None => BTreeSet::new(),
            };
            let graph = load_concept_graph(&edges, &titles)?;
            let tax = Taxonomy::seed_categories();
            let candidates = expand_subcategories(&tax, &graph, &stoplist)?;
            let out = ctx.out_path(out, "candidates.tsv");
            files::write_file(&out, &files::write_candidates_tsv(&candidates))?;
            let surfaces: BTreeSet<&str> = candidates.iter().map(|c| c.surface.as_str()).collect();
            ctx.finish(
                name,
                serde_json::json!({
                    "graph_nodes": graph.node_count(),
                    "graph_edges": graph.edge_count(),
                    "candidate_rows": candidates.len(),
                    "unique_surfaces": surfaces.len(),
                }),
            );
        }
        Command::TaxonomyIsa {
            candidates,
            decisions,
            out,
        } => {
            let candidates_path = ctx.resolver.required_path("candidates", candidates)?;
            let decisions = ctx.resolver.required_path("decisions", decisions)?;
            let candidates = files::read_candidates_tsv(&candidates_path)?;
            let outcome = apply_isa_decisions(&candidates, &decisions)?;
            let out = ctx.out_path(out, "candidates_isa.tsv");
            files::write_file(&out, &files::write_candidates_tsv(&outcome.kept))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "kept_rows": outcome.kept.len(),
                    "rejected_surfaces": outcome.rejected.len(),
                    "missing_surfaces": outcome.missing,
                }),
            );
        }
        Command::TaxonomyCooccur {
            records,
            seeds,
            out,
        } => {
            let records_path = ctx.resolver.required_path("records", records)?;
            let seeds_path = ctx.resolver.required_path("seeds", seeds)?;
            let loaded = load_records(&records_path)?;
            let seeds: BTreeSet<String> = files::read_candidates_tsv(&seeds_path)?
                .into_iter()
                .map(|c| c.surface)
                .collect();
            if seeds.is_empty() {
                bail!("seed file {} holds no terms", seeds_path.display());
            }
            let tag_sets = loaded.records.iter().map(|r| &r.tags);
            let pairs = mine_cooccurrences(tag_sets, &seeds, ctx.workers);
            let out = ctx.out_path(out, "pairs.tsv");
            files::write_file(&out, &files::write_pairs_tsv(&pairs))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "records": loaded.records.len(),
                    "records_skipped": loaded.skipped,
                    "seed_terms": seeds.len(),
                    "pairs": pairs.len(),
                }),
            );
        }
        Command::TaxonomySweep {
            pairs,
            lexgraph,
            depth,
            t_min,
            t_max,
            step,
            out,
        } => {
            let pairs_path = ctx.resolver.required_path("pairs", pairs)?;
            let lex_path = ctx.resolver.required_path("lexgraph", lexgraph)?;
            let pairs = files::read_pairs_tsv(&pairs_path)?;
            let lex = load_lexgraph(&lex_path)?;
            let depth = resolve_depth(&mut ctx, &lex, depth)?;
            ctx.resolver.effective.record("t_min", t_min);
            ctx.resolver.effective.record("t_max", t_max);
            ctx.resolver.effective.record("step", step);
            let rows = threshold_sweep(&pairs, &lex, depth, t_min, t_max, step)?;
            let out = ctx.out_path(out, "sweep.csv");
            files::write_file(&out, &files::write_sweep_csv(&rows))?;
            ctx.finish(
                name,
                serde_json::json!({ "rows": rows.len(), "pairs": pairs.len() }),
            );
        }
        Command::TaxonomyThreshold {
            pairs,
            seeds,
            count,
            include_seeds,
            out,
        } => {
            let pairs_path = ctx.resolver.required_path("pairs", pairs)?;
            let seeds_path = ctx.resolver.required_path("seeds", seeds)?;
            let threshold = ctx.resolver.u64_value("cooccur_threshold", count, 2000)?;
            ctx.resolver
                .effective
                .record("include_seeds", include_seeds);
            let pairs = files::read_pairs_tsv(&pairs_path)?;
            let seed_candidates = files::read_candidates_tsv(&seeds_path)?;
            let seed_attributions = files::candidate_attributions(&seed_candidates);

            let retained = apply_threshold(&pairs, threshold);
            let mut attributions: BTreeMap<String, BTreeSet<u16>> = BTreeMap::new();
            for (term, seed_terms) in &retained {
                let mut codes = BTreeSet::new();
                for seed in seed_terms {
                    if let Some(seed_codes) = seed_attributions.get(seed) {
                        codes.extend(seed_codes.iter().copied());
                    }
                }
                if !codes.is_empty() {
                    attributions.insert(term.clone(), codes);
                }
            }
            let new_terms = attributions.len();
            if include_seeds {
                for (seed, codes) in &seed_attributions {
                    attributions
                        .entry(seed.clone())
                        .or_default()
                        .extend(codes.iter().copied());
                }
            }
            let out = ctx.out_path(out, "terms.tsv");
            files::write_file(&out, &files::write_term_attributions(&attributions))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "threshold": threshold,
                    "retained_pairs": retained.len(),
                    "new_terms": new_terms,
                    "terms_out": attributions.len(),
                }),
            );
        }
        Command::TaxonomyClean {
            terms,
            labels,
            min_agreement,
            lexgraph,
            depth,
            taxonomy_out,
            out,
        } => {
            let terms_path = ctx.resolver.required_path("terms", terms)?;
            let labels_path = ctx.resolver.required_path("labels", labels)?;
            let min_agreement =
                ctx.resolver
                    .f64_value("agreement_threshold", min_agreement, 0.75)?;
            // Resolve and load every input before any output is written.
            let attach_inputs = match &taxonomy_out {
                Some(_) => {
                    let lex_path = ctx.resolver.required_path("lexgraph", lexgraph)?;
                    let lex = load_lexgraph(&lex_path)?;
                    let depth = resolve_depth(&mut ctx, &lex, depth)?;
                    Some((lex, depth))
                }
                None => None,
            };
            let term_rows = files::read_candidates_tsv(&terms_path)?;
            let attributions = files::candidate_attributions(&term_rows);
            let term_set: BTreeSet<String> = attributions.keys().cloned().collect();
            let outcome = agreement_clean(&term_set, &labels_path, min_agreement)?;
            let cleaned: BTreeMap<String, BTreeSet<u16>> = attributions
                .into_iter()
                .filter(|(term, _)| outcome.kept.contains(term))
                .collect();
            let out = ctx.out_path(out, "terms_clean.tsv");
            files::write_file(&out, &files::write_term_attributions(&cleaned))?;

            let mut taxonomy_terms = 0usize;
            if let (Some(tax_out), Some((lex, depth))) = (taxonomy_out, attach_inputs) {
                let tax = attach_terms(&cleaned, &Taxonomy::seed_categories(), &lex, depth)?;
                taxonomy_terms = tax.terms().len();
                save_taxonomy(&tax, &tax_out)?;
                ctx.outputs.push(tax_out);
            }
            ctx.finish(
                name,
                serde_json::json!({
                    "terms_in": term_set.len(),
                    "kept": outcome.kept.len(),
                    "dropped": outcome.dropped,
                    "unlabeled_kept": outcome.unlabeled,
                    "taxonomy_terms": taxonomy_terms,
                }),
            );
        }
        Command::TaxonomySilhouette {
            terms,
            taxonomy,
            lexgraph,
            depth,
            out,
        } => {
            let lex_path = ctx.resolver.required_path("lexgraph", lexgraph)?;
            let lex = load_lexgraph(&lex_path)?;
            let depth = resolve_depth(&mut ctx, &lex, depth)?;
            let scored_terms: Vec<(String, u16)> =
                if let Some(tax_path) = ctx.resolver.optional_path("taxonomy", taxonomy) {
                    let tax = load_taxonomy(&tax_path)?;
                    tax.terms()
                        .iter()
                        .map(|(surface, &parent)| {
                            (
                                surface.clone(),
                                CategoryCode::new(parent).expect("validated").macro_code(),
                            )
                        })
                        .collect()
                } else if let Some(terms_path) = terms {
                    ctx.resolver
                        .effective
                        .record("terms", terms_path.display().to_string());
                    files::read_candidates_tsv(&terms_path)?
                        .into_iter()
                        .map(|c| {
                            let macro_code = CategoryCode::new(c.subcategory)
                                .map(|code| code.macro_code())
                                .unwrap_or(c.subcategory);
                            (c.surface, macro_code)
                        })
                        .collect()
                } else {
                    bail!("pass --terms or --taxonomy");
                };
            let report = silhouette(&scored_terms, &lex, depth)?;
            let out = ctx.out_path(out, "silhouette.csv");
            files::write_file(&out, &files::write_silhouette_csv(&report))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "scored": report.entries.len(),
                    "excluded": report.excluded.len(),
                    "q1": report.summary.q1,
                    "median": report.summary.median,
                    "q3": report.summary.q3,
                }),
            );
        }
        Command::Assign {
            records,
            neighborhoods,
            out,
        } => {
            let records_path = ctx.resolver.required_path("records", records)?;
            let hoods_path = ctx.resolver.required_path("neighborhoods", neighborhoods)?;
            let loaded = load_records(&records_path)?;
            let hoods = load_neighborhoods(&hoods_path)?;
            let assignments = assign_records(&loaded.records, &hoods, ctx.workers);
            let mut ndjson = String::new();
            let mut assigned = 0usize;
            for (record, location) in loaded.records.iter().zip(&assignments) {
                if location.is_some() {
                    assigned += 1;
                }
                let line = serde_json::json!({
                    "id": record.id,
                    "user_id": record.user_id,
                    "timestamp": record.timestamp,
                    "lat": record.lat,
                    "lon": record.lon,
                    "tags": record.tags.iter().collect::<Vec<_>>(),
                    "location": location,
                });
                ndjson.push_str(&line.to_string());
                ndjson.push('\n');
            }
            let out = ctx.out_path(out, "assigned.ndjson");
            files::write_file(&out, &ndjson)?;
            ctx.finish(
                name,
                serde_json::json!({
                    "records": loaded.records.len(),
                    "records_skipped": loaded.skipped,
                    "assigned": assigned,
                    "unassigned": loaded.records.len() - assigned,
                    "neighborhoods": hoods.len(),
                }),
            );
        }
        Command::Capital {
            records,
            neighborhoods,
            taxonomy,
            census,
            income_years,
            local_mode,
            local_days,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let (cultural, excluded) = cultural_capital(&pipe.stats)?;
            let mut vectors = vec![&cultural];
            let mut skipped_kinds: Vec<String> = Vec::new();
            // Penetration is a control vector; a degenerate one should not
            // block the capital table.
            let pen = penetration(&pipe.stats);
            match &pen {
                Ok(vector) => vectors.push(vector),
                Err(e) => skipped_kinds.push(format!("penetration: {e}")),
            }
            let economic;
            let mut missing_income: Vec<String> = Vec::new();
            if let Some(census_path) = ctx.resolver.optional_path("census", census) {
                let years = income_years.ok_or_else(|| anyhow!("--census needs --income-years"))?;
                let (from, to) = parse_year_range(&years)?;
                ctx.resolver
                    .effective
                    .record("income_years", format!("{from}:{to}"));
                let table = load_census(&census_path)?;
                let (vector, missing) = economic_capital(&table, from, to)?;
                economic = vector;
                missing_income = missing;
                vectors.push(&economic);
            }
            let out = ctx.out_path(out, "capital.csv");
            files::write_file(&out, &files::write_capital_csv(&vectors))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "kinds": vectors.iter().map(|v| v.kind.to_string()).collect::<Vec<_>>(),
                    "skipped_kinds": skipped_kinds,
                    "excluded_no_tags": excluded,
                    "excluded_no_income": missing_income,
                }),
            );
        }
        Command::CategoryCapital {
            records,
            neighborhoods,
            taxonomy,
            local_mode,
            local_days,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let (vectors, skipped) = all_category_capitals(&pipe.stats);
            if vectors.is_empty() {
                bail!("no category capital is computable: {skipped:?}");
            }
            let refs: Vec<&metrics::CapitalVector> = vectors.values().collect();
            let out = ctx.out_path(out, "category_capital.csv");
            files::write_file(&out, &files::write_capital_csv(&refs))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "categories": vectors.keys().copied().collect::<Vec<_>>(),
                    "skipped": skipped
                        .iter()
                        .map(|(code, reason)| serde_json::json!({"category": code, "reason": reason}))
                        .collect::<Vec<_>>(),
                }),
            );
        }
        Command::Specialize {
            records,
            neighborhoods,
            taxonomy,
            local_mode,
            local_days,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let (spec, unassigned) = specialization(&pipe.stats);
            let out = ctx.out_path(out, "specialization.csv");
            files::write_file(&out, &files::write_specialization_csv(&spec))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "specialized": spec.len(),
                    "no_category": unassigned,
                }),
            );
        }
        Command::Diversity {
            records,
            neighborhoods,
            taxonomy,
            local_mode,
            local_days,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let (scores, excluded) = diversity_all(&pipe.stats);
            let out = ctx.out_path(out, "diversity.csv");
            files::write_file(&out, &files::write_diversity_csv(&scores))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "scored": scores.len(),
                    "excluded_no_cultural": excluded,
                }),
            );
        }
        Command::Monthly {
            records,
            neighborhoods,
            taxonomy,
            local_mode,
            local_days,
            denominator,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let denominator = resolve_denominator(&mut ctx, denominator)?;
            let (series, skipped, gaps) = monthly_series(&pipe.stats, denominator);
            if series.is_empty() {
                bail!("no location has a computable monthly series: {skipped:?}");
            }
            let out = ctx.out_path(out, "monthly.csv");
            files::write_file(&out, &files::write_monthly_csv(&series))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "locations": series.len(),
                    "gap_months": gaps,
                    "skipped": skipped,
                }),
            );
        }
        Command::Events {
            records,
            neighborhoods,
            taxonomy,
            local_mode,
            local_days,
            denominator,
            fence,
            out,
        } => {
            let pipe = stats_prelude(
                &mut ctx,
                records,
                neighborhoods,
                taxonomy,
                local_mode,
                local_days,
            )?;
            let denominator = resolve_denominator(&mut ctx, denominator)?;
            let multiplier = ctx.resolver.f64_value("fence_multiplier", fence, 1.5)?;
            let (series, mut skipped, _) = monthly_series(&pipe.stats, denominator);
            let mut peaks = Vec::new();
            for (location, s) in &series {
                match detect_events(location, &s.z, &pipe.stats[location].months, multiplier) {
                    Ok(mut found) => peaks.append(&mut found),
                    Err(e) => skipped.push(format!("{location}: {e}")),
                }
            }
            let out = ctx.out_path(out, "events.csv");
            files::write_file(&out, &files::write_events_csv(&peaks))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "pipeline": pipe.report.to_json(),
                    "locations": series.len(),
                    "peaks": peaks.len(),
                    "skipped": skipped,
                }),
            );
        }
        Command::RegressDev {
            capital,
            census,
            dev_year,
            response,
            extras,
            diversity,
            out_prefix,
        } => {
            let capital_path = ctx.resolver.required_path("capital", capital)?;
            let cultural = files::read_capital_csv(&capital_path, "cultural")?;
            let economic = files::read_capital_csv(&capital_path, "economic")?;
            let response_map = if let Some(response_path) = response {
                ctx.resolver
                    .effective
                    .record("response", response_path.display().to_string());
                files::read_vector_csv(&response_path)?
            } else {
                let census_path = ctx.resolver.required_path("census", census)?;
                let year = dev_year.ok_or_else(|| anyhow!("pass --dev-year or --response"))?;
                ctx.resolver.effective.record("dev_year", year);
                let table = load_census(&census_path)?;
                let map = table.metric_by_location(CensusMetric::Dev, year);
                if map.is_empty() {
                    bail!("census has no dev values for {year}");
                }
                map
            };
            let mut extra_maps: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
            for extra in extras.map(parse_list).unwrap_or_default() {
                match extra.as_str() {
                    "penetration" => extra_maps.push((
                        "penetration".into(),
                        files::read_capital_csv(&capital_path, "penetration")?,
                    )),
                    "diversity" => {
                        let div_path = ctx
                            .resolver
                            .required_path("diversity", diversity.clone())
                            .context("--extras diversity needs --diversity FILE")?;
                        extra_maps
                            .push(("diversity".into(), files::read_diversity_values(&div_path)?));
                    }
                    other => bail!("unknown extra {other:?} (expected penetration, diversity)"),
                }
            }
            ctx.resolver.effective.record(
                "extras",
                extra_maps
                    .iter()
                    .map(|(n, _)| n.clone())
                    .collect::<Vec<_>>(),
            );
            let extra_refs: Vec<(&str, &BTreeMap<String, f64>)> =
                extra_maps.iter().map(|(n, m)| (n.as_str(), m)).collect();
            let fit = model_development(&cultural, &economic, &response_map, &extra_refs)?;
            write_regression(&mut ctx, out_prefix, "regress_dev", &fit)?;
            ctx.finish(name, regression_report(&fit));
        }
        Command::RegressHouse {
            capital,
            census,
            house_years,
            out_prefix,
        } => {
            let capital_path = ctx.resolver.required_path("capital", capital)?;
            let census_path = ctx.resolver.required_path("census", census)?;
            let years = house_years.ok_or_else(|| anyhow!("pass --house-years"))?;
            let (from, to) = parse_year_range(&years)?;
            ctx.resolver
                .effective
                .record("house_years", format!("{from}:{to}"));
            let cultural = files::read_capital_csv(&capital_path, "cultural")?;
            let economic = files::read_capital_csv(&capital_path, "economic")?;
            let table = load_census(&census_path)?;
            let house = table.metric_mean_over_years(CensusMetric::HousePrice, from, to);
            if house.is_empty() {
                bail!("census has no house_price values in {from}:{to}");
            }
            let fit = model_house_price(&cultural, &economic, &house)?;
            write_regression(&mut ctx, out_prefix, "regress_house", &fit)?;
            ctx.finish(name, regression_report(&fit));
        }
        Command::RegressCategory {
            category_capital,
            capital,
            census,
            house_years,
            out,
        } => {
            let catcap_path = ctx
                .resolver
                .required_path("category_capital", category_capital)
                .context("pass --category-capital (output of the category-capital command)")?;
            let capital_path = ctx.resolver.required_path("capital", capital)?;
            let census_path = ctx.resolver.required_path("census", census)?;
            let years = house_years.ok_or_else(|| anyhow!("pass --house-years"))?;
            let (from, to) = parse_year_range(&years)?;
            ctx.resolver
                .effective
                .record("house_years", format!("{from}:{to}"));
            let category_capitals = files::read_category_capitals(&catcap_path)?;
            let economic = files::read_capital_csv(&capital_path, "economic")?;
            let table = load_census(&census_path)?;
            let house = table.metric_mean_over_years(CensusMetric::HousePrice, from, to);
            if house.is_empty() {
                bail!("census has no house_price values in {from}:{to}");
            }
            let result = model_category_house(&category_capitals, &economic, &house)?;
            let out = ctx.out_path(out, "category_r2.csv");
            files::write_file(&out, &files::write_category_r2_csv(&result))?;
            ctx.finish(
                name,
                serde_json::json!({
                    "categories": result.rows.len(),
                    "best": result.best,
                    "skipped": result
                        .skipped
                        .iter()
                        .map(|(code, reason)| serde_json::json!({"category": code, "reason": reason}))
                        .collect::<Vec<_>>(),
                }),
            );
        }
        Command::Delta {
            census,
            metric,
            year1,
            year2,
            out,
        } => {
            let census_path = ctx.resolver.required_path("census", census)?;
            let metric = match metric.as_str() {
                "dev" => CensusMetric::Dev,
                "income" => CensusMetric::Income,
                "house_price" => CensusMetric::HousePrice,
                other => bail!("unknown metric {other:?} (expected dev, income, house_price)"),
            };
            ctx.resolver.effective.record("metric", metric.name());
            ctx.resolver.effective.record("year1", year1);
            ctx.resolver.effective.record("year2", year2);
            let table = load_census(&census_path)?;
            let t1 = table.metric_by_location(metric, year1);
            let t2 = table.metric_by_location(metric, year2);
            let (diff, dropped) = delta(&t2, &t1)?;
            let out = ctx.out_path(out, "delta.csv");
            files::write_file(&out, &files::write_vector_csv(&diff))?;
            ctx.finish(
                name,
                serde_json::json!({ "locations": diff.len(), "dropped": dropped }),
            );
        }
        Command::Correlate { x, y, out } => {
            ctx.resolver.effective.record("x", x.display().to_string());
            ctx.resolver.effective.record("y", y.display().to_string());
            let x_map = files::read_vector_csv(&x)?;
            let y_map = files::read_vector_csv(&y)?;
            let result = pearson(&x_map, &y_map)?;
            if let Some(out) = out {
                files::write_file(&out, &format!("r,n\n{},{}\n", result.r, result.n))?;
                ctx.outputs.push(out);
            }
            ctx.finish(name, serde_json::json!({ "r": result.r, "n": result.n }));
        }
        Command::Choropleth {
            capital,
            kind,
            neighborhoods,
            out,
        } => {
            let capital_path = ctx.resolver.required_path("capital", capital)?;
            let hoods_path = ctx.resolver.required_path("neighborhoods", neighborhoods)?;
            ctx.resolver.effective.record("kind", kind.clone());
            let values = files::read_capital_csv(&capital_path, &kind)?;
            let hoods = load_neighborhoods(&hoods_path)?;
            let svg = choropleth::render(&values, &hoods)?;
            let out = ctx.out_path(out, "choropleth.svg");
            files::write_file(&out, &svg)?;
            ctx.finish(
                name,
                serde_json::json!({ "locations": values.len(), "kind": kind }),
            );
        }
    }
    Ok(())
}

fn stats_prelude(
    ctx: &mut Ctx,
    records: Option<PathBuf>,
    neighborhoods: Option<PathBuf>,
    taxonomy: Option<PathBuf>,
    local_mode: Option<String>,
    local_days: Option<u32>,
) -> Result<pipeline::StatsPipeline> {
    let records = ctx.resolver.required_path("records", records)?;
    let hoods = ctx.resolver.required_path("neighborhoods", neighborhoods)?;
    let taxonomy = ctx.resolver.required_path("taxonomy", taxonomy)?;
    let mode_str = ctx.resolver.string_value("local_mode", local_mode, "span");
    let mode = LocalMode::parse(&mode_str)
        .ok_or_else(|| anyhow!("unknown local mode {mode_str:?} (expected span, days, off)"))?;
    let days = ctx.resolver.u32_value("local_days", local_days, 30)?;
    pipeline::run_stats_pipeline(&records, &hoods, &taxonomy, mode, days, ctx.workers)
}

fn resolve_depth(ctx: &mut Ctx, lex: &LexGraph, flag: Option<String>) -> Result<u32> {
    let raw = ctx.resolver.string_value("depth", flag, "20");
    let depth = if raw == "exact" {
        lex.graph_depth(DepthMode::Exact)?
    } else {
        let d: u32 = raw
            .parse()
            .map_err(|_| anyhow!("depth must be a positive integer or \"exact\", got {raw:?}"))?;
        lex.graph_depth(DepthMode::Configured(d))?
    };
    ctx.resolver.effective.record("depth_resolved", depth);
    Ok(depth)
}

fn resolve_denominator(ctx: &mut Ctx, flag: Option<String>) -> Result<MonthlyDenominator> {
    let raw = ctx
        .resolver
        .string_value("monthly_denominator", flag, "all");
    MonthlyDenominator::parse(&raw)
        .ok_or_else(|| anyhow!("unknown denominator {raw:?} (expected all, cultural)"))
}

/// Monthly series per location; locations whose series is degenerate or too
/// short are collected as skip notes instead of failing the run.
fn monthly_series(
    stats: &BTreeMap<String, metrics::LocationStats>,
    denominator: MonthlyDenominator,
) -> (BTreeMap<String, metrics::MonthlySeries>, Vec<String>, usize) {
    let mut series = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut gap_months = 0usize;
    for (location, s) in stats {
        match monthly_capital(s, denominator) {
            Ok(monthly) => {
                gap_months += monthly.gaps.len();
                series.insert(location.clone(), monthly);
            }
            Err(e) => skipped.push(format!("{location}: {e}")),
        }
    }
    (series, skipped, gap_months)
}

fn parse_year_range(raw: &str) -> Result<(u16, u16)> {
    let (from, to) = match raw.split_once(':') {
        Some((a, b)) => (a.trim().parse()?, b.trim().parse()?),
        None => {
            let year: u16 = raw.trim().parse()?;
            (year, year)
        }
    };
    if from > to {
        bail!("year range {raw:?} is reversed");
    }
    Ok((from, to))
}

fn parse_list(raw: String) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn write_regression(
    ctx: &mut Ctx,
    out_prefix: Option<PathBuf>,
    default_prefix: &str,
    fit: &ModelFit,
) -> Result<()> {
    let prefix = out_prefix.unwrap_or_else(|| ctx.out_dir.join(default_prefix));
    let csv_path = prefix.with_extension("csv");
    let txt_path = prefix.with_extension("txt");
    let thresholds = StarThresholds::default();
    files::write_file(&csv_path, &fit.result.to_csv(thresholds))?;
    files::write_file(&txt_path, &fit.result.to_text(thresholds))?;
    ctx.outputs.push(csv_path);
    ctx.outputs.push(txt_path);
    Ok(())
}

fn regression_report(fit: &ModelFit) -> serde_json::Value {
    serde_json::json!({
        "r_squared": fit.result.r_squared,
        "n": fit.result.n,
        "dropped": fit.dropped,
        "coefficients": fit
            .result
            .coefficients
            .iter()
            .map(|c| serde_json::json!({
                "term": c.name,
                "estimate": c.estimate,
                "p_value": c.p_value,
            }))
            .collect::<Vec<_>>(),
    })
}
