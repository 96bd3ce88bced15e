//! Command implementations behind the `deckeval` binary.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad input content,
//! schema or constraint violations), 2 on I/O errors. Output files are
//! written atomically (temp file then rename) and all floating-point output
//! uses six decimals, so reruns on identical inputs are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use deckeval_core::artifact::score_artifact;
use deckeval_core::config::Config;
use deckeval_core::deck::{align_to_source, load_package, DeckPackage, RequirementProfile};
use deckeval_core::delivery::{rehearsal_advice, score_delivery, KeywordJudge};
use deckeval_core::error::Error;
use deckeval_core::ingest::{normalize_source, segment, summarize_slices, FirstSentenceSummarizer};
use deckeval_core::orchestration::{
    markov_sequence, timer_update, DescriptorSummarizer, IdentityRenderer, NodeBudget,
    RuleBasedPlanner, StyleSummary,
};
use deckeval_core::report::{build_report, from_json, render_csv, render_text, to_json};
use deckeval_core::retrieval::{build_index, read_index, retrieve, write_index};
use deckeval_core::scorers::{RougeL, TfCosine};
use deckeval_core::text::MarkerLexicon;
use deckeval_core::tree::{build_tree, ContentTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "deckeval", version, about = "Index a source document, query it, and score slide/script decks")]
pub struct Cli {
    /// Configuration file (`key = value` lines) overlaid on the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Reserved for future stochastic features; everything is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the content-tree index from a .tex or .md source.
    Index {
        source: PathBuf,
        /// Index file to write.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run a tree-aware retrieval query against an index file.
    Query {
        index: PathBuf,
        query: String,
        /// Results to return.
        #[arg(long)]
        k: Option<usize>,
        /// Child-to-parent fusion weight.
        #[arg(long)]
        alpha: Option<f64>,
        /// Parent-to-child fusion weight.
        #[arg(long)]
        beta: Option<f64>,
        /// Overview depth downweight.
        #[arg(long)]
        gamma: Option<f64>,
        /// Detail depth upweight.
        #[arg(long)]
        delta: Option<f64>,
        /// Query-length threshold between overview and detail bias.
        #[arg(long)]
        m0: Option<usize>,
    },
    /// Score a deck package against an index; emits the JSON report.
    Score {
        index: PathBuf,
        package: PathBuf,
        /// Weight overrides (`key = value` lines) applied after --config.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Report file to write (stdout when omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replay the pacing timer over a package's estimated durations.
    PaceSimulate {
        package: PathBuf,
        /// Per-slide budgets file (`<slide> = <seconds>` lines); defaults
        /// to an even split of the profile duration.
        #[arg(long)]
        budgets: Option<PathBuf>,
    },
    /// Emit the augmentation decision list for a package.
    AugmentPlan {
        package: PathBuf,
        /// Decision file to write (stdout when omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render a JSON report as text or CSV.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ReportFormat {
    Text,
    Csv,
}

fn exit_code_for(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

/// Run a parsed command line; prints errors to stderr and returns the exit
/// code.
pub fn run(cli: Cli) -> i32 {
    match try_run(cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    let mut config = Config::default();
    if let Some(path) = path {
        config.overlay(path)?;
    }
    Ok(config)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), Error> {
    let wrap = |source: std::io::Error| Error::Write { path: path.to_path_buf(), source };
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(wrap)?;
    file.write_all(contents.as_bytes()).map_err(wrap)?;
    file.sync_all().map_err(wrap)?;
    fs::rename(&tmp, path).map_err(wrap)?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Error> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn try_run(cli: Cli) -> Result<(), Error> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Index { source, out } => cmd_index(&source, &out, &config),
        Command::Query { index, query, k, alpha, beta, gamma, delta, m0 } => {
            let mut config = config;
            if let Some(k) = k {
                config.retrieval.top_k = k;
            }
            if let Some(alpha) = alpha {
                config.retrieval.alpha_tree = alpha;
            }
            if let Some(beta) = beta {
                config.retrieval.beta_tree = beta;
            }
            if let Some(gamma) = gamma {
                config.retrieval.gamma_tree = gamma;
            }
            if let Some(delta) = delta {
                config.retrieval.delta_tree = delta;
            }
            if let Some(m0) = m0 {
                config.retrieval.m0 = m0;
            }
            let output = cmd_query(&index, &query, &config)?;
            print!("{output}");
            Ok(())
        }
        Command::Score { index, package, weights, out } => {
            let mut config = config;
            if let Some(weights) = weights {
                config.overlay(&weights)?;
            }
            let report = cmd_score(&index, &package, &config)?;
            emit(out.as_deref(), &report)
        }
        Command::PaceSimulate { package, budgets } => {
            let output = cmd_pace_simulate(&package, budgets.as_deref(), &config)?;
            print!("{output}");
            Ok(())
        }
        Command::AugmentPlan { package, out } => {
            let output = cmd_augment_plan(&package, &config)?;
            emit(out.as_deref(), &output)
        }
        Command::Report { report, format } => {
            let output = cmd_report(&report, format)?;
            print!("{output}");
            Ok(())
        }
    }
}

/// normalize -> segment -> summarize -> build tree -> build index -> write.
pub fn cmd_index(source: &Path, out: &Path, config: &Config) -> Result<(), Error> {
    let doc = normalize_source(source)?;
    let mut slices = segment(&doc)?;
    let summarizer = FirstSentenceSummarizer { max_chars: config.summarizer_cap };
    summarize_slices(&mut slices, &summarizer);
    let tree = build_tree(slices)?;
    let stats = build_index(&tree, &config.retrieval)?;
    let mut buf = Vec::new();
    write_index(&tree, &stats, &mut buf)?;
    write_atomic(out, &String::from_utf8(buf).expect("index is utf-8"))
}

fn load_tree(index: &Path) -> Result<ContentTree, Error> {
    let contents = fs::read_to_string(index).map_err(|source| Error::Read {
        path: index.to_path_buf(),
        source,
    })?;
    read_index(std::io::BufReader::new(contents.as_bytes()))
}

/// One result per line: node id, fused score (six decimals), title.
pub fn cmd_query(index: &Path, query: &str, config: &Config) -> Result<String, Error> {
    let tree = load_tree(index)?;
    let stats = build_index(&tree, &config.retrieval)?;
    let results = retrieve(query, &tree, &stats, &config.retrieval);
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{}\t{:.6}\t{}\n",
            r.node_id,
            r.score,
            tree.node(r.node_id).title
        ));
    }
    Ok(out)
}

fn scored_report(
    tree: &ContentTree,
    pkg: &DeckPackage,
    profile: &RequirementProfile,
    config: &Config,
) -> Result<String, Error> {
    let stats = build_index(tree, &config.retrieval)?;
    let alignments = align_to_source(pkg, tree, &stats, &config.retrieval);
    let lexical = RougeL;
    let semantic = TfCosine;
    let artifact = score_artifact(pkg, &alignments, tree, &lexical, &semantic, &config.artifact)?;
    let markers = MarkerLexicon::new(&config.markers);
    let judge = KeywordJudge::new(MarkerLexicon::new(&config.markers));
    let delivery = score_delivery(
        pkg,
        profile,
        &artifact,
        &semantic,
        &judge,
        &config.delivery,
        &markers,
    )?;
    let advice = rehearsal_advice(pkg, profile, &artifact, &delivery, &config.delivery);
    let report = build_report(pkg, profile, config, &artifact, &delivery, &advice);
    Ok(to_json(&report))
}

/// Load, align, compute both scorecards, and serialize the report.
pub fn cmd_score(index: &Path, package: &Path, config: &Config) -> Result<String, Error> {
    let tree = load_tree(index)?;
    let (pkg, profile) = load_package(package)?;
    scored_report(&tree, &pkg, &profile, config)
}

fn parse_budgets(path: &Path, m: usize) -> Result<BTreeMap<usize, f64>, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut budgets = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("budgets line {}: expected `<slide> = <seconds>`", lineno + 1))
        })?;
        let slide: usize = k.trim().parse().map_err(|_| {
            Error::Config(format!("budgets line {}: bad slide index `{}`", lineno + 1, k.trim()))
        })?;
        let seconds: f64 = v.trim().parse().map_err(|_| {
            Error::Config(format!("budgets line {}: bad seconds `{}`", lineno + 1, v.trim()))
        })?;
        if slide == 0 || slide > m {
            return Err(Error::Config(format!(
                "budgets line {}: slide {slide} out of range 1..{m}",
                lineno + 1
            )));
        }
        if seconds.is_nan() || seconds <= 0.0 {
            return Err(Error::Config(format!(
                "budgets line {}: budget must be > 0",
                lineno + 1
            )));
        }
        budgets.insert(slide, seconds);
    }
    Ok(budgets)
}

/// Replay the pacing timer per slide: each slide's estimated narration is
/// charged against its budget and the resulting state is printed.
pub fn cmd_pace_simulate(
    package: &Path,
    budgets: Option<&Path>,
    config: &Config,
) -> Result<String, Error> {
    let (pkg, profile) = load_package(package)?;
    let m = pkg.len();
    if m == 0 {
        return Err(Error::EmptyDeck("pacing needs at least one slide"));
    }
    let default_budget = profile.duration_minutes * 60.0 / m as f64;
    let overrides = match budgets {
        Some(path) => parse_budgets(path, m)?,
        None => BTreeMap::new(),
    };
    let mut out = String::from("slide\tbudget_s\testimate_s\tconsumed_s\tremaining_s\tstate\n");
    for (slide, script) in pkg.slides.iter().zip(&pkg.scripts) {
        let budget_s = overrides.get(&slide.index).copied().unwrap_or(default_budget);
        let mut budget = NodeBudget::new(slide.index, budget_s);
        let estimate = script.estimated_duration();
        let state = timer_update(&mut budget, estimate, config.overrun_threshold);
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
            slide.index,
            budget_s,
            estimate,
            budget.consumed_seconds(),
            budget.remaining_seconds(),
            state
        ));
    }
    Ok(out)
}

/// Run the sequential augmentation planner and emit one decision per line.
pub fn cmd_augment_plan(package: &Path, config: &Config) -> Result<String, Error> {
    let (pkg, profile) = load_package(package)?;
    let deck_style = StyleSummary::deck(profile.style.clone());
    let planner = RuleBasedPlanner { enabled: config.effects.clone() };
    let augmented = markov_sequence(
        &pkg.slides,
        &profile,
        &deck_style,
        &config.effects,
        &planner,
        &IdentityRenderer,
        &DescriptorSummarizer,
    );
    let mut out = String::new();
    for item in &augmented {
        out.push_str(&serde_json::to_string(&item.decision).expect("decision serialization"));
        out.push('\n');
    }
    Ok(out)
}

/// Render a previously written report.
pub fn cmd_report(report: &Path, format: ReportFormat) -> Result<String, Error> {
    let contents = fs::read_to_string(report).map_err(|source| Error::Read {
        path: report.to_path_buf(),
        source,
    })?;
    let report = from_json(&contents)?;
    Ok(match format {
        ReportFormat::Text => render_text(&report),
        ReportFormat::Csv => render_csv(&report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_map_error_kinds() {
        let io = Error::Read {
            path: PathBuf::from("x"),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "nope"),
        };
        assert_eq!(exit_code_for(&io), EXIT_IO);
        let validation = Error::Config("bad".to_string());
        assert_eq!(exit_code_for(&validation), EXIT_VALIDATION);
    }
}
