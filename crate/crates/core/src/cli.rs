//! Command-line front end. `main` only maps [`run`]'s result to an exit code.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forge::{
    build_prompt_pool, combo_keys_from_queries, forge_eval_set, forge_training_set, read_jsonl, ForgeConfig,
    PromptPoolEntry, ProvenanceRecord, SourceManifest, GALLERY_MANIFEST, GROUND_TRUTH, QUERY_MANIFEST,
};
use crate::image::Image;
use crate::matcher::{
    aggregate_max, read_assignment, read_descriptors, search_topk, select_prompts, thumbnail_descriptor,
    write_assignment, write_descriptors, write_matches, read_matches, DescriptorSet, SelectInputs, SelectionMode,
};
use crate::metrics::{build_report, GroundTruth, IdSpaces, PatternInputs};
use crate::patterns::{apply, catalog, lookup, parse_combo_key, sample_instance, Category, PatternSplit};
use crate::seed::derive_seed;
use crate::synth::source_image;

#[derive(Debug, Parser)]
#[command(name = "patternforge", version, about = "Tamper-pattern forge and copy-detection benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect the pattern catalog
    #[command(subcommand)]
    Patterns(PatternsCmd),
    /// Forge training sets, evaluation sets and prompt pools
    #[command(subcommand)]
    Forge(ForgeCmd),
    /// Extract descriptors for every image in a manifest
    Describe(DescribeArgs),
    /// Exact cosine top-k search of queries against a gallery
    Match(MatchArgs),
    /// Choose prompt pairs for each query
    Select(SelectArgs),
    /// Score a match file against the ground truth
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum PatternsCmd {
    /// Print the catalog, one pattern per line
    List {
        #[arg(long)]
        json: bool,
    },
    /// Write seeded variants of one pattern applied to an image
    Demo(DemoArgs),
    /// Write deterministic synthetic source images
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DemoArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, env = "PATTERNFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub size: u32,
    #[arg(long, env = "PATTERNFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Prefix for generated ids
    #[arg(long, default_value = "img")]
    pub prefix: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ForgeCmd {
    /// Originals plus base-pattern replicas
    Train(TrainArgs),
    /// Gallery, true queries and distractors with novel-pattern combos
    Eval(EvalForgeArgs),
    /// Prompt pairs for every combo of an evaluation set's true queries
    Pool(PoolArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CommonForge {
    #[arg(long, env = "PATTERNFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub kmin: usize,
    #[arg(long, default_value_t = 3)]
    pub kmax: usize,
    /// Restrict patterns to these categories (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Directory of images or a JSONL manifest of {"id", "path"}
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub replicas: usize,
    #[command(flatten)]
    pub common: CommonForge,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalForgeArgs {
    #[arg(long)]
    pub gallery_sources: PathBuf,
    #[arg(long)]
    pub distractor_sources: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub true_queries: usize,
    #[arg(long, default_value_t = 800)]
    pub distractors: usize,
    /// Queries are untransformed full-frame crops of their source
    #[arg(long)]
    pub identity: bool,
    #[command(flatten)]
    pub common: CommonForge,
}

#[derive(Debug, Args, Serialize)]
pub struct PoolArgs {
    #[arg(long)]
    pub sources: PathBuf,
    /// Evaluation set directory holding queries.jsonl, gallery.jsonl and gt.csv
    #[arg(long)]
    pub eval: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[command(flatten)]
    pub common: CommonForge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Thumbnail,
}

#[derive(Debug, Args, Serialize)]
pub struct DescribeArgs {
    /// JSONL manifest whose rows carry "id" and "path"
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory that relative paths resolve against (default: the manifest's directory)
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Backend::Thumbnail)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MatchArgs {
    /// Query descriptors; repeat to max-aggregate over several prompt views
    #[arg(long, required = true)]
    pub queries: Vec<PathBuf>,
    #[arg(long)]
    pub gallery: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub mode: String,
    /// Query manifest (queries.jsonl)
    #[arg(long)]
    pub queries: PathBuf,
    /// Prompt pool manifest (pool.jsonl)
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub query_features: Option<PathBuf>,
    #[arg(long)]
    pub pool_features: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, env = "PATTERNFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub matches: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Effective configuration of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
struct RunEcho<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a T,
}

fn write_run_json<T: Serialize>(dest: &Path, command: &str, args: &T) -> Result<()> {
    let echo = RunEcho { command, version: env!("CARGO_PKG_VERSION"), args };
    let mut text = serde_json::to_string_pretty(&echo).map_err(|source| Error::Json { path: dest.into(), source })?;
    text.push('\n');
    if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(dest, text).map_err(|e| Error::io(dest, e))
}

fn run_json_for_dir(dir: &Path) -> PathBuf {
    dir.join("run.json")
}

fn run_json_for_file(file: &Path) -> PathBuf {
    let mut s = file.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn load_sources(path: &Path) -> Result<SourceManifest> {
    if path.is_file() {
        SourceManifest::from_jsonl(path)
    } else {
        SourceManifest::from_dir(path)
    }
}

impl CommonForge {
    fn config(&self) -> Result<ForgeConfig> {
        let categories = if self.categories.is_empty() {
            None
        } else {
            Some(self.categories.iter().map(|c| c.trim().parse::<Category>()).collect::<Result<Vec<_>>>()?)
        };
        let cfg = ForgeConfig {
            global_seed: self.seed,
            combo_size_range: (self.kmin, self.kmax),
            categories,
            workers: self.workers,
            ..ForgeConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Patterns(cmd) => patterns(cmd),
        Command::Forge(cmd) => forge(cmd),
        Command::Describe(args) => describe(&args),
        Command::Match(args) => match_cmd(&args),
        Command::Select(args) => select(&args),
        Command::Eval(args) => eval(&args),
    }
}

fn patterns(cmd: PatternsCmd) -> Result<()> {
    match cmd {
        PatternsCmd::List { json } => {
            let mut out = std::io::stdout().lock();
            if json {
                let text = serde_json::to_string_pretty(catalog()).expect("catalog serializes");
                let _ = writeln!(out, "{text}");
            } else {
                for d in catalog() {
                    let params: Vec<&str> = d.params.iter().map(|p| p.name).collect();
                    let _ = writeln!(out, "{}\t{:?}\t{:?}\t{}", d.id, d.category, d.split, params.join(","));
                }
            }
            Ok(())
        }
        PatternsCmd::Demo(args) => {
            lookup(&args.pattern)?;
            let img = Image::load(&args.input)?;
            for i in 0..args.count {
                let inst = sample_instance(&args.pattern, derive_seed(args.seed, &args.pattern, i as u64))?;
                let path = args.out.join(format!("{}_{i:02}.png", args.pattern));
                apply(&img, &inst)?.save_png(&path)?;
                println!("{}", path.display());
            }
            write_run_json(&run_json_for_dir(&args.out), "patterns demo", &args)
        }
        PatternsCmd::Synth(args) => {
            if args.size == 0 {
                return Err(Error::Config("size must be positive".into()));
            }
            for i in 0..args.count {
                let seed = derive_seed(args.seed, &args.prefix, i as u64);
                source_image(seed, args.size, args.size).save_png(args.out.join(format!("{}{i:05}.png", args.prefix)))?;
            }
            write_run_json(&run_json_for_dir(&args.out), "patterns synth", &args)
        }
    }
}

fn forge(cmd: ForgeCmd) -> Result<()> {
    match cmd {
        ForgeCmd::Train(args) => {
            let mut cfg = args.common.config()?;
            cfg.replicas_per_original = args.replicas;
            let sources = load_sources(&args.sources)?;
            write_run_json(&run_json_for_dir(&args.out), "forge train", &args)?;
            let out = forge_training_set(&sources, &cfg, &args.out)?;
            println!("train: {} records, {} errors", out.records.len(), out.errors.len());
            out.check(&args.out)
        }
        ForgeCmd::Eval(args) => {
            let mut cfg = args.common.config()?;
            cfg.n_true_queries = args.true_queries;
            cfg.n_distractor_queries = args.distractors;
            cfg.pattern_split_selector = PatternSplit::Novel;
            cfg.identity_queries = args.identity;
            let gallery = load_sources(&args.gallery_sources)?;
            let distractors = match &args.distractor_sources {
                Some(p) => load_sources(p)?,
                None => SourceManifest::default(),
            };
            write_run_json(&run_json_for_dir(&args.out), "forge eval", &args)?;
            let out = forge_eval_set(&gallery, &distractors, &cfg, &args.out)?;
            println!(
                "eval: {} gallery, {} queries ({} true), {} errors",
                out.gallery.len(),
                out.queries.len(),
                out.ground_truth.len(),
                out.errors.len()
            );
            if out.errors.is_empty() {
                Ok(())
            } else {
                Err(Error::Partial { failed: out.errors.len(), log: args.out.join(crate::forge::ERROR_LOG) })
            }
        }
        ForgeCmd::Pool(args) => {
            let mut cfg = args.common.config()?;
            cfg.pool_pairs_per_combo = args.pairs;
            let sources = load_sources(&args.sources)?;
            let queries: Vec<ProvenanceRecord> = read_jsonl(args.eval.join(QUERY_MANIFEST))?;
            let gallery: Vec<ProvenanceRecord> = read_jsonl(args.eval.join(GALLERY_MANIFEST))?;
            let gt = GroundTruth::read_csv(args.eval.join(GROUND_TRUTH))?;
            let keys = combo_keys_from_queries(&queries, &gt);
            let excluded: BTreeSet<String> =
                gallery.iter().chain(&queries).map(|r| r.source_id.clone()).collect();
            write_run_json(&run_json_for_dir(&args.out), "forge pool", &args)?;
            let out = build_prompt_pool(&sources, &keys, &excluded, &cfg, &args.out)?;
            println!("pool: {} combos, {} pairs, {} errors", keys.len(), out.entries.len(), out.errors.len());
            if out.errors.is_empty() {
                Ok(())
            } else {
                Err(Error::Partial { failed: out.errors.len(), log: args.out.join(crate::forge::ERROR_LOG) })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    id: String,
    path: PathBuf,
}

fn describe(args: &DescribeArgs) -> Result<()> {
    let rows: Vec<ManifestRow> = read_jsonl(&args.manifest)?;
    let root = args
        .root
        .clone()
        .unwrap_or_else(|| args.manifest.parent().map(Path::to_path_buf).unwrap_or_default());
    let pool = thread_pool(args.workers)?;
    let vectors: Vec<Result<Vec<f32>>> = pool.install(|| {
        use rayon::prelude::*;
        rows.par_iter()
            .map(|r| {
                let img = Image::load(root.join(&r.path))?;
                Ok(match args.backend {
                    Backend::Thumbnail => thumbnail_descriptor(&img),
                })
            })
            .collect()
    });
    let vectors = vectors.into_iter().collect::<Result<Vec<_>>>()?;
    let set = DescriptorSet::from_rows(rows.into_iter().map(|r| r.id).collect(), vectors)?;
    write_descriptors(&set, &args.out)?;
    println!("described {} images", set.len());
    write_run_json(&run_json_for_file(&args.out), "describe", args)
}

fn match_cmd(args: &MatchArgs) -> Result<()> {
    let gallery = read_descriptors(&args.gallery)?;
    let pool = thread_pool(args.workers)?;
    let lists = args
        .queries
        .iter()
        .map(|q| {
            let set = read_descriptors(q)?;
            pool.install(|| search_topk(&set, &gallery, args.k))
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = if lists.len() == 1 { lists.into_iter().next().unwrap() } else { aggregate_max(&lists)? };
    write_matches(&merged, &args.out)?;
    write_run_json(&run_json_for_file(&args.out), "match", args)
}

fn select(args: &SelectArgs) -> Result<()> {
    let mode: SelectionMode = args.mode.parse()?;
    let queries: Vec<ProvenanceRecord> = read_jsonl(&args.queries)?;
    let pool: Vec<PromptPoolEntry> = read_jsonl(&args.pool)?;
    let gt = args.gt.as_ref().map(GroundTruth::read_csv).transpose()?;
    let query_features = args.query_features.as_ref().map(read_descriptors).transpose()?;
    let pool_features = args.pool_features.as_ref().map(read_descriptors).transpose()?;
    let inputs = SelectInputs {
        queries: &queries,
        pool: &pool,
        gt: gt.as_ref(),
        query_features: query_features.as_ref(),
        pool_features: pool_features.as_ref(),
    };
    let assignment = select_prompts(mode, &inputs, args.n, args.seed)?;
    write_assignment(&assignment, &args.out)?;
    write_run_json(&run_json_for_file(&args.out), "select", args)
}

fn eval(args: &EvalArgs) -> Result<()> {
    let matches = read_matches(&args.matches)?;
    let gt = GroundTruth::read_csv(&args.gt)?;
    let queries: Option<Vec<ProvenanceRecord>> = args.queries.as_ref().map(read_jsonl).transpose()?;
    let gallery: Option<Vec<ProvenanceRecord>> = args.gallery.as_ref().map(read_jsonl).transpose()?;
    let spaces = IdSpaces {
        queries: queries.as_ref().map(|q| q.iter().map(|r| r.id.clone()).collect()),
        gallery: gallery.as_ref().map(|g| g.iter().map(|r| r.id.clone()).collect()),
    };

    let mut pattern_state = None;
    if let Some(path) = &args.assignment {
        let (Some(queries), Some(pool_path)) = (&queries, &args.pool) else {
            return Err(Error::Config("--assignment needs --queries and --pool".into()));
        };
        let assignment = read_assignment(path)?;
        let pool: Vec<PromptPoolEntry> = read_jsonl(pool_path)?;
        let query_combos: BTreeMap<String, BTreeSet<String>> = queries
            .iter()
            .map(|r| (r.id.clone(), r.combo.pattern_ids().into_iter().map(str::to_owned).collect()))
            .collect();
        let pool_combos: BTreeMap<String, BTreeSet<String>> =
            pool.iter().map(|e| (e.pair_id.clone(), parse_combo_key(&e.combo_key))).collect();
        pattern_state = Some((assignment, query_combos, pool_combos));
    }
    let patterns = pattern_state.as_ref().map(|(a, q, p)| PatternInputs { assignment: a, query_combos: q, pool_combos: p });
    let config = serde_json::to_value(args).map_err(|source| Error::Json { path: args.out.clone(), source })?;
    let report = build_report(&matches, &gt, &spaces, patterns, config)?;
    report.write(&args.out)?;
    print!("{}", report.to_json());
    write_run_json(&run_json_for_file(&args.out), "eval", args)
}
