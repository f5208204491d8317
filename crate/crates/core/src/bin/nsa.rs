//! `nsa`: command-line front end for training, pruning and the XOR experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use nsa_core::data::{CsvSchema, SplitSpec, XorPool};
use nsa_core::harness::{self, CsvData, DataSource, Manifest, Sparsity, XorData};
use nsa_core::{metrics, AnnealConfig, MlpModel, TrainConfig};

#[derive(Parser)]
#[command(name = "nsa", version, about = "Node and feature selection with annealing for one-hidden-layer networks")]
struct Cli {
    /// JSON or `key = value` config file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for single runs; first seed of the list for multi-seed commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file. Without it, results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write k-D XOR data as CSV with a provenance sidecar.
    GenXor(GenXorArgs),
    /// Train a plain network.
    Train(TrainArgs),
    /// Node selection with annealing.
    Nsa(AnnealArgs),
    /// Feature and node selection with annealing.
    FsaNsa(AnnealArgs),
    /// Evaluate a saved model.
    Eval(EvalArgs),
    /// Best-of-seeds loss and AUC for each hidden width.
    SweepH(SweepHArgs),
    /// Mean loss and AUC against sample size for plain and pruned networks.
    SweepN(SweepNArgs),
    /// Random restarts sorted by final loss.
    Restarts(RestartsArgs),
    /// Initializations needed to reach a train AUC threshold.
    HitTime(HitTimeArgs),
    /// Cross-validated grid search with FSA+NSA comparison on a CSV dataset.
    GridSearch(GridArgs),
    /// Tabulate the node and feature annealing schedules.
    Schedule(ScheduleArgs),
}

#[derive(Args, Clone, Default)]
struct XorArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    pool_seed: Option<u64>,
}

impl XorArgs {
    fn apply(&self, d: &mut XorData) {
        set(&mut d.k, self.k);
        set(&mut d.p, self.p);
        set(&mut d.n, self.n);
        set(&mut d.n_test, self.n_test);
        set(&mut d.pool_seed, self.pool_seed);
    }
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    #[command(flatten)]
    xor: XorArgs,
    /// CSV file instead of XOR data.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Label column of the CSV file.
    #[arg(long)]
    label: Option<String>,
    /// JSON schema file for the CSV (label, categorical encodings, ignored columns).
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
}

impl DataArgs {
    fn source(&self, base: Option<DataSource>) -> Result<DataSource> {
        if let Some(path) = &self.csv {
            let schema = match (&self.schema, &self.label) {
                (Some(s), label) => {
                    let mut schema: CsvSchema = serde_json::from_str(&fs::read_to_string(s)?)
                        .with_context(|| format!("reading schema {}", s.display()))?;
                    if let Some(l) = label {
                        schema.label = l.clone();
                    }
                    schema
                }
                (None, Some(l)) => CsvSchema::with_label(l.clone()),
                (None, None) => bail!("--csv needs --label or --schema"),
            };
            let mut split = SplitSpec::default();
            set(&mut split.train_fraction, self.train_fraction);
            set(&mut split.seed, self.split_seed);
            return Ok(DataSource::Csv(CsvData {
                path: path.clone(),
                schema,
                split,
                standardize: true,
            }));
        }
        let mut source = base.unwrap_or(DataSource::Xor(XorData::default()));
        match &mut source {
            DataSource::Xor(x) => self.xor.apply(x),
            DataSource::Csv(c) => {
                set(&mut c.split.train_fraction, self.train_fraction);
                set(&mut c.split.seed, self.split_seed);
            }
        }
        Ok(source)
    }
}

#[derive(Args, Clone, Default)]
struct OptimArgs {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Decoupled (AdamW-style) weight decay.
    #[arg(long)]
    decoupled: bool,
}

impl OptimArgs {
    fn apply(&self, t: &mut TrainConfig) {
        set(&mut t.lr, self.lr);
        set(&mut t.weight_decay, self.weight_decay);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.epochs, self.epochs);
        if self.decoupled {
            t.decoupled_weight_decay = true;
        }
    }
}

#[derive(Args)]
struct GenXorArgs {
    #[command(flatten)]
    xor: XorArgs,
    /// Cut from the independent test stream of the pool.
    #[arg(long)]
    test: bool,
}

#[derive(serde::Deserialize, Serialize, Default)]
#[serde(default)]
struct TrainSpec {
    data: Option<DataSource>,
    hidden: Option<usize>,
    train: TrainConfig,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(serde::Deserialize, Serialize, Default)]
#[serde(default)]
struct AnnealSpec {
    data: Option<DataSource>,
    anneal: AnnealConfig,
}

#[derive(Args)]
struct AnnealArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Starting hidden width H.
    #[arg(long)]
    start_nodes: Option<usize>,
    /// Final hidden width h.
    #[arg(long)]
    nodes: Option<usize>,
    /// Features to keep (fsa-nsa only; defaults to k for XOR data).
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct SweepHArgs {
    #[command(flatten)]
    xor: XorArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Number of seeds per width.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct SweepNArgs {
    #[command(flatten)]
    xor: XorArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    start_nodes: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
}

#[derive(Args)]
struct RestartsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct HitTimeArgs {
    #[command(flatten)]
    xor: XorArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<usize>>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_restarts: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    l2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    batch: Option<Vec<usize>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    cv_runs: Option<usize>,
    #[arg(long)]
    final_runs: Option<usize>,
    /// FSA+NSA sparsity levels as `features:nodes`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    sparsity: Option<Vec<String>>,
    #[arg(long)]
    start_nodes: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    start_nodes: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Parse a config file: JSON when it starts with `{`, otherwise `key = value` lines where
/// dotted keys address nested objects and values are read as JSON when possible.
fn parse_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text)?
    } else {
        let mut root = serde_json::Map::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                bail!("{}:{}: expected `key = value`", path.display(), lineno + 1);
            };
            let raw = raw.trim();
            let v = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let parts: Vec<&str> = key.trim().split('.').collect();
            let mut obj = &mut root;
            for part in &parts[..parts.len() - 1] {
                obj = obj
                    .entry(part.to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()))
                    .as_object_mut()
                    .with_context(|| format!("{}:{}: '{part}' is not a table", path.display(), lineno + 1))?;
            }
            obj.insert(parts[parts.len() - 1].to_string(), v);
        }
        serde_json::Value::Object(root)
    };
    serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
}

fn seed_list(current: &[u64], first: Option<u64>, count: Option<usize>) -> Vec<u64> {
    let start = first.unwrap_or_else(|| current.first().copied().unwrap_or(0));
    let len = count.unwrap_or(current.len());
    (start..start + len as u64).collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Write the main CSV and, when writing to a file, its manifest.
fn finish(cli: &Cli, name: &str, config: &impl Serialize, csv: &str, mut extra: Vec<PathBuf>, started: Instant) -> Result<()> {
    emit(cli.out.as_deref(), csv)?;
    if let Some(out) = &cli.out {
        let mut outputs = vec![out.clone()];
        outputs.append(&mut extra);
        Manifest::new(name, config, started, outputs)?.write(out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let started = Instant::now();
    let cfg_path = cli.config.as_deref();
    match &cli.cmd {
        Cmd::GenXor(a) => {
            let mut d: XorData = parse_config(cfg_path)?;
            a.xor.apply(&mut d);
            set(&mut d.pool_seed, cli.seed);
            let pool = XorPool { k: d.k, seed: d.pool_seed, rows: d.pool_rows, cols: d.pool_cols };
            let ds = if a.test { pool.test(d.n, d.p)? } else { pool.train(d.n, d.p)? };
            let Some(out) = &cli.out else {
                bail!("gen-xor needs --out");
            };
            ds.write_csv(out)?;
            ds.write_provenance(out)?;
        }
        Cmd::Train(a) => {
            let mut spec: TrainSpec = parse_config(cfg_path)?;
            a.optim.apply(&mut spec.train);
            set(&mut spec.train.seed, cli.seed);
            let h = a.hidden.or(spec.hidden).unwrap_or(64);
            let source = a.data.source(spec.data.take())?;
            let (train, test) = load(&source)?;
            let fitted = nsa_core::train::fit(&train, h, &spec.train)?;
            let kind = spec.train.loss_for(&train)?;
            let report = metrics::evaluate(&fitted.model, &train, &test, kind)?;
            write_model_and_report(&cli, &fitted.model, &report)?;
        }
        Cmd::Nsa(a) | Cmd::FsaNsa(a) => {
            let fsa = matches!(cli.cmd, Cmd::FsaNsa(_));
            let mut spec: AnnealSpec = parse_config(cfg_path)?;
            let cfg = &mut spec.anneal;
            a.optim.apply(&mut cfg.train);
            set(&mut cfg.train.seed, cli.seed);
            set(&mut cfg.start_nodes, a.start_nodes);
            set(&mut cfg.end_nodes, a.nodes);
            set(&mut cfg.n_iter, a.n_iter);
            set(&mut cfg.mu, a.mu);
            let source = a.data.source(spec.data.take())?;
            if fsa {
                let default_k = match &source {
                    DataSource::Xor(x) => Some(x.k),
                    DataSource::Csv(_) => None,
                };
                cfg.target_features = a.features.or(cfg.target_features).or(default_k);
                if cfg.target_features.is_none() {
                    bail!("fsa-nsa needs --features");
                }
            } else {
                cfg.target_features = None;
            }
            let (train, test) = load(&source)?;
            let (record, trace, model) = harness::train_annealed(&train, &test, cfg)?;
            let kind = cfg.train.loss_for(&train)?;
            let report = metrics::evaluate(&model, &train, &test, kind)?;
            write_model_and_report(&cli, &model, &report)?;
            if let Some(out) = &cli.out {
                fs::write(with_suffix(out, ".trace.csv"), trace.to_csv())?;
            }
            eprintln!(
                "nodes {} features {:?} train loss {}",
                record.node_count, record.features, record.loss
            );
        }
        Cmd::Eval(a) => {
            let model = MlpModel::from_json(&fs::read_to_string(&a.model)?)?;
            let (train, test) = load(&a.data.source(None)?)?;
            let kind = TrainConfig::default().loss_for(&train)?;
            let report = metrics::evaluate(&model, &train, &test, kind)?;
            emit(cli.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Cmd::SweepH(a) => {
            let mut spec: harness::SweepHSpec = parse_config(cfg_path)?;
            a.xor.apply(&mut spec.data);
            a.optim.apply(&mut spec.train);
            set(&mut spec.hidden, a.hidden.clone());
            spec.seeds = seed_list(&spec.seeds, cli.seed, a.restarts);
            let rows = harness::sweep_h(&spec)?;
            finish(&cli, "sweep-h", &spec, &harness::sweep_h_csv(&rows), vec![], started)?;
        }
        Cmd::SweepN(a) => {
            let mut spec: harness::SweepNSpec = parse_config(cfg_path)?;
            a.xor.apply(&mut spec.data);
            a.optim.apply(&mut spec.train);
            a.optim.apply(&mut spec.anneal.train);
            set(&mut spec.n_values, a.n_values.clone());
            set(&mut spec.hidden, a.hidden);
            set(&mut spec.anneal.start_nodes, a.start_nodes);
            set(&mut spec.anneal.n_iter, a.n_iter);
            spec.anneal.end_nodes = spec.hidden.min(spec.anneal.start_nodes);
            spec.seeds = seed_list(&spec.seeds, cli.seed, a.restarts);
            let rows = harness::sweep_n(&spec)?;
            finish(&cli, "sweep-n", &spec, &harness::sweep_n_csv(&rows), vec![], started)?;
        }
        Cmd::Restarts(a) => {
            let mut spec: harness::RestartsSpec = parse_config(cfg_path)?;
            a.optim.apply(&mut spec.train);
            set(&mut spec.hidden, a.hidden);
            spec.data = a.data.source(Some(spec.data.clone()))?;
            spec.seeds = seed_list(&spec.seeds, cli.seed, a.restarts);
            let runs = harness::restarts(&spec)?;
            finish(&cli, "restarts", &spec, &harness::restarts_csv(&runs), vec![], started)?;
        }
        Cmd::HitTime(a) => {
            let mut spec: harness::HitTimeSpec = parse_config(cfg_path)?;
            a.xor.apply(&mut spec.data);
            a.optim.apply(&mut spec.train);
            set(&mut spec.p_values, a.p_values.clone());
            set(&mut spec.hidden, a.hidden);
            set(&mut spec.auc_threshold, a.threshold);
            set(&mut spec.max_restarts, a.max_restarts);
            set(&mut spec.trials, a.trials);
            set(&mut spec.base_seed, cli.seed);
            let rows = harness::hit_time(&spec)?;
            finish(&cli, "hit-time", &spec, &harness::hit_time_csv(&rows), vec![], started)?;
        }
        Cmd::GridSearch(a) => {
            let mut spec: harness::GridSearchSpec = parse_config(cfg_path)?;
            a.optim.apply(&mut spec.train);
            set(&mut spec.hidden, a.hidden.clone());
            set(&mut spec.weight_decay, a.l2.clone());
            set(&mut spec.batch_size, a.batch.clone());
            set(&mut spec.folds, a.folds);
            set(&mut spec.cv_runs, a.cv_runs);
            set(&mut spec.final_runs, a.final_runs);
            set(&mut spec.base_seed, cli.seed);
            set(&mut spec.anneal.start_nodes, a.start_nodes);
            set(&mut spec.anneal.n_iter, a.n_iter);
            if let Some(levels) = &a.sparsity {
                spec.sparsity = levels.iter().map(|s| parse_sparsity(s)).collect::<Result<_>>()?;
            }
            if a.data.csv.is_some() {
                match a.data.source(None)? {
                    DataSource::Csv(c) => spec.data = Some(c),
                    DataSource::Xor(_) => unreachable!("--csv always yields a CSV source"),
                }
            }
            let report = harness::grid_search(&spec)?;
            let mut extra = vec![];
            if let Some(out) = &cli.out {
                let cells = with_suffix(out, ".cells.csv");
                fs::write(&cells, harness::grid_cells_csv(&report))?;
                let json = with_suffix(out, ".report.json");
                fs::write(&json, serde_json::to_string_pretty(&report)?)?;
                extra.extend([cells, json]);
            }
            eprintln!(
                "best cell: h={} l2={} batch={}; majority baseline {}",
                report.best.hidden, report.best.weight_decay, report.best.batch_size, report.majority_baseline
            );
            finish(&cli, "grid-search", &spec, &harness::grid_models_csv(&report), extra, started)?;
        }
        Cmd::Schedule(a) => {
            let mut spec: harness::ScheduleSpec = parse_config(cfg_path)?;
            set(&mut spec.anneal.start_nodes, a.start_nodes);
            set(&mut spec.anneal.end_nodes, a.nodes);
            set(&mut spec.anneal.n_iter, a.n_iter);
            set(&mut spec.anneal.mu, a.mu);
            set(&mut spec.p, a.p);
            if a.features.is_some() {
                spec.anneal.target_features = a.features;
            }
            let rows = harness::schedule_table(&spec)?;
            finish(&cli, "schedule", &spec, &harness::schedule_csv(&rows), vec![], started)?;
        }
    }
    Ok(())
}

fn parse_sparsity(s: &str) -> Result<Sparsity> {
    let (f, n) = s
        .split_once(':')
        .with_context(|| format!("sparsity '{s}' is not features:nodes"))?;
    Ok(Sparsity {
        features: f.trim().parse()?,
        nodes: n.trim().parse()?,
    })
}

fn write_model_and_report(cli: &Cli, model: &MlpModel, report: &metrics::EvalReport) -> Result<()> {
    let report_json = serde_json::to_string_pretty(report)? + "\n";
    match &cli.out {
        Some(out) => {
            fs::write(out, model.to_json()?)?;
            fs::write(with_suffix(out, ".report.json"), report_json)?;
        }
        None => print!("{report_json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for cause in e.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}

fn load(source: &DataSource) -> Result<(nsa_core::Dataset, nsa_core::Dataset)> {
    let what = match source {
        DataSource::Xor(x) => format!("XOR data (k={}, p={}, n={})", x.k, x.p, x.n),
        DataSource::Csv(c) => c.path.display().to_string(),
    };
    source.load().with_context(|| format!("loading {what}"))
}
