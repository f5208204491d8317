//! Experiment drivers: sweeps over hidden width and sample size, random-restart studies,
//! hit time, the cross-validated grid search and schedule tabulation.
//!
//! Every driver is deterministic in its spec. Independent runs fan out over the rayon
//! pool and are reduced in seed order, so the emitted CSV text is byte-stable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anneal::{self, AnnealConfig, PruneTrace};
use crate::data::{self, CsvSchema, Dataset, SplitSpec, XorPool};
use crate::error::{Error, Result};
use crate::metrics::{self, HitTimeConfig};
use crate::model::MlpModel;
use crate::train::{self, TrainConfig};

/// k-D XOR train/test data cut from a fixed pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XorData {
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub n_test: usize,
    pub pool_seed: u64,
    pub pool_rows: usize,
    pub pool_cols: usize,
}

impl Default for XorData {
    fn default() -> Self {
        XorData {
            k: 3,
            p: 3,
            n: 1000,
            n_test: 3000,
            pool_seed: 0,
            pool_rows: data::DEFAULT_POOL_ROWS,
            pool_cols: data::DEFAULT_POOL_COLS,
        }
    }
}

impl XorData {
    pub fn pool(&self) -> XorPool {
        XorPool {
            k: self.k,
            seed: self.pool_seed,
            rows: self.pool_rows,
            cols: self.pool_cols,
        }
    }

    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        let pool = self.pool();
        Ok((pool.train(self.n, self.p)?, pool.test(self.n_test, self.p)?))
    }
}

/// A CSV file split into train and test parts, optionally standardized on train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvData {
    pub path: PathBuf,
    pub schema: CsvSchema,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

impl CsvData {
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        let ds = data::load_csv(&self.path, &self.schema)?;
        let (train, test) = data::split(&ds, &self.split)?;
        if self.standardize {
            let (train, test, _) = data::standardize(&train, &test)?;
            Ok((train, test))
        } else {
            Ok((train, test))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Xor(XorData),
    Csv(CsvData),
}

impl DataSource {
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DataSource::Xor(x) => x.load(),
            DataSource::Csv(c) => c.load(),
        }
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Mean training cross-entropy of the final model.
    pub loss: f64,
    pub train_auc: Option<f64>,
    pub test_auc: Option<f64>,
    pub train_acc: f64,
    pub test_acc: f64,
    pub node_count: usize,
    pub features: Vec<usize>,
    pub weights: usize,
    /// Not written to CSV output.
    pub wall_ms: u128,
}

impl RunRecord {
    fn from_model(seed: u64, model: &MlpModel, train: &Dataset, test: &Dataset, cfg: &TrainConfig, started: Instant) -> Result<Self> {
        let kind = cfg.loss_for(train)?;
        let r = metrics::evaluate(model, train, test, kind)?;
        Ok(RunRecord {
            seed,
            loss: r.train_loss,
            train_auc: r.train_auc,
            test_auc: r.test_auc,
            train_acc: r.train_acc,
            test_acc: r.test_acc,
            node_count: model.hidden(),
            features: model.feature_ids().to_vec(),
            weights: model.weight_count(),
            wall_ms: started.elapsed().as_millis(),
        })
    }

    pub const CSV_HEADER: &'static str =
        "seed,loss,train_auc,test_auc,train_acc,test_acc,node_count,feature_count,weights,features";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.loss,
            opt(self.train_auc),
            opt(self.test_auc),
            self.train_acc,
            self.test_acc,
            self.node_count,
            self.features.len(),
            self.weights,
            join_ids(&self.features)
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Train one plain network of width `h`.
pub fn train_plain(train: &Dataset, test: &Dataset, h: usize, cfg: &TrainConfig) -> Result<RunRecord> {
    let started = Instant::now();
    let fitted = train::fit(train, h, cfg)?;
    RunRecord::from_model(cfg.seed, &fitted.model, train, test, cfg, started)
}

/// One NSA or FSA+NSA run.
pub fn train_annealed(train: &Dataset, test: &Dataset, cfg: &AnnealConfig) -> Result<(RunRecord, PruneTrace, MlpModel)> {
    let started = Instant::now();
    let out = anneal::run_fsa_nsa(train, cfg)?;
    let rec = RunRecord::from_model(cfg.train.seed, &out.model, train, test, &cfg.train, started)?;
    Ok((rec, out.trace, out.model))
}

/// The training settings shared by the XOR experiments.
pub fn xor_train_defaults() -> TrainConfig {
    TrainConfig::default()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list must not be empty".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------------------
// sweep over hidden width

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepHSpec {
    pub data: XorData,
    pub hidden: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl Default for SweepHSpec {
    fn default() -> Self {
        SweepHSpec {
            data: XorData::default(),
            hidden: vec![2, 4, 8, 16, 32, 64, 128],
            seeds: default_seeds(),
            train: xor_train_defaults(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepHRow {
    pub hidden: usize,
    /// Lowest-loss run among the seeds; `None` when every run failed.
    pub best: Option<RunRecord>,
    pub failed: usize,
}

/// For each width, the lowest-loss run over the seed list.
pub fn sweep_h(spec: &SweepHSpec) -> Result<Vec<SweepHRow>> {
    check_seeds(&spec.seeds)?;
    let (train, test) = spec.data.load()?;
    let cells: Vec<(usize, u64)> = spec
        .hidden
        .iter()
        .flat_map(|&h| spec.seeds.iter().map(move |&s| (h, s)))
        .collect();
    let runs: Vec<Result<RunRecord>> = cells
        .par_iter()
        .map(|&(h, s)| train_plain(&train, &test, h, &spec.train.with_seed(s)))
        .collect();
    let mut rows = Vec::with_capacity(spec.hidden.len());
    for (i, &h) in spec.hidden.iter().enumerate() {
        let chunk = &runs[i * spec.seeds.len()..(i + 1) * spec.seeds.len()];
        let ok: Vec<&RunRecord> = chunk.iter().filter_map(|r| r.as_ref().ok()).collect();
        let best = ok
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.seed.cmp(&b.seed)))
            .map(|r| (*r).clone());
        rows.push(SweepHRow {
            hidden: h,
            best,
            failed: chunk.len() - ok.len(),
        });
    }
    Ok(rows)
}

pub fn sweep_h_csv(rows: &[SweepHRow]) -> String {
    let mut s = String::from("hidden,seed,loss,train_auc,test_auc,failed\n");
    for r in rows {
        match &r.best {
            Some(b) => writeln!(
                s,
                "{},{},{},{},{},{}",
                r.hidden,
                b.seed,
                b.loss,
                opt(b.train_auc),
                opt(b.test_auc),
                r.failed
            ),
            None => writeln!(s, "{},NA,NA,NA,NA,{}", r.hidden, r.failed),
        }
        .expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// sweep over sample size

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepNSpec {
    pub data: XorData,
    pub n_values: Vec<usize>,
    /// Width of the plain networks.
    pub hidden: usize,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// Node/feature selection settings for the FSA+NSA series; its `train.seed` is replaced
    /// by each seed and `target_features` defaults to `k`.
    pub anneal: AnnealConfig,
}

impl Default for SweepNSpec {
    fn default() -> Self {
        SweepNSpec {
            data: XorData {
                p: 15,
                ..XorData::default()
            },
            n_values: vec![300, 1000, 3000],
            hidden: 128,
            seeds: default_seeds(),
            train: xor_train_defaults(),
            anneal: AnnealConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    /// Plain network on the `k` true features only.
    TrueFeatures,
    /// Plain network on all `p` features.
    AllFeatures,
    /// Node and feature selection on all `p` features.
    FsaNsa,
}

impl Series {
    pub fn label(self) -> &'static str {
        match self {
            Series::TrueFeatures => "p_eq_k",
            Series::AllFeatures => "p_all",
            Series::FsaNsa => "fsa_nsa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepNRow {
    pub n: usize,
    pub series: Series,
    pub mean_loss: f64,
    pub mean_train_auc: f64,
    pub mean_test_auc: f64,
    pub runs: Vec<RunRecord>,
    pub failed: usize,
}

/// Mean loss and AUC over seeds for each sample size and series.
pub fn sweep_n(spec: &SweepNSpec) -> Result<Vec<SweepNRow>> {
    check_seeds(&spec.seeds)?;
    let series = [Series::TrueFeatures, Series::AllFeatures, Series::FsaNsa];
    let mut rows = Vec::new();
    for &n in &spec.n_values {
        let all = XorData { n, ..spec.data.clone() };
        let (train, test) = all.load()?;
        let truth = (0..spec.data.k).collect::<Vec<_>>();
        let (train_k, test_k) = (train.project(&truth)?, test.project(&truth)?);
        let jobs: Vec<(Series, u64)> = series
            .iter()
            .flat_map(|&s| spec.seeds.iter().map(move |&seed| (s, seed)))
            .collect();
        let runs: Vec<Result<RunRecord>> = jobs
            .par_iter()
            .map(|&(s, seed)| match s {
                Series::TrueFeatures => train_plain(&train_k, &test_k, spec.hidden, &spec.train.with_seed(seed)),
                Series::AllFeatures => train_plain(&train, &test, spec.hidden, &spec.train.with_seed(seed)),
                Series::FsaNsa => {
                    let cfg = AnnealConfig {
                        target_features: Some(spec.anneal.target_features.unwrap_or(spec.data.k)),
                        ..spec.anneal.with_seed(seed)
                    };
                    train_annealed(&train, &test, &cfg).map(|r| r.0)
                }
            })
            .collect();
        for (i, &s) in series.iter().enumerate() {
            let chunk = &runs[i * spec.seeds.len()..(i + 1) * spec.seeds.len()];
            let ok: Vec<RunRecord> = chunk.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
            rows.push(SweepNRow {
                n,
                series: s,
                mean_loss: mean(ok.iter().map(|r| r.loss)),
                mean_train_auc: mean(ok.iter().filter_map(|r| r.train_auc)),
                mean_test_auc: mean(ok.iter().filter_map(|r| r.test_auc)),
                failed: chunk.len() - ok.len(),
                runs: ok,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_n_csv(rows: &[SweepNRow]) -> String {
    let mut s = String::from("n,series,mean_loss,mean_train_auc,mean_test_auc,runs,failed\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.n,
            r.series.label(),
            r.mean_loss,
            r.mean_train_auc,
            r.mean_test_auc,
            r.runs.len(),
            r.failed
        )
        .expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// random restarts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestartsSpec {
    pub data: DataSource,
    pub hidden: usize,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl Default for RestartsSpec {
    fn default() -> Self {
        RestartsSpec {
            data: DataSource::Xor(XorData {
                k: 4,
                p: 4,
                ..XorData::default()
            }),
            hidden: 128,
            seeds: (0..100).collect(),
            train: xor_train_defaults(),
        }
    }
}

/// Train once per seed and sort the runs by final training loss (ties by seed).
pub fn restarts(spec: &RestartsSpec) -> Result<Vec<RunRecord>> {
    check_seeds(&spec.seeds)?;
    let (train, test) = spec.data.load()?;
    let mut runs = spec
        .seeds
        .par_iter()
        .map(|&s| train_plain(&train, &test, spec.hidden, &spec.train.with_seed(s)))
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.loss.total_cmp(&b.loss).then(a.seed.cmp(&b.seed)));
    Ok(runs)
}

pub fn restarts_csv(runs: &[RunRecord]) -> String {
    let mut s = format!("rank,{}\n", RunRecord::CSV_HEADER);
    for (i, r) in runs.iter().enumerate() {
        writeln!(s, "{},{}", i + 1, r.csv_row()).expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// hit time

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HitTimeSpec {
    pub data: XorData,
    pub p_values: Vec<usize>,
    pub hidden: usize,
    pub auc_threshold: f64,
    pub max_restarts: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
}

impl Default for HitTimeSpec {
    fn default() -> Self {
        HitTimeSpec {
            data: XorData {
                n: 3000,
                ..XorData::default()
            },
            p_values: vec![3, 6, 9],
            hidden: 20,
            auc_threshold: 0.95,
            max_restarts: 50,
            trials: 10,
            base_seed: 0,
            train: xor_train_defaults(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitTimeRow {
    pub p: usize,
    pub report: metrics::HitTimeReport,
}

pub fn hit_time(spec: &HitTimeSpec) -> Result<Vec<HitTimeRow>> {
    spec.p_values
        .iter()
        .map(|&p| {
            let (train, _) = XorData { p, ..spec.data.clone() }.load()?;
            let cfg = HitTimeConfig {
                hidden: spec.hidden,
                auc_threshold: spec.auc_threshold,
                max_restarts: spec.max_restarts,
                trials: spec.trials,
                base_seed: spec.base_seed,
            };
            Ok(HitTimeRow {
                p,
                report: metrics::hit_time(&train, &cfg, &spec.train)?,
            })
        })
        .collect()
}

pub fn hit_time_csv(rows: &[HitTimeRow]) -> String {
    let mut s = String::from("p,mean_restarts,censored,trials,per_trial\n");
    for r in rows {
        let per: Vec<String> = r
            .report
            .trials
            .iter()
            .map(|t| if t.censored { format!(">{}", t.restarts) } else { t.restarts.to_string() })
            .collect();
        writeln!(
            s,
            "{},{},{},{},{}",
            r.p,
            opt(r.report.mean),
            r.report.censored,
            r.report.trials.len(),
            per.join(" ")
        )
        .expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// grid search on tabular data

/// A requested FSA+NSA sparsity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sparsity {
    pub features: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchSpec {
    pub data: Option<CsvData>,
    pub hidden: Vec<usize>,
    pub weight_decay: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub folds: usize,
    pub cv_runs: usize,
    pub final_runs: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    pub sparsity: Vec<Sparsity>,
    /// Settings for the FSA+NSA runs; node and feature targets come from `sparsity`.
    pub anneal: AnnealConfig,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        GridSearchSpec {
            data: None,
            hidden: vec![16, 32, 64, 128, 256, 512],
            weight_decay: vec![0.0001, 0.001, 0.01, 0.1],
            batch_size: vec![16, 32, 64],
            folds: 5,
            cv_runs: 10,
            final_runs: 10,
            base_seed: 0,
            train: TrainConfig::default(),
            sparsity: Vec::new(),
            anneal: AnnealConfig {
                start_nodes: 512,
                ..AnnealConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub hidden: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub cell: GridCell,
    /// Mean validation accuracy over runs and folds; `None` if the cell failed.
    pub cv_accuracy: Option<f64>,
}

/// One line of a Table-2-style summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub nodes: usize,
    pub features: usize,
    /// Entries of `W` on surviving inputs.
    pub input_weights: usize,
    /// Entries of `Beta`.
    pub output_weights: usize,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub runs: Vec<RunRecord>,
}

impl ModelSummary {
    pub fn weights(&self) -> usize {
        self.input_weights + self.output_weights
    }

    fn from_runs(name: String, classes_out: usize, runs: Vec<RunRecord>) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::Config(format!("{name}: no successful runs")))?;
        let nodes = first.node_count;
        let features = first.features.len();
        let accs: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
        Ok(ModelSummary {
            name,
            nodes,
            features,
            input_weights: nodes * features,
            output_weights: nodes * classes_out,
            test_acc_mean: mean(accs.iter().copied()),
            test_acc_std: std_dev(&accs),
            runs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<CellScore>,
    pub best: GridCell,
    pub majority_baseline: f64,
    /// Best plain network, FSA+NSA per sparsity level, and the equivalent-size network for
    /// the best sparsity level.
    pub models: Vec<ModelSummary>,
    pub best_sparsity: Option<Sparsity>,
}

/// Largest width whose connection count `h * (p + C)` does not exceed `budget` (at least 1).
pub fn equivalent_width(budget: usize, p: usize, outputs: usize) -> usize {
    (budget / (p + outputs)).max(1)
}

fn cv_score(train: &Dataset, cell: &GridCell, spec: &GridSearchSpec) -> Result<f64> {
    let cfg = TrainConfig {
        weight_decay: cell.weight_decay,
        batch_size: cell.batch_size,
        ..spec.train.clone()
    };
    let mut accs = Vec::with_capacity(spec.cv_runs * spec.folds);
    for run in 0..spec.cv_runs {
        let seed = spec.base_seed + run as u64;
        let folds = data::kfold(train.len(), spec.folds, seed)?;
        for (f, val_idx) in folds.iter().enumerate() {
            let fit_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let fit_set = train.subset(&fit_idx);
            let val_set = train.subset(val_idx);
            let fold_cfg = cfg.with_seed(seed * spec.folds as u64 + f as u64);
            let model = train::fit(&fit_set, cell.hidden, &fold_cfg)?.model;
            let kind = fold_cfg.loss_for(train)?;
            accs.push(metrics::score(&model, &val_set, kind)?.accuracy);
        }
    }
    Ok(mean(accs))
}

/// Cross-validated grid search, final retraining, FSA+NSA at each sparsity level and the
/// equivalent-size baseline.
pub fn grid_search(spec: &GridSearchSpec) -> Result<GridReport> {
    let data = spec
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("grid search needs a CSV data source".into()))?;
    if spec.folds < 2 || spec.cv_runs == 0 || spec.final_runs == 0 {
        return Err(Error::Config("grid search needs folds >= 2, cv_runs >= 1, final_runs >= 1".into()));
    }
    let (train, test) = data.load()?;
    let kind = spec.train.loss_for(&train)?;
    let outputs = kind.outputs(train.n_classes());

    let grid: Vec<GridCell> = spec
        .hidden
        .iter()
        .flat_map(|&hidden| {
            spec.weight_decay.iter().flat_map(move |&weight_decay| {
                spec.batch_size.iter().map(move |&batch_size| GridCell {
                    hidden,
                    weight_decay,
                    batch_size,
                })
            })
        })
        .collect();
    if grid.is_empty() {
        return Err(Error::Config("empty hyper-parameter grid".into()));
    }
    let cells: Vec<CellScore> = grid
        .par_iter()
        .map(|cell| CellScore {
            cell: *cell,
            cv_accuracy: cv_score(&train, cell, spec).ok(),
        })
        .collect();
    let best = cells
        .iter()
        .filter_map(|c| c.cv_accuracy.map(|a| (c.cell, a)))
        .fold(None, |acc: Option<(GridCell, f64)>, (cell, a)| match acc {
            Some((_, best)) if best >= a => acc,
            _ => Some((cell, a)),
        })
        .ok_or_else(|| Error::Config("every grid cell failed".into()))?
        .0;

    let best_cfg = TrainConfig {
        weight_decay: best.weight_decay,
        batch_size: best.batch_size,
        ..spec.train.clone()
    };
    let seeds: Vec<u64> = (0..spec.final_runs as u64).map(|r| spec.base_seed + r).collect();
    let plain_runs = |h: usize| -> Result<Vec<RunRecord>> {
        seeds
            .par_iter()
            .map(|&s| train_plain(&train, &test, h, &best_cfg.with_seed(s)))
            .collect()
    };

    let mut models = vec![ModelSummary::from_runs(
        format!("nn_best_h{}", best.hidden),
        outputs,
        plain_runs(best.hidden)?,
    )?];

    let mut best_sparse: Option<(Sparsity, f64, usize)> = None;
    for level in &spec.sparsity {
        let cfg = AnnealConfig {
            end_nodes: level.nodes,
            target_features: Some(level.features),
            start_nodes: spec.anneal.start_nodes.max(level.nodes),
            train: best_cfg.clone(),
            ..spec.anneal.clone()
        };
        let runs = seeds
            .par_iter()
            .map(|&s| train_annealed(&train, &test, &cfg.with_seed(s)).map(|r| r.0))
            .collect::<Result<Vec<_>>>()?;
        let summary = ModelSummary::from_runs(
            format!("fsa_nsa_k{}_h{}", level.features, level.nodes),
            outputs,
            runs,
        )?;
        if best_sparse.is_none_or(|(_, acc, _)| summary.test_acc_mean > acc) {
            best_sparse = Some((*level, summary.test_acc_mean, summary.weights()));
        }
        models.push(summary);
    }
    if let Some((_, _, budget)) = best_sparse {
        let h = equivalent_width(budget, train.n_features(), outputs);
        models.push(ModelSummary::from_runs(format!("nn_equivalent_h{h}"), outputs, plain_runs(h)?)?);
    }

    let counts = test.class_counts();
    let majority = train
        .class_counts()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(0);
    Ok(GridReport {
        cells,
        best,
        majority_baseline: counts[majority] as f64 / test.len() as f64,
        models,
        best_sparsity: best_sparse.map(|b| b.0),
    })
}

pub fn grid_cells_csv(report: &GridReport) -> String {
    let mut s = String::from("hidden,weight_decay,batch_size,cv_accuracy\n");
    for c in &report.cells {
        writeln!(
            s,
            "{},{},{},{}",
            c.cell.hidden,
            c.cell.weight_decay,
            c.cell.batch_size,
            opt(c.cv_accuracy)
        )
        .expect("write to string");
    }
    s
}

/// Model comparison in the layout "weights (nodes)" plus accuracy mean and std.
pub fn grid_models_csv(report: &GridReport) -> String {
    let mut s = String::from(
        "model,weights,input_weights,output_weights,nodes,features,test_acc_mean,test_acc_std\n",
    );
    for m in &report.models {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            m.name,
            m.weights(),
            m.input_weights,
            m.output_weights,
            m.nodes,
            m.features,
            m.test_acc_mean,
            m.test_acc_std
        )
        .expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// schedules

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub anneal: AnnealConfig,
    /// Input count the feature schedule starts from.
    pub p: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            anneal: AnnealConfig {
                target_features: Some(3),
                ..AnnealConfig::default()
            },
            p: 15,
        }
    }
}

/// `(e, h_e, p_e)` for every epoch.
pub fn schedule_table(spec: &ScheduleSpec) -> Result<Vec<(usize, usize, usize)>> {
    let nodes = spec.anneal.node_schedule();
    let features = spec.anneal.feature_schedule(spec.p);
    nodes.validate()?;
    features.validate()?;
    Ok((1..=spec.anneal.n_iter)
        .map(|e| (e, nodes.value(e), features.value(e)))
        .collect())
}

pub fn schedule_csv(rows: &[(usize, usize, usize)]) -> String {
    let mut s = String::from("epoch,h_e,p_e\n");
    for (e, h, p) in rows {
        writeln!(s, "{e},{h},{p}").expect("write to string");
    }
    s
}

// ---------------------------------------------------------------------------------------
// output

/// Run metadata written next to each CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub threads: usize,
    pub wall_ms: u128,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, started: Instant, outputs: Vec<PathBuf>) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let config_sha256 = hex::encode(Sha256::digest(serde_json::to_string(&config)?.as_bytes()));
        Ok(Manifest {
            command: command.to_string(),
            config,
            config_sha256,
            threads: rayon::current_num_threads(),
            wall_ms: started.elapsed().as_millis(),
            outputs,
        })
    }

    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::path_for(out);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
