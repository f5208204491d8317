//! Annealing schedules and the node / feature selection training loops.
//!
//! A schedule holds its start count for the first `onset_fraction * n_iter` epochs and
//! then decays towards its end count:
//!
//! ```text
//! value(e) = end + round((start - end) * max(0, (N - 2ẽ) / (2ẽμ + N)))
//! ẽ = max(0, e - onset_fraction * n_iter),   N = plateau_fraction * n_iter
//! ```
//!
//! The node schedule defaults to onset 1/4 and `N = 3/4 n_iter`; the feature schedule to
//! onset 0.6 and `N = 0.4 n_iter`. Both use `μ = 30`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::MlpModel;
use crate::rng::{self, Stream};
use crate::train::{self, AdamHyper, AdamState, TrainConfig};

pub const DEFAULT_MU: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub start_count: usize,
    pub end_count: usize,
    pub n_iter: usize,
    pub mu: f64,
    pub onset_fraction: f64,
    /// Decay length `N` as a fraction of `n_iter`.
    pub plateau_fraction: f64,
}

impl AnnealSchedule {
    /// Hidden-node schedule from `start` (H) to `end` (h).
    pub fn nodes(start: usize, end: usize, n_iter: usize) -> Self {
        AnnealSchedule {
            start_count: start,
            end_count: end,
            n_iter,
            mu: DEFAULT_MU,
            onset_fraction: 0.25,
            plateau_fraction: 0.75,
        }
    }

    /// Input-feature schedule from `start` (p) to `end` (k).
    pub fn features(start: usize, end: usize, n_iter: usize) -> Self {
        AnnealSchedule {
            start_count: start,
            end_count: end,
            n_iter,
            mu: DEFAULT_MU,
            onset_fraction: 0.6,
            plateau_fraction: 0.4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.end_count == 0 || self.end_count > self.start_count {
            return Err(Error::Config(format!(
                "schedule needs 1 <= end <= start (start={}, end={})",
                self.start_count, self.end_count
            )));
        }
        if self.n_iter == 0 {
            return Err(Error::Config("n_iter must be at least 1".into()));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Config(format!("mu must be non-negative, got {}", self.mu)));
        }
        if !(self.onset_fraction >= 0.0 && self.plateau_fraction > 0.0) {
            return Err(Error::Config("onset must be >= 0 and plateau > 0".into()));
        }
        if self.onset_fraction + self.plateau_fraction / 2.0 > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "schedule does not reach its end count within {} epochs",
                self.n_iter
            )));
        }
        Ok(())
    }

    pub fn onset_epoch(&self) -> f64 {
        self.onset_fraction * self.n_iter as f64
    }

    pub fn plateau_length(&self) -> f64 {
        self.plateau_fraction * self.n_iter as f64
    }

    /// First epoch at which the decay factor is exactly zero.
    pub fn extinction_epoch(&self) -> usize {
        (self.onset_epoch() + self.plateau_length() / 2.0 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn value(&self, epoch: usize) -> usize {
        let big_n = self.plateau_length();
        let shifted = (epoch as f64 - self.onset_epoch()).max(0.0);
        let factor = ((big_n - 2.0 * shifted) / (2.0 * shifted * self.mu + big_n)).max(0.0);
        let span = (self.start_count - self.end_count) as f64;
        self.end_count + round_half_up(span * factor)
    }
}

/// Round to the nearest integer, halves up. The slack absorbs floating-point error at
/// exact halves; genuine distances from a half are far larger for realistic schedules.
fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor() as usize
}

/// One row per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub loss: f64,
    pub node_count: usize,
    pub feature_count: usize,
    pub feature_ids: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub rows: Vec<TraceRow>,
}

impl PruneTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,node_count,feature_count,feature_ids\n");
        for r in &self.rows {
            let ids: Vec<String> = r.feature_ids.iter().map(usize::to_string).collect();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                r.loss,
                r.node_count,
                r.feature_count,
                ids.join(" ")
            ));
        }
        s
    }
}

/// Settings for a node (and optionally feature) selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub start_nodes: usize,
    pub end_nodes: usize,
    /// Features to keep; `None` disables the feature phase.
    pub target_features: Option<usize>,
    pub n_iter: usize,
    pub mu: f64,
    pub node_onset: f64,
    pub node_plateau: f64,
    pub feature_onset: f64,
    pub feature_plateau: f64,
    /// Optimizer settings. `epochs` is ignored in favour of `n_iter`.
    pub train: TrainConfig,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            start_nodes: 1024,
            end_nodes: 128,
            target_features: None,
            n_iter: 300,
            mu: DEFAULT_MU,
            node_onset: 0.25,
            node_plateau: 0.75,
            feature_onset: 0.6,
            feature_plateau: 0.4,
            train: TrainConfig::default(),
        }
    }
}

impl AnnealConfig {
    pub fn node_schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            mu: self.mu,
            onset_fraction: self.node_onset,
            plateau_fraction: self.node_plateau,
            ..AnnealSchedule::nodes(self.start_nodes, self.end_nodes, self.n_iter)
        }
    }

    pub fn feature_schedule(&self, p: usize) -> AnnealSchedule {
        AnnealSchedule {
            mu: self.mu,
            onset_fraction: self.feature_onset,
            plateau_fraction: self.feature_plateau,
            ..AnnealSchedule::features(p, self.target_features.unwrap_or(p), self.n_iter)
        }
    }

    pub fn with_seed(&self, seed: u64) -> AnnealConfig {
        AnnealConfig {
            train: self.train.with_seed(seed),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub model: MlpModel,
    pub trace: PruneTrace,
}

/// Node selection only: train from `start_nodes` hidden nodes, pruning to `end_nodes`
/// along the node schedule.
pub fn run_nsa(ds: &Dataset, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    let cfg = AnnealConfig {
        target_features: None,
        ..cfg.clone()
    };
    run_fsa_nsa(ds, &cfg)
}

/// Node and feature selection in a single `n_iter`-epoch loop. Each epoch trains once,
/// normalizes the hidden nodes, keeps the `h_e` nodes with the largest output weights and,
/// once the feature schedule starts, keeps the `p_e` inputs with the largest group weights.
/// The optimizer state is reset whenever a shape changes.
pub fn run_fsa_nsa(ds: &Dataset, cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    cfg.train.validate()?;
    let p = ds.n_features();
    if let Some(k) = cfg.target_features {
        if k == 0 || k > p {
            return Err(Error::Config(format!(
                "target features must lie in 1..={p}, got {k}"
            )));
        }
    }
    let nodes = cfg.node_schedule();
    let features = cfg.feature_schedule(p);
    nodes.validate()?;
    features.validate()?;

    let mut model = train::init_for(ds, cfg.start_nodes, &cfg.train)?;
    let mut state = AdamState::new(&model, AdamHyper::from(&cfg.train));
    let mut shuffle = rng::stream(cfg.train.seed, Stream::Shuffle);
    let mut view = ds.clone();
    let mut trace = PruneTrace::default();

    for epoch in 1..=cfg.n_iter {
        let loss = train::train_epoch(&mut model, &mut state, &view, &cfg.train, &mut shuffle)
            .map_err(|e| e.at_epoch(epoch))?;
        model.normalize_nodes();

        let mut reshaped = false;
        let h_e = nodes.value(epoch);
        if h_e < model.hidden() {
            model.prune_nodes(h_e).map_err(|e| e.at_epoch(epoch))?;
            reshaped = true;
        }
        let p_e = features.value(epoch);
        if p_e < model.inputs() {
            let relevance = model.feature_relevance();
            model
                .prune_features(&relevance.ordering[..p_e])
                .map_err(|e| e.at_epoch(epoch))?;
            view = ds.project(model.feature_ids())?;
            reshaped = true;
        }
        if reshaped {
            state.reset(&model);
        }
        trace.rows.push(TraceRow {
            epoch,
            loss,
            node_count: model.hidden(),
            feature_count: model.inputs(),
            feature_ids: model.feature_ids().to_vec(),
        });
    }
    Ok(AnnealOutcome { model, trace })
}
