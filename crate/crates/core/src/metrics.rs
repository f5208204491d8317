//! Evaluation metrics and the hit-time statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Matrix, MlpModel};
use crate::train::{self, LossKind, TrainConfig};

/// Area under the ROC curve as the normalized Mann-Whitney U statistic: the fraction of
/// (positive, negative) pairs ranked correctly, with ties counted as one half.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            what: "AUC labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let n_pos = labels.iter().filter(|&&l| l != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    // twice the rank sum of positives, with 1-based mid-ranks for tie groups
    let mut rank_sum2: u128 = 0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let pos_in_group = idx[start..end].iter().filter(|&&i| labels[i] != 0).count() as u128;
        let mid2 = (start + 1 + end) as u128;
        rank_sum2 += pos_in_group * mid2;
        start = end;
    }
    let n_pos_u = n_pos as u128;
    let u2 = rank_sum2 - n_pos_u * (n_pos_u + 1);
    Ok(u2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Fraction of rows whose predicted class matches. A single logit column predicts class 1
/// when the logit is positive.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if logits.rows() == 0 || logits.rows() != labels.len() {
        return Err(Error::Shape {
            what: "accuracy labels",
            expected: logits.rows(),
            actual: labels.len(),
        });
    }
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| predict_row(logits.row(i)) == l)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

fn predict_row(z: &[f64]) -> usize {
    if z.len() == 1 {
        return usize::from(z[0] > 0.0);
    }
    let mut best = 0;
    for (k, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = k;
        }
    }
    best
}

/// Loss and ranking/accuracy figures of a model on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetScore {
    pub loss: f64,
    /// Present only for binary single-logit models.
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub n: usize,
}

/// Score `model` on `ds`, selecting the dataset columns named by the model's feature ids.
pub fn score(model: &MlpModel, ds: &Dataset, kind: LossKind) -> Result<SetScore> {
    let ds = ds.project(model.feature_ids())?;
    let logits = model.forward(ds.x())?;
    let loss = train::mean_loss(model, &ds, kind)?;
    let auc = if model.outputs() == 1 {
        let scores: Vec<f64> = (0..logits.rows()).map(|i| logits.get(i, 0)).collect();
        auc(&scores, ds.y()).ok()
    } else {
        None
    };
    Ok(SetScore {
        loss,
        auc,
        accuracy: accuracy(&logits, ds.y())?,
        n: ds.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_auc: Option<f64>,
    pub test_auc: Option<f64>,
    pub train_acc: f64,
    pub test_acc: f64,
    pub n_train: usize,
    pub n_test: usize,
}

pub fn evaluate(model: &MlpModel, train: &Dataset, test: &Dataset, kind: LossKind) -> Result<EvalReport> {
    let tr = score(model, train, kind)?;
    let te = score(model, test, kind)?;
    Ok(EvalReport {
        train_loss: tr.loss,
        test_loss: te.loss,
        train_auc: tr.auc,
        test_auc: te.auc,
        train_acc: tr.accuracy,
        test_acc: te.accuracy,
        n_train: tr.n,
        n_test: te.n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitTimeConfig {
    pub hidden: usize,
    pub auc_threshold: f64,
    pub max_restarts: usize,
    pub trials: usize,
    /// Trial `t`, restart `r` trains with seed `base_seed + t * max_restarts + r`.
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Initializations used, including the successful one.
    pub restarts: usize,
    /// No initialization reached the threshold within the budget.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitTimeReport {
    pub trials: Vec<TrialOutcome>,
    /// Mean over uncensored trials; `None` when every trial was censored.
    pub mean: Option<f64>,
    pub censored: usize,
}

impl HitTimeReport {
    pub fn from_trials(trials: Vec<TrialOutcome>) -> Self {
        let hits: Vec<usize> = trials.iter().filter(|t| !t.censored).map(|t| t.restarts).collect();
        let mean = if hits.is_empty() {
            None
        } else {
            Some(hits.iter().sum::<usize>() as f64 / hits.len() as f64)
        };
        HitTimeReport {
            censored: trials.len() - hits.len(),
            trials,
            mean,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,restarts,censored\n");
        for (i, t) in self.trials.iter().enumerate() {
            s.push_str(&format!("{i},{},{}\n", t.restarts, t.censored));
        }
        s
    }
}

/// Number of fresh initializations needed until a trained model reaches the train AUC
/// threshold, averaged over independent trials. Trials run in parallel; results are
/// reported in trial order.
pub fn hit_time(train_set: &Dataset, cfg: &HitTimeConfig, train_cfg: &TrainConfig) -> Result<HitTimeReport> {
    if cfg.max_restarts == 0 || cfg.trials == 0 {
        return Err(Error::Config("hit time needs max_restarts >= 1 and trials >= 1".into()));
    }
    let kind = train_cfg.loss_for(train_set)?;
    if kind != LossKind::BinaryLogistic {
        return Err(Error::Config("hit time is defined for binary problems".into()));
    }
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            for r in 0..cfg.max_restarts {
                let seed = cfg.base_seed + (t * cfg.max_restarts + r) as u64;
                let fitted = train::fit(train_set, cfg.hidden, &train_cfg.with_seed(seed))?;
                let s = score(&fitted.model, train_set, kind)?;
                if s.auc.unwrap_or(0.0) >= cfg.auc_threshold {
                    return Ok(TrialOutcome {
                        restarts: r + 1,
                        censored: false,
                    });
                }
            }
            Ok(TrialOutcome {
                restarts: cfg.max_restarts,
                censored: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HitTimeReport::from_trials(trials))
}
