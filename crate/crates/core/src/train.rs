//! Cross-entropy loss with analytic gradients, Adam, and the epoch loop.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{dot, Matrix, MlpModel};
use crate::rng::{self, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// One logit, sigmoid cross-entropy. Requires two classes.
    BinaryLogistic,
    /// One logit per class, softmax cross-entropy.
    SoftmaxCe,
}

impl LossKind {
    /// Binary logistic for two classes, softmax otherwise.
    pub fn for_classes(n_classes: usize) -> LossKind {
        if n_classes == 2 {
            LossKind::BinaryLogistic
        } else {
            LossKind::SoftmaxCe
        }
    }

    pub fn outputs(self, n_classes: usize) -> usize {
        match self {
            LossKind::BinaryLogistic => 1,
            LossKind::SoftmaxCe => n_classes,
        }
    }

    /// Loss of one row, writing `d loss / d logits` into `dz`.
    #[inline]
    fn eval(self, z: &[f64], label: usize, dz: &mut [f64]) -> f64 {
        match self {
            LossKind::BinaryLogistic => {
                let z0 = z[0];
                let y = label as f64;
                dz[0] = sigmoid(z0) - y;
                z0.max(0.0) - y * z0 + (-z0.abs()).exp().ln_1p()
            }
            LossKind::SoftmaxCe => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (d, &v) in dz.iter_mut().zip(z) {
                    *d = (v - max).exp();
                    sum += *d;
                }
                for d in dz.iter_mut() {
                    *d /= sum;
                }
                dz[label] -= 1.0;
                max + sum.ln() - z[label]
            }
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    /// Apply weight decay directly to the parameters (AdamW style) instead of adding
    /// `weight_decay * theta` to the gradient.
    pub decoupled_weight_decay: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// `None` picks binary logistic for two classes and softmax otherwise.
    pub loss: Option<LossKind>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            weight_decay: 0.0001,
            decoupled_weight_decay: false,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            epochs: 300,
            seed: 0,
            loss: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn loss_for(&self, ds: &Dataset) -> Result<LossKind> {
        let kind = self.loss.unwrap_or_else(|| LossKind::for_classes(ds.n_classes()));
        if kind == LossKind::BinaryLogistic && ds.n_classes() != 2 {
            return Err(Error::Config(format!(
                "binary logistic loss needs 2 classes, dataset has {}",
                ds.n_classes()
            )));
        }
        Ok(kind)
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Gradient tensors in the order `W, b, Beta, c`, each flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(m: &MlpModel) -> Self {
        Gradients {
            w: vec![0.0; m.hidden() * m.inputs()],
            b: vec![0.0; m.hidden()],
            beta: vec![0.0; m.hidden() * m.outputs()],
            c: vec![0.0; m.outputs()],
        }
    }

    fn tensors(&self) -> [&[f64]; 4] {
        [&self.w, &self.b, &self.beta, &self.c]
    }

    fn clear(&mut self) {
        for t in [&mut self.w, &mut self.b, &mut self.beta, &mut self.c] {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn scale(&mut self, s: f64) {
        for t in [&mut self.w, &mut self.b, &mut self.beta, &mut self.c] {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Reusable buffers for one row's forward/backward pass.
struct Scratch {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    dz: Vec<f64>,
}

impl Scratch {
    fn new(m: &MlpModel) -> Self {
        Scratch {
            hidden: vec![0.0; m.hidden()],
            logits: vec![0.0; m.outputs()],
            dz: vec![0.0; m.outputs()],
        }
    }
}

/// Sum of row losses over `rows`, with the summed gradient accumulated into `g`.
fn accumulate(
    m: &MlpModel,
    x: &Matrix,
    y: &[usize],
    rows: impl Iterator<Item = usize>,
    kind: LossKind,
    g: &mut Gradients,
    s: &mut Scratch,
) -> f64 {
    let p = m.inputs();
    let classes = m.outputs();
    let beta = m.beta();
    let mut total = 0.0;
    for i in rows {
        let xi = x.row(i);
        m.forward_row(xi, &mut s.hidden, &mut s.logits);
        total += kind.eval(&s.logits, y[i], &mut s.dz);
        for (gc, &d) in g.c.iter_mut().zip(&s.dz) {
            *gc += d;
        }
        for j in 0..m.hidden() {
            let a = s.hidden[j];
            if a <= 0.0 {
                continue;
            }
            let gb = &mut g.beta[j * classes..(j + 1) * classes];
            for (gbk, &d) in gb.iter_mut().zip(&s.dz) {
                *gbk += a * d;
            }
            let da = dot(beta.row(j), &s.dz);
            if da == 0.0 {
                continue;
            }
            g.b[j] += da;
            let gw = &mut g.w[j * p..(j + 1) * p];
            for (gwk, &xk) in gw.iter_mut().zip(xi) {
                *gwk += da * xk;
            }
        }
    }
    total
}

fn check_finite(loss: f64, g: &Gradients, batch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "loss",
            epoch: 0,
            batch,
        });
    }
    if g.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite {
            what: "gradient",
            epoch: 0,
            batch,
        });
    }
    Ok(())
}

fn check_labels(m: &MlpModel, y: &[usize], kind: LossKind) -> Result<()> {
    let classes = match kind {
        LossKind::BinaryLogistic => 2,
        LossKind::SoftmaxCe => m.outputs(),
    };
    if kind == LossKind::BinaryLogistic && m.outputs() != 1 {
        return Err(Error::Shape {
            what: "binary logistic outputs",
            expected: 1,
            actual: m.outputs(),
        });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= classes) {
        return Err(Error::Label { label, classes });
    }
    Ok(())
}

/// Mean cross-entropy over the batch and its exact gradient.
pub fn loss_and_grad(
    model: &MlpModel,
    x: &Matrix,
    y: &[usize],
    kind: LossKind,
) -> Result<(f64, Gradients)> {
    if x.cols() != model.inputs() {
        return Err(Error::FeatureMismatch {
            expected: model.inputs(),
            actual: x.cols(),
        });
    }
    if y.is_empty() || y.len() != x.rows() {
        return Err(Error::Shape {
            what: "batch labels",
            expected: x.rows().max(1),
            actual: y.len(),
        });
    }
    check_labels(model, y, kind)?;
    let mut g = Gradients::zeros_like(model);
    let mut s = Scratch::new(model);
    let n = y.len() as f64;
    let loss = accumulate(model, x, y, 0..y.len(), kind, &mut g, &mut s) / n;
    g.scale(1.0 / n);
    check_finite(loss, &g, 0)?;
    Ok((loss, g))
}

/// Mean cross-entropy of a model over a whole dataset (columns already aligned).
pub fn mean_loss(model: &MlpModel, ds: &Dataset, kind: LossKind) -> Result<f64> {
    Ok(loss_and_grad(model, ds.x(), ds.y(), kind)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub decoupled: bool,
}

impl From<&TrainConfig> for AdamHyper {
    fn from(c: &TrainConfig) -> Self {
        AdamHyper {
            lr: c.lr,
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.eps,
            weight_decay: c.weight_decay,
            decoupled: c.decoupled_weight_decay,
        }
    }
}

/// First and second moment estimates for each parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: [Vec<f64>; 4],
    pub v: [Vec<f64>; 4],
    pub t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(model: &MlpModel, hyper: AdamHyper) -> Self {
        let g = Gradients::zeros_like(model);
        let m = [g.w, g.b, g.beta, g.c];
        AdamState {
            v: m.clone(),
            m,
            t: 0,
            hyper,
        }
    }

    /// Fresh moments shaped like `model`, same hyper-parameters.
    pub fn reset(&mut self, model: &MlpModel) {
        *self = AdamState::new(model, self.hyper);
    }

    fn matches(&self, model: &MlpModel) -> bool {
        let shapes = [
            model.hidden() * model.inputs(),
            model.hidden(),
            model.hidden() * model.outputs(),
            model.outputs(),
        ];
        self.m.iter().zip(shapes).all(|(a, n)| a.len() == n)
    }
}

/// One Adam update with bias correction.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if !state.matches(model) {
        return Err(Error::StaleOptimizer("moment shapes"));
    }
    let gt = grads.tensors();
    if gt
        .iter()
        .zip(&state.m)
        .any(|(g, m)| g.len() != m.len())
    {
        return Err(Error::StaleOptimizer("gradient shapes"));
    }
    state.t += 1;
    let AdamHyper {
        lr,
        beta1,
        beta2,
        eps,
        weight_decay,
        decoupled,
    } = state.hyper;
    let t = state.t as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (k, theta) in model.params_mut().into_iter().enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for (((th, &g), mk), vk) in theta.iter_mut().zip(gt[k]).zip(m.iter_mut()).zip(v.iter_mut()) {
            let g = if decoupled { g } else { g + weight_decay * *th };
            *mk = beta1 * *mk + (1.0 - beta1) * g;
            *vk = beta2 * *vk + (1.0 - beta2) * g * g;
            let mhat = *mk / bc1;
            let vhat = *vk / bc2;
            if decoupled {
                *th -= lr * weight_decay * *th;
            }
            *th -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Batch sizes for `n` rows: full batches then one short remainder.
pub fn batch_sizes(n: usize, batch_size: usize) -> Vec<usize> {
    let mut out = vec![batch_size; n / batch_size];
    if !n.is_multiple_of(batch_size) {
        out.push(n % batch_size);
    }
    out
}

/// Shuffle, then one Adam step per mini-batch. Returns the size-weighted mean batch loss.
/// `dataset` columns must already match the model inputs.
pub fn train_epoch(
    model: &mut MlpModel,
    state: &mut AdamState,
    dataset: &Dataset,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }
    if dataset.n_features() != model.inputs() {
        return Err(Error::FeatureMismatch {
            expected: model.inputs(),
            actual: dataset.n_features(),
        });
    }
    let kind = config.loss_for(dataset)?;
    check_labels(model, dataset.y(), kind)?;
    if !state.matches(model) {
        return Err(Error::StaleOptimizer("moment shapes"));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut g = Gradients::zeros_like(model);
    let mut s = Scratch::new(model);
    let mut total = 0.0;
    for (batch, rows) in order.chunks(config.batch_size).enumerate() {
        g.clear();
        let sum = accumulate(
            model,
            dataset.x(),
            dataset.y(),
            rows.iter().copied(),
            kind,
            &mut g,
            &mut s,
        );
        let len = rows.len() as f64;
        g.scale(1.0 / len);
        check_finite(sum, &g, batch)?;
        adam_step(model, &g, state)?;
        total += sum;
    }
    Ok(total / n as f64)
}

/// Fresh model: `W`, `b` ~ U(-1/sqrt(p), 1/sqrt(p)), `Beta` ~ U(-1/sqrt(h), 1/sqrt(h)), `c` = 0.
pub fn init_model(p: usize, h: usize, outputs: usize, rng: &mut Rng) -> Result<MlpModel> {
    if p == 0 || h == 0 || outputs == 0 {
        return Err(Error::Config(format!(
            "model dimensions must be positive (p={p}, h={h}, C={outputs})"
        )));
    }
    let a = 1.0 / (p as f64).sqrt();
    let w: Vec<f64> = (0..h * p).map(|_| rng.gen_range(-a..a)).collect();
    let b: Vec<f64> = (0..h).map(|_| rng.gen_range(-a..a)).collect();
    let a = 1.0 / (h as f64).sqrt();
    let beta: Vec<f64> = (0..h * outputs).map(|_| rng.gen_range(-a..a)).collect();
    MlpModel::new(
        Matrix::from_vec(h, p, w)?,
        b,
        Matrix::from_vec(h, outputs, beta)?,
        vec![0.0; outputs],
        (0..p).collect(),
    )
}

/// Model sized for `ds` with `h` hidden nodes, drawn from the run seed's init stream.
/// Its `feature_ids` are the dataset's.
pub fn init_for(ds: &Dataset, h: usize, config: &TrainConfig) -> Result<MlpModel> {
    let kind = config.loss_for(ds)?;
    let mut rng = rng::stream(config.seed, Stream::Init);
    let m = init_model(ds.n_features(), h, kind.outputs(ds.n_classes()), &mut rng)?;
    let (w, b, beta, c) = (m.w().clone(), m.b().to_vec(), m.beta().clone(), m.c().to_vec());
    MlpModel::new(w, b, beta, c, ds.feature_ids().to_vec())
}

/// Outcome of [`fit`].
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: MlpModel,
    pub epoch_losses: Vec<f64>,
}

/// Plain training: `config.epochs` epochs from a fresh initialization.
pub fn fit(ds: &Dataset, h: usize, config: &TrainConfig) -> Result<Fitted> {
    config.validate()?;
    let mut model = init_for(ds, h, config)?;
    let mut state = AdamState::new(&model, AdamHyper::from(config));
    let mut shuffle = rng::stream(config.seed, Stream::Shuffle);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let loss = train_epoch(&mut model, &mut state, ds, config, &mut shuffle)
            .map_err(|e| e.at_epoch(epoch))?;
        epoch_losses.push(loss);
    }
    Ok(Fitted {
        model,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_xor, Provenance};

    fn one_node(z: f64) -> MlpModel {
        MlpModel::new(
            Matrix::from_vec(1, 1, vec![1.0]).unwrap(),
            vec![0.0],
            Matrix::from_vec(1, 1, vec![0.0]).unwrap(),
            vec![z],
            vec![0],
        )
        .unwrap()
    }

    #[test]
    fn logistic_at_zero_is_ln2() {
        let m = one_node(0.0);
        let x = Matrix::from_vec(1, 1, vec![0.3]).unwrap();
        let (l, g) = loss_and_grad(&m, &x, &[1], LossKind::BinaryLogistic).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g.c[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_uniform_is_ln_c() {
        for classes in [2usize, 3, 7] {
            let m = MlpModel::new(
                Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.1, 0.2, 0.3]).unwrap(),
                vec![0.1, 0.2],
                Matrix::zeros(2, classes),
                vec![0.0; classes],
                vec![0, 1, 2],
            )
            .unwrap();
            let x = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 4.0]).unwrap();
            let (l, _) = loss_and_grad(&m, &x, &[0, classes - 1], LossKind::SoftmaxCe).unwrap();
            assert_eq!(l, (classes as f64).ln());
        }
    }

    #[test]
    fn loss_rejects_bad_labels_and_empty_batches() {
        let m = one_node(0.0);
        let x = Matrix::from_vec(1, 1, vec![0.3]).unwrap();
        assert!(matches!(
            loss_and_grad(&m, &x, &[2], LossKind::BinaryLogistic),
            Err(Error::Label { .. })
        ));
        let empty = Matrix::zeros(0, 1);
        assert!(loss_and_grad(&m, &empty, &[], LossKind::BinaryLogistic).is_err());
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let m = MlpModel::new(
            Matrix::from_vec(1, 1, vec![1e200]).unwrap(),
            vec![0.0],
            Matrix::from_vec(1, 1, vec![1e200]).unwrap(),
            vec![0.0],
            vec![0],
        )
        .unwrap();
        let x = Matrix::from_vec(1, 1, vec![1e200]).unwrap();
        let err = loss_and_grad(&m, &x, &[0], LossKind::BinaryLogistic).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert!(matches!(err.at_epoch(7), Error::NonFinite { epoch: 7, .. }));
    }

    fn hyper(wd: f64) -> AdamHyper {
        AdamHyper::from(&TrainConfig {
            weight_decay: wd,
            ..TrainConfig::default()
        })
    }

    fn scalar_grads(m: &MlpModel, gc: f64) -> Gradients {
        let mut g = Gradients::zeros_like(m);
        g.c[0] = gc;
        g
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut m = one_node(1.0);
        let mut st = AdamState::new(&m, hyper(0.0));
        let g = scalar_grads(&m, 0.1);
        adam_step(&mut m, &g, &mut st).unwrap();
        // mhat = 0.1, vhat = 0.01: step = lr * 0.1 / (0.1 + 1e-8)
        let expected = 1.0 - 0.001 * 0.1 / (0.1 + 1e-8);
        assert!((m.c()[0] - expected).abs() < 1e-15);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_zero_grad_no_decay_is_identity() {
        let mut m = one_node(1.0);
        let before = m.clone();
        let mut st = AdamState::new(&m, hyper(0.0));
        let g = Gradients::zeros_like(&m);
        for _ in 0..5 {
            adam_step(&mut m, &g, &mut st).unwrap();
        }
        assert_eq!(m, before);
    }

    #[test]
    fn adam_weight_decay_shrinks() {
        let mut m = one_node(1.0);
        let mut st = AdamState::new(&m, hyper(0.0001));
        let g = Gradients::zeros_like(&m);
        adam_step(&mut m, &g, &mut st).unwrap();
        // effective gradient 1e-4 at theta = 1
        let expected = 1.0 - 0.001 * 1e-4 / (1e-4 + 1e-8);
        assert!((m.c()[0] - expected).abs() < 1e-15);
        assert!(m.c()[0] < 1.0);
        // W = 1 decays too
        assert!(m.w().get(0, 0) < 1.0);
    }

    #[test]
    fn adam_bounded_steps() {
        let mut m = one_node(0.0);
        let mut st = AdamState::new(&m, hyper(0.0));
        for (i, g) in [3.0, -2.0, 1e-6, 50.0, -0.1].iter().cycle().take(40).enumerate() {
            let before = m.c()[0];
            let g = scalar_grads(&m, *g);
            adam_step(&mut m, &g, &mut st).unwrap();
            assert!((m.c()[0] - before).abs() <= 2.0 * 0.001, "step {i}");
        }
    }

    #[test]
    fn adam_stale_state_errors() {
        let ds = gen_xor(2, 2, 8, 0).unwrap();
        let cfg = TrainConfig::default();
        let mut m = init_for(&ds, 4, &cfg).unwrap();
        let mut st = AdamState::new(&m, AdamHyper::from(&cfg));
        m.normalize_nodes();
        m.prune_nodes(2).unwrap();
        let g = Gradients::zeros_like(&m);
        assert!(matches!(adam_step(&mut m, &g, &mut st), Err(Error::StaleOptimizer(_))));
        st.reset(&m);
        adam_step(&mut m, &g, &mut st).unwrap();
    }

    #[test]
    fn batch_partition() {
        assert_eq!(batch_sizes(10, 4), vec![4, 4, 2]);
        assert_eq!(batch_sizes(8, 4), vec![4, 4]);
        assert_eq!(batch_sizes(3, 64), vec![3]);
    }

    #[test]
    fn epoch_steps_once_per_batch() {
        let ds = gen_xor(2, 3, 10, 1).unwrap();
        let cfg = TrainConfig {
            batch_size: 4,
            ..TrainConfig::default()
        };
        let mut m = init_for(&ds, 5, &cfg).unwrap();
        let mut st = AdamState::new(&m, AdamHyper::from(&cfg));
        let mut r = rng::stream(0, Stream::Shuffle);
        train_epoch(&mut m, &mut st, &ds, &cfg, &mut r).unwrap();
        assert_eq!(st.t, 3);
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = gen_xor(2, 4, 100, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = fit(&ds, 8, &cfg).unwrap();
        let b = fit(&ds, 8, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        let c = fit(&ds, 8, &cfg.with_seed(12)).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn init_seeded() {
        let mut r1 = rng::stream(5, Stream::Init);
        let mut r2 = rng::stream(5, Stream::Init);
        let mut r3 = rng::stream(6, Stream::Init);
        let a = init_model(4, 3, 2, &mut r1).unwrap();
        assert_eq!(a, init_model(4, 3, 2, &mut r2).unwrap());
        assert_ne!(a, init_model(4, 3, 2, &mut r3).unwrap());
        assert!(a.c().iter().all(|&v| v == 0.0));
        assert!(a.w().as_slice().iter().all(|v| v.abs() <= 0.5));
        assert!(a.beta().as_slice().iter().all(|v| v.abs() <= 1.0 / 3f64.sqrt()));
        assert!(init_model(0, 3, 1, &mut r1).is_err());
    }

    #[test]
    fn separable_data_loss_decreases() {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let t = i as f64 / 80.0;
                vec![t * 2.0 - 1.0, (t * 13.0).sin()]
            })
            .collect();
        let y: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + 0.3 * r[1] > 0.0)).collect();
        let ds = Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            y,
            vec!["a".into(), "b".into()],
            vec!["0".into(), "1".into()],
            Provenance::Csv { path: "mem".into(), sha256: String::new() },
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 8,
            seed: 3,
            ..TrainConfig::default()
        };
        let initial = mean_loss(&init_for(&ds, 8, &cfg).unwrap(), &ds, LossKind::BinaryLogistic).unwrap();
        let fitted = fit(&ds, 8, &cfg).unwrap();
        let after = mean_loss(&fitted.model, &ds, LossKind::BinaryLogistic).unwrap();
        assert!(after < initial, "{after} >= {initial}");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { lr: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
