//! One-hidden-layer ReLU network and the structural operations used by node and
//! feature pruning.
//!
//! The network computes `logits = Betaᵀ · relu(W·x + b) + c` with `W` of shape
//! `h × p`, `Beta` of shape `h × C`. For binary problems `C = 1` and the single
//! logit is the log-odds of class 1.
//!
//! Because ReLU is positively homogeneous, scaling `(w_j, b_j)` by `s > 0` and
//! `beta_j` by `1/s` leaves the network function unchanged. [`MlpModel::normalize_nodes`]
//! removes that freedom by giving every live node a unit-norm weight vector, after which
//! output-weight magnitudes are comparable across nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes whose input weight norm is at or below this are treated as dead.
pub const DEAD_NODE_EPS: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                what: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape {
                    what: "matrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix made of the given columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }
}

/// Group weights of the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRelevance {
    /// Squared L2 norm of each input column of `W`.
    pub r2: Vec<f64>,
    /// Column indices sorted by descending `r2`, ties by lower index.
    pub ordering: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    w: Matrix,
    b: Vec<f64>,
    beta: Matrix,
    c: Vec<f64>,
    feature_ids: Vec<usize>,
}

impl MlpModel {
    /// Build a model from raw parameters. `feature_ids` maps each input column to its
    /// original column index in the source data.
    pub fn new(
        w: Matrix,
        b: Vec<f64>,
        beta: Matrix,
        c: Vec<f64>,
        feature_ids: Vec<usize>,
    ) -> Result<Self> {
        let m = MlpModel {
            w,
            b,
            beta,
            c,
            feature_ids,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let h = self.w.rows();
        let p = self.w.cols();
        let classes = self.beta.cols();
        if h == 0 || p == 0 || classes == 0 {
            return Err(Error::InvalidModel(format!(
                "dimensions must be positive (h={h}, p={p}, C={classes})"
            )));
        }
        if self.b.len() != h {
            return Err(Error::Shape {
                what: "hidden bias",
                expected: h,
                actual: self.b.len(),
            });
        }
        if self.beta.rows() != h {
            return Err(Error::Shape {
                what: "output weight rows",
                expected: h,
                actual: self.beta.rows(),
            });
        }
        if self.c.len() != classes {
            return Err(Error::Shape {
                what: "output bias",
                expected: classes,
                actual: self.c.len(),
            });
        }
        if self.feature_ids.len() != p {
            return Err(Error::Shape {
                what: "feature ids",
                expected: p,
                actual: self.feature_ids.len(),
            });
        }
        let mut seen = self.feature_ids.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateFeature(w[0]));
        }
        let finite = self
            .w
            .as_slice()
            .iter()
            .chain(&self.b)
            .chain(self.beta.as_slice())
            .chain(&self.c)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.w.rows()
    }

    pub fn inputs(&self) -> usize {
        self.w.cols()
    }

    pub fn outputs(&self) -> usize {
        self.beta.cols()
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn beta(&self) -> &Matrix {
        &self.beta
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn feature_ids(&self) -> &[usize] {
        &self.feature_ids
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w.as_mut_slice(),
            &mut self.b,
            self.beta.as_mut_slice(),
            &mut self.c,
        ]
    }

    /// Connection weights: entries of `W` plus entries of `Beta`. Biases are not counted.
    pub fn weight_count(&self) -> usize {
        self.hidden() * (self.inputs() + self.outputs())
    }

    pub fn bias_count(&self) -> usize {
        self.hidden() + self.outputs()
    }

    /// Logits of a single input row.
    pub fn forward_row(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs());
        for (j, a) in hidden.iter_mut().enumerate() {
            let pre = dot(self.w.row(j), x) + self.b[j];
            *a = pre.max(0.0);
        }
        out.copy_from_slice(&self.c);
        for (j, &a) in hidden.iter().enumerate() {
            if a > 0.0 {
                for (o, &bw) in out.iter_mut().zip(self.beta.row(j)) {
                    *o += a * bw;
                }
            }
        }
    }

    /// Logits for every row of `x` (shape `n × C`).
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.inputs() {
            return Err(Error::FeatureMismatch {
                expected: self.inputs(),
                actual: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.outputs());
        let mut hidden = vec![0.0; self.hidden()];
        for i in 0..x.rows() {
            self.forward_row(x.row(i), &mut hidden, out.row_mut(i));
        }
        Ok(out)
    }

    /// Rescale every live node to a unit-norm weight vector without changing the
    /// network function. Returns the indices of dead nodes (left untouched).
    pub fn normalize_nodes(&mut self) -> Vec<usize> {
        let mut dead = Vec::new();
        for j in 0..self.hidden() {
            let norm = l2(self.w.row(j));
            if norm <= DEAD_NODE_EPS {
                dead.push(j);
                continue;
            }
            self.w.row_mut(j).iter_mut().for_each(|v| *v /= norm);
            self.b[j] /= norm;
            self.beta.row_mut(j).iter_mut().for_each(|v| *v *= norm);
        }
        dead
    }

    pub fn normalized(&self) -> MlpModel {
        let mut m = self.clone();
        m.normalize_nodes();
        m
    }

    /// Magnitude of each node's output weights: `|beta_j|` for one output, the L2 norm
    /// of the output row otherwise. Dead nodes score 0. Meaningful after normalization.
    pub fn node_importance(&self) -> Vec<f64> {
        (0..self.hidden())
            .map(|j| {
                if l2(self.w.row(j)) <= DEAD_NODE_EPS {
                    0.0
                } else {
                    l2(self.beta.row(j))
                }
            })
            .collect()
    }

    /// Keep the `keep` most important nodes. Survivors stay in their original order.
    pub fn prune_nodes(&mut self, keep: usize) -> Result<()> {
        let h = self.hidden();
        if keep == 0 || keep > h {
            return Err(Error::KeepCount {
                what: "hidden nodes",
                keep,
                available: h,
            });
        }
        if keep == h {
            return Ok(());
        }
        let mut survivors = top_k(&self.node_importance(), keep);
        survivors.sort_unstable();
        self.w = self.w.select_rows(&survivors);
        self.beta = self.beta.select_rows(&survivors);
        self.b = survivors.iter().map(|&j| self.b[j]).collect();
        Ok(())
    }

    pub fn feature_relevance(&self) -> FeatureRelevance {
        let mut r2 = vec![0.0; self.inputs()];
        for j in 0..self.hidden() {
            for (acc, &v) in r2.iter_mut().zip(self.w.row(j)) {
                *acc += v * v;
            }
        }
        let ordering = top_k(&r2, r2.len());
        FeatureRelevance { r2, ordering }
    }

    /// Keep only the given input columns (indices into the current columns). The kept
    /// columns retain their current relative order.
    pub fn prune_features(&mut self, keep_ids: &[usize]) -> Result<()> {
        let p = self.inputs();
        if keep_ids.is_empty() {
            return Err(Error::KeepCount {
                what: "features",
                keep: 0,
                available: p,
            });
        }
        let mut cols = keep_ids.to_vec();
        cols.sort_unstable();
        for pair in cols.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateFeature(pair[0]));
            }
        }
        if let Some(&bad) = cols.iter().find(|&&c| c >= p) {
            return Err(Error::UnknownFeature(bad));
        }
        if cols.len() == p {
            return Ok(());
        }
        self.w = self.w.select_cols(&cols);
        self.feature_ids = cols.iter().map(|&c| self.feature_ids[c]).collect();
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        doc.try_into()
    }
}

/// Indices of the `k` largest values, largest first; equal values keep the lower index first.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// On-disk layout. Floats go through serde_json's shortest round-trip formatting and
/// exact parsing, so a save/load cycle reproduces every bit.
#[derive(Serialize, Deserialize)]
struct ModelDoc {
    hidden: usize,
    inputs: usize,
    outputs: usize,
    feature_ids: Vec<usize>,
    w: Vec<f64>,
    b: Vec<f64>,
    beta: Vec<f64>,
    c: Vec<f64>,
}

impl From<&MlpModel> for ModelDoc {
    fn from(m: &MlpModel) -> Self {
        ModelDoc {
            hidden: m.hidden(),
            inputs: m.inputs(),
            outputs: m.outputs(),
            feature_ids: m.feature_ids.clone(),
            w: m.w.as_slice().to_vec(),
            b: m.b.clone(),
            beta: m.beta.as_slice().to_vec(),
            c: m.c.clone(),
        }
    }
}

impl TryFrom<ModelDoc> for MlpModel {
    type Error = Error;

    fn try_from(d: ModelDoc) -> Result<Self> {
        MlpModel::new(
            Matrix::from_vec(d.hidden, d.inputs, d.w)?,
            d.b,
            Matrix::from_vec(d.hidden, d.outputs, d.beta)?,
            d.c,
            d.feature_ids,
        )
    }
}
