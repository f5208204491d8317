//! Datasets: synthetic k-D XOR generation, CSV ingestion, splitting and standardization.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Matrix;
use crate::rng::{self, Stream};

pub const DEFAULT_POOL_ROWS: usize = 100_000;
pub const DEFAULT_POOL_COLS: usize = 1024;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Xor {
        k: usize,
        p: usize,
        n: usize,
        seed: u64,
        pool_rows: usize,
        pool_cols: usize,
        test: bool,
    },
    Csv {
        path: PathBuf,
        sha256: String,
    },
    Derived {
        from: Box<Provenance>,
        op: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    feature_ids: Vec<usize>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        x: Matrix,
        y: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Dataset("dataset has no rows".into()));
        }
        if y.len() != x.rows() {
            return Err(Error::Shape {
                what: "labels",
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if feature_names.len() != x.cols() {
            return Err(Error::Shape {
                what: "feature names",
                expected: x.cols(),
                actual: feature_names.len(),
            });
        }
        if class_names.len() < 2 {
            return Err(Error::Dataset("need at least two classes".into()));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Label {
                label,
                classes: class_names.len(),
            });
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite feature value".into()));
        }
        let feature_ids = (0..x.cols()).collect();
        Ok(Dataset {
            x,
            y,
            feature_names,
            class_names,
            feature_ids,
            provenance,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Original column index of each current column.
    pub fn feature_ids(&self) -> &[usize] {
        &self.feature_ids
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Rows in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            feature_ids: self.feature_ids.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        self.subset(&(0..n).collect::<Vec<_>>())
    }

    /// Restrict to the columns whose original ids are listed, in that order.
    pub fn project(&self, original_ids: &[usize]) -> Result<Dataset> {
        if original_ids == self.feature_ids.as_slice() {
            return Ok(self.clone());
        }
        let pos: HashMap<usize, usize> = self
            .feature_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let cols = original_ids
            .iter()
            .map(|id| pos.get(id).copied().ok_or(Error::UnknownFeature(*id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            x: self.x.select_cols(&cols),
            y: self.y.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            class_names: self.class_names.clone(),
            feature_ids: original_ids.to_vec(),
            provenance: self.provenance.clone(),
        })
    }

    /// Same rows and labels with a new feature matrix of identical shape.
    pub fn with_features(&self, x: Matrix) -> Result<Dataset> {
        if x.rows() != self.x.rows() || x.cols() != self.x.cols() {
            return Err(Error::Shape {
                what: "replacement features",
                expected: self.x.rows() * self.x.cols(),
                actual: x.rows() * x.cols(),
            });
        }
        Ok(Dataset { x, ..self.clone() })
    }

    /// Write features and class-name labels; the label column is named `label`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            record.clear();
            record.extend(self.x.row(i).iter().map(|v| v.to_string()));
            record.push(self.class_names[self.y[i]].clone());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Write the provenance record as JSON next to a data file.
    pub fn write_provenance(&self, data_path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = provenance_path(data_path.as_ref());
        fs::write(&path, serde_json::to_string_pretty(&self.provenance)?)?;
        Ok(path)
    }
}

pub fn provenance_path(data_path: &Path) -> PathBuf {
    let mut s = data_path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

/// k-D XOR label: 1 iff the product of the first `k` coordinates is strictly positive.
/// Computed from the parity of negative signs; any zero coordinate gives 0.
pub fn xor_label(x: &[f64], k: usize) -> usize {
    let mut negatives = 0usize;
    for &v in &x[..k] {
        if v == 0.0 {
            return 0;
        }
        if v < 0.0 {
            negatives += 1;
        }
    }
    usize::from(negatives.is_multiple_of(2))
}

/// A fixed pool of Uniform[-1,1] samples from which XOR datasets are cut.
///
/// Entry `(i, j)` of the pool is drawn from a fixed position of the ChaCha8 keystream
/// (row-major with `cols` entries per row), so any `n × p` corner of the pool can be
/// produced without generating the rest, and smaller corners are prefixes of larger ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorPool {
    pub k: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
}

impl XorPool {
    pub fn new(k: usize, seed: u64) -> Self {
        XorPool {
            k,
            seed,
            rows: DEFAULT_POOL_ROWS,
            cols: DEFAULT_POOL_COLS,
        }
    }

    /// Training rows: the first `n` rows and `p` columns of the pool.
    pub fn train(&self, n: usize, p: usize) -> Result<Dataset> {
        self.cut(n, p, false)
    }

    /// Independent test rows drawn from a separate keystream of the same seed.
    pub fn test(&self, n: usize, p: usize) -> Result<Dataset> {
        self.cut(n, p, true)
    }

    fn cut(&self, n: usize, p: usize, test: bool) -> Result<Dataset> {
        let k = self.k;
        if k == 0 || k > p {
            return Err(Error::Config(format!("XOR needs 1 <= k <= p (k={k}, p={p})")));
        }
        if n == 0 || n > self.rows || p > self.cols {
            return Err(Error::Config(format!(
                "requested {n}x{p} exceeds the {}x{} pool",
                self.rows, self.cols
            )));
        }
        let mut rng = rng::stream(self.seed, if test { Stream::XorTest } else { Stream::XorTrain });
        let mut data = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            // two 32-bit words per f64 draw
            rng.set_word_pos(2 * (i as u128) * (self.cols as u128));
            let start = data.len();
            for _ in 0..p {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                data.push(2.0 * u - 1.0);
            }
            y.push(xor_label(&data[start..], k));
        }
        Dataset::new(
            Matrix::from_vec(n, p, data)?,
            y,
            (0..p).map(|j| format!("x{j}")).collect(),
            vec!["0".into(), "1".into()],
            Provenance::Xor {
                k,
                p,
                n,
                seed: self.seed,
                pool_rows: self.rows,
                pool_cols: self.cols,
                test,
            },
        )
    }
}

/// `n × p` k-D XOR training data from the default pool of `seed`.
pub fn gen_xor(k: usize, p: usize, n: usize, seed: u64) -> Result<Dataset> {
    XorPool::new(k, seed).train(n, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    OneHot,
    Ordinal,
}

/// How to read a CSV file. Columns not named here are parsed as numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: String,
    #[serde(default)]
    pub categorical: BTreeMap<String, Encoding>,
    #[serde(default)]
    pub ignore: Vec<String>,
    /// Fixed class order. When absent, classes are numbered by first appearance and
    /// every label is accepted; when present, any other label is an error.
    #[serde(default)]
    pub classes: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn with_label(label: impl Into<String>) -> Self {
        CsvSchema {
            label: label.into(),
            ..Default::default()
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "?" | "NA" | "na" | "NaN" | "nan")
}

/// Load a headered CSV. Row numbers in errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let label_col = header
        .iter()
        .position(|h| *h == schema.label)
        .ok_or_else(|| Error::MissingColumn(schema.label.clone()))?;
    for name in schema.categorical.keys().chain(&schema.ignore) {
        if !header.contains(name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let used: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_col && !schema.ignore.contains(&header[c]))
        .collect();

    let missing: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            is_missing(&r[label_col]) || used.iter().any(|&c| is_missing(&r[c]))
        })
        .map(|(i, _)| i + 1)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingValues {
            path: path.to_path_buf(),
            rows: missing,
        });
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{}: no data rows", path.display())));
    }

    // categorical levels in first-appearance order
    let mut levels: HashMap<usize, Vec<String>> = HashMap::new();
    for &c in &used {
        if schema.categorical.contains_key(&header[c]) {
            let mut seen: Vec<String> = Vec::new();
            for r in &rows {
                let v = r[c].trim();
                if !seen.iter().any(|s| s == v) {
                    seen.push(v.to_string());
                }
            }
            levels.insert(c, seen);
        }
    }

    let mut feature_names = Vec::new();
    for &c in &used {
        match schema.categorical.get(&header[c]) {
            Some(Encoding::OneHot) => {
                feature_names.extend(levels[&c].iter().map(|l| format!("{}={l}", header[c])))
            }
            _ => feature_names.push(header[c].clone()),
        }
    }

    let mut labels = LabelEncoder::new(schema.classes.clone());
    let mut data = Vec::with_capacity(rows.len() * feature_names.len());
    let mut y = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        for &c in &used {
            let cell = r[c].trim();
            match schema.categorical.get(&header[c]) {
                Some(Encoding::OneHot) => {
                    data.extend(levels[&c].iter().map(|l| f64::from(u8::from(l == cell))))
                }
                Some(Encoding::Ordinal) => {
                    let code = levels[&c].iter().position(|l| l == cell).unwrap_or(0);
                    data.push(code as f64);
                }
                None => {
                    let v: f64 = cell
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            path: path.to_path_buf(),
                            row: i + 1,
                            column: header[c].clone(),
                            value: cell.to_string(),
                        })?;
                    data.push(v);
                }
            }
        }
        y.push(labels.encode(r[label_col].trim())?);
    }
    let n = rows.len();
    let p = feature_names.len();
    Dataset::new(
        Matrix::from_vec(n, p, data)?,
        y,
        feature_names,
        labels.into_classes(),
        Provenance::Csv {
            path: path.to_path_buf(),
            sha256,
        },
    )
}

/// Maps label strings to class indices.
#[derive(Debug, Clone)]
pub struct LabelEncoder {
    classes: Vec<String>,
    frozen: bool,
}

impl LabelEncoder {
    pub fn new(fixed: Option<Vec<String>>) -> Self {
        match fixed {
            Some(classes) => LabelEncoder {
                classes,
                frozen: true,
            },
            None => LabelEncoder {
                classes: Vec::new(),
                frozen: false,
            },
        }
    }

    pub fn encode(&mut self, label: &str) -> Result<usize> {
        if let Some(i) = self.classes.iter().position(|c| c == label) {
            return Ok(i);
        }
        if self.frozen {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        self.classes.push(label.to_string());
        Ok(self.classes.len() - 1)
    }

    pub fn into_classes(self) -> Vec<String> {
        self.classes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

/// Seeded train/test split. Train rows appear in permutation order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::Dataset("need at least two rows to split".into()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(spec.seed, Stream::Split));

    let (train, test): (Vec<usize>, Vec<usize>) = if spec.stratified {
        let counts = ds.class_counts();
        let mut quota = Vec::with_capacity(counts.len());
        for (class, &count) in counts.iter().enumerate() {
            if count == 0 {
                quota.push(0);
                continue;
            }
            if count < 2 {
                return Err(Error::Dataset(format!(
                    "class '{}' has a single member and cannot be stratified",
                    ds.class_names[class]
                )));
            }
            let q = ((count as f64) * spec.train_fraction).round() as usize;
            quota.push(q.clamp(1, count - 1));
        }
        perm.iter().partition(|&&i| {
            let c = ds.y[i];
            if quota[c] > 0 {
                quota[c] -= 1;
                true
            } else {
                false
            }
        })
    } else {
        let n_train = ((n as f64) * spec.train_fraction).round() as usize;
        let n_train = n_train.clamp(1, n - 1);
        (perm[..n_train].to_vec(), perm[n_train..].to_vec())
    };
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Split `0..n` into `folds` validation folds after a seeded shuffle. Every index lands in
/// exactly one fold; fold sizes differ by at most one.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::Config(format!("cannot make {folds} folds of {n} rows")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, Stream::Folds));
    let mut out = vec![Vec::new(); folds];
    for (i, idx) in perm.into_iter().enumerate() {
        out[i % folds].push(idx);
    }
    Ok(out)
}

/// Per-feature affine map fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant feature.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Standardizer {
        let n = x.rows() as f64;
        let p = x.cols();
        let mut mean = vec![0.0; p];
        for i in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for i in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        out
    }

    pub fn inverse(&self, z: &Matrix) -> Matrix {
        let mut out = z.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        out
    }
}

/// Fit on `train`, apply to both sets.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, Standardizer)> {
    if train.len() < 2 {
        return Err(Error::Dataset("standardization needs at least two training rows".into()));
    }
    let t = Standardizer::fit(train.x());
    let tr = train.with_features(t.apply(train.x()))?;
    let te = test.with_features(t.apply(test.x()))?;
    Ok((tr, te, t))
}
