//! C ABI for `nsa-core`.
//!
//! Every function returns an [`NsaStatus`]; on failure the message is available from
//! [`nsa_last_error`] on the same thread. Objects are opaque handles that must be released
//! with their `_free` function. Strings returned by the library are released with
//! [`nsa_string_free`]. No function takes ownership of caller memory.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nsa_core::anneal::{self, AnnealConfig, AnnealSchedule};
use nsa_core::data::{load_csv, CsvSchema, Dataset};
use nsa_core::model::{Matrix, MlpModel};
use nsa_core::{metrics, train, Error, TrainConfig};

/// Result code of every `nsa_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Config = 4,
    Data = 5,
    Io = 6,
    NonFinite = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque trained network.
pub struct NsaModel(MlpModel);

/// Opaque labelled dataset.
pub struct NsaDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> NsaStatus {
    match err {
        Error::FeatureMismatch { .. } | Error::Shape { .. } | Error::KeepCount { .. } | Error::StaleOptimizer(_) => {
            NsaStatus::Shape
        }
        Error::UnknownFeature(_) | Error::DuplicateFeature(_) | Error::InvalidModel(_) => NsaStatus::InvalidArgument,
        Error::Config(_) | Error::Json(_) => NsaStatus::Config,
        Error::NonFinite { .. } => NsaStatus::NonFinite,
        Error::AtEpoch { source, .. } => status_of(source),
        Error::Io(_) => NsaStatus::Io,
        Error::Label { .. }
        | Error::SingleClass
        | Error::MissingValues { .. }
        | Error::Parse { .. }
        | Error::UnknownLabel(_)
        | Error::MissingColumn(_)
        | Error::Dataset(_)
        | Error::Csv(_) => NsaStatus::Data,
    }
}

struct Fail(NsaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> NsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NsaStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            NsaStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NsaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn reference<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn reference_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NsaStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(src: &[T], out: *mut T, len: usize, what: &str) -> FfiResult {
    if len < src.len() {
        return Err(Fail(
            NsaStatus::BufferTooSmall,
            format!("{what} needs {} elements, buffer holds {len}", src.len()),
        ));
    }
    if !src.is_empty() {
        if out.is_null() {
            return Err(null(what));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> FfiResult {
    reference_mut(out, what).map(|slot| *slot = v)
}

unsafe fn parse_json<T: serde::de::DeserializeOwned + Default>(p: *const c_char) -> FfiResult<T> {
    if p.is_null() {
        return Ok(T::default());
    }
    let s = string(p, "config")?;
    serde_json::from_str(s).map_err(|e| Fail(NsaStatus::Config, format!("invalid config: {e}")))
}

/// Message of the last failed call on this thread, or an empty string. The pointer stays
/// valid until the next `nsa_*` call on the same thread.
#[no_mangle]
pub extern "C" fn nsa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Release a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn nsa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------------------
// models

/// Parse a model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_from_json(json: *const c_char, out: *mut *mut NsaModel) -> NsaStatus {
    guard(|| {
        let m = MlpModel::from_json(string(json, "json")?)?;
        put(out, Box::into_raw(Box::new(NsaModel(m))), "out")
    })
}

/// Serialize a model to JSON. Free the result with [`nsa_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_to_json(model: *const NsaModel, out: *mut *mut c_char) -> NsaStatus {
    guard(|| {
        let json = reference(model, "model")?.0.to_json()?;
        let s = CString::new(json).map_err(|_| Fail(NsaStatus::Panic, "NUL in JSON".into()))?;
        put(out, s.into_raw(), "out")
    })
}

/// # Safety
/// `model` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_free(model: *mut NsaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hidden width, input count and output count.
///
/// # Safety
/// `model` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_dims(
    model: *const NsaModel,
    hidden: *mut usize,
    inputs: *mut usize,
    outputs: *mut usize,
) -> NsaStatus {
    guard(|| {
        let m = &reference(model, "model")?.0;
        put(hidden, m.hidden(), "hidden")?;
        put(inputs, m.inputs(), "inputs")?;
        put(outputs, m.outputs(), "outputs")
    })
}

/// Original column indices of the model inputs (`inputs` entries).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_feature_ids(model: *const NsaModel, out: *mut usize, len: usize) -> NsaStatus {
    guard(|| write_out(reference(model, "model")?.0.feature_ids(), out, len, "feature ids"))
}

/// Logits for a row-major `rows × cols` input; `out` receives `rows × outputs` values.
///
/// # Safety
/// `x` must hold `rows * cols` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_forward(
    model: *const NsaModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
) -> NsaStatus {
    guard(|| {
        let m = &reference(model, "model")?.0;
        let x = Matrix::from_vec(rows, cols, slice(x, rows * cols, "x")?.to_vec())?;
        let z = m.forward(&x)?;
        write_out(z.as_slice(), out, out_len, "logits")
    })
}

/// Rescale every node to a unit input weight vector. `dead` receives the number of nodes
/// whose weights were all zero (may be null).
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_normalize(model: *mut NsaModel, dead: *mut usize) -> NsaStatus {
    guard(|| {
        let n = reference_mut(model, "model")?.0.normalize_nodes().len();
        if !dead.is_null() {
            *dead = n;
        }
        Ok(())
    })
}

/// Node importance scores (`hidden` entries).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_node_importance(model: *const NsaModel, out: *mut f64, len: usize) -> NsaStatus {
    guard(|| write_out(&reference(model, "model")?.0.node_importance(), out, len, "importance"))
}

/// Squared group weight of each input (`inputs` entries).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_feature_relevance(model: *const NsaModel, out: *mut f64, len: usize) -> NsaStatus {
    guard(|| write_out(&reference(model, "model")?.0.feature_relevance().r2, out, len, "relevance"))
}

/// Keep the `keep` most important hidden nodes.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_prune_nodes(model: *mut NsaModel, keep: usize) -> NsaStatus {
    guard(|| Ok(reference_mut(model, "model")?.0.prune_nodes(keep)?))
}

/// Keep only the listed input columns (indices into the current inputs).
///
/// # Safety
/// `model` must be a live handle; `ids` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn nsa_model_prune_features(model: *mut NsaModel, ids: *const usize, n: usize) -> NsaStatus {
    guard(|| {
        let ids = slice(ids, n, "ids")?;
        Ok(reference_mut(model, "model")?.0.prune_features(ids)?)
    })
}

// ---------------------------------------------------------------------------------------
// datasets

/// `n × p` k-D XOR training data from the pool of `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_gen_xor(k: usize, p: usize, n: usize, seed: u64, out: *mut *mut NsaDataset) -> NsaStatus {
    guard(|| {
        let ds = nsa_core::gen_xor(k, p, n, seed)?;
        put(out, Box::into_raw(Box::new(NsaDataset(ds))), "out")
    })
}

/// Load a numeric CSV file with a header row; `label` names the class column.
///
/// # Safety
/// `path` and `label` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_from_csv(path: *const c_char, label: *const c_char, out: *mut *mut NsaDataset) -> NsaStatus {
    guard(|| {
        let path = Path::new(string(path, "path")?);
        let schema = CsvSchema::with_label(string(label, "label")?);
        let ds = load_csv(path, &schema)?;
        put(out, Box::into_raw(Box::new(NsaDataset(ds))), "out")
    })
}

/// # Safety
/// `ds` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_free(ds: *mut NsaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Row, column and class counts.
///
/// # Safety
/// `ds` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_dims(ds: *const NsaDataset, rows: *mut usize, cols: *mut usize, classes: *mut usize) -> NsaStatus {
    guard(|| {
        let d = &reference(ds, "dataset")?.0;
        put(rows, d.len(), "rows")?;
        put(cols, d.n_features(), "cols")?;
        put(classes, d.n_classes(), "classes")
    })
}

// ---------------------------------------------------------------------------------------
// training

/// Train a plain network of width `hidden`. `config_json` holds training settings as JSON
/// (null for defaults).
///
/// # Safety
/// `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_train(ds: *const NsaDataset, hidden: usize, config_json: *const c_char, out: *mut *mut NsaModel) -> NsaStatus {
    guard(|| {
        let d = &reference(ds, "dataset")?.0;
        let cfg: TrainConfig = parse_json(config_json)?;
        let m = train::fit(d, hidden, &cfg)?.model;
        put(out, Box::into_raw(Box::new(NsaModel(m))), "out")
    })
}

unsafe fn anneal_into(ds: *const NsaDataset, config_json: *const c_char, out: *mut *mut NsaModel, features: bool) -> NsaStatus {
    guard(|| {
        let d = &reference(ds, "dataset")?.0;
        let cfg: AnnealConfig = parse_json(config_json)?;
        let outcome = if features {
            anneal::run_fsa_nsa(d, &cfg)?
        } else {
            anneal::run_nsa(d, &cfg)?
        };
        put(out, Box::into_raw(Box::new(NsaModel(outcome.model))), "out")
    })
}

/// Node selection with annealing. `config_json` holds annealing settings as JSON (null
/// for defaults).
///
/// # Safety
/// `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_run_nsa(ds: *const NsaDataset, config_json: *const c_char, out: *mut *mut NsaModel) -> NsaStatus {
    anneal_into(ds, config_json, out, false)
}

/// Feature and node selection with annealing; `target_features` in the config sets the
/// number of features kept.
///
/// # Safety
/// `ds` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_run_fsa_nsa(ds: *const NsaDataset, config_json: *const c_char, out: *mut *mut NsaModel) -> NsaStatus {
    anneal_into(ds, config_json, out, true)
}

// ---------------------------------------------------------------------------------------
// utilities

/// Annealing schedule count at `epoch`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_schedule_value(
    start: usize,
    end: usize,
    n_iter: usize,
    mu: f64,
    onset_fraction: f64,
    plateau_fraction: f64,
    epoch: usize,
    out: *mut usize,
) -> NsaStatus {
    guard(|| {
        let s = AnnealSchedule {
            start_count: start,
            end_count: end,
            n_iter,
            mu,
            onset_fraction,
            plateau_fraction,
        };
        s.validate()?;
        put(out, s.value(epoch), "out")
    })
}

/// ROC AUC of `scores` against binary `labels` (non-zero is positive).
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nsa_auc(scores: *const f64, labels: *const usize, n: usize, out: *mut f64) -> NsaStatus {
    guard(|| {
        let a = metrics::auc(slice(scores, n, "scores")?, slice(labels, n, "labels")?)?;
        put(out, a, "out")
    })
}
