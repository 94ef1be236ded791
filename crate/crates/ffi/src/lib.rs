//! C ABI over the `dataoob` library.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` /
//! computing functions and released with the matching `*_free`. Every
//! fallible function returns a [`DataoobStatus`]; on failure the message is
//! kept per thread and can be read with [`dataoob_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dataoob::baselines::knn_shapley;
use dataoob::data::TabularDataset;
use dataoob::forest::TreeConfig;
use dataoob::oob::{
    data_oob_values, fit_and_score, infinitesimal_jackknife, oob_estimate, oob_scores, ScoreFunction, ValueVector,
};
use dataoob::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataoobStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientRows = 3,
    SingleClass = 4,
    NonFinite = 5,
    UndefinedValue = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

/// Training or validation data.
pub struct DataoobDataset {
    inner: TabularDataset,
}

/// Per-point values from one valuation run.
pub struct DataoobValues {
    values: ValueVector,
    influence: Option<Vec<f64>>,
    estimate: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DataoobStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => DataoobStatus::InvalidArgument,
        Error::InsufficientRows { .. } => DataoobStatus::InsufficientRows,
        Error::SingleClass(_) => DataoobStatus::SingleClass,
        Error::NonFinite { .. } => DataoobStatus::NonFinite,
        Error::UndefinedValue(_) => DataoobStatus::UndefinedValue,
        _ => DataoobStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DataoobStatus, String)>) -> DataoobStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DataoobStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DataoobStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DataoobStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DataoobStatus, String) {
    (DataoobStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 if there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dataoob_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dataoob_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from a row-major `n_rows x n_features` matrix and
/// labels in `0..class_count`.
///
/// # Safety
/// `features` must point to `n_rows * n_features` doubles, `labels` to
/// `n_rows` values, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn dataoob_dataset_new(
    features: *const f64,
    labels: *const u32,
    n_rows: usize,
    n_features: usize,
    class_count: usize,
    out: *mut *mut DataoobDataset,
) -> DataoobStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if n_rows > 0 && (features.is_null() || labels.is_null()) {
            return Err(null("features or labels"));
        }
        let cells = n_rows
            .checked_mul(n_features)
            .ok_or((DataoobStatus::InvalidArgument, "matrix size overflows".to_string()))?;
        let (x, y) = if n_rows == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(features, cells).to_vec(),
                std::slice::from_raw_parts(labels, n_rows).iter().map(|&l| l as usize).collect(),
            )
        };
        let inner = TabularDataset::new(x, n_features, y, class_count).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DataoobDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a pointer returned by [`dataoob_dataset_new`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn dataoob_dataset_free(ds: *mut DataoobDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn dataoob_dataset_rows(ds: *const DataoobDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_rows())
}

/// Fits `b` bootstrap trees on `train` and computes out-of-bag values with
/// the correctness score. Influence values and the out-of-bag estimate are
/// also computed when every point is out-of-bag at least once.
///
/// # Safety
/// `train` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dataoob_data_oob(
    train: *const DataoobDataset,
    b: usize,
    seed: u64,
    out: *mut *mut DataoobValues,
) -> DataoobStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let train = train.as_ref().ok_or_else(|| null("train"))?;
        let run = fit_and_score(&train.inner, b, &TreeConfig::with_seed(seed), ScoreFunction::Correctness)
            .map_err(lib_err)?;
        let values = data_oob_values(&run.scores);
        let (influence, estimate) = if values.undefined_count() == 0 && values.len() >= 2 {
            let scores = oob_scores(&run.scores);
            let inf = infinitesimal_jackknife(&run.weights, &values, &scores).map_err(lib_err)?;
            (Some(inf.psi_ij), Some(oob_estimate(&values).map_err(lib_err)?))
        } else {
            (None, None)
        };
        *out = Box::into_raw(Box::new(DataoobValues {
            values,
            influence,
            estimate,
        }));
        Ok(())
    })
}

/// Exact KNN Shapley values of `train` against `val` with `k` neighbors.
///
/// # Safety
/// `train` and `val` must be live dataset handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dataoob_knn_shapley(
    train: *const DataoobDataset,
    val: *const DataoobDataset,
    k: usize,
    out: *mut *mut DataoobValues,
) -> DataoobStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let train = train.as_ref().ok_or_else(|| null("train"))?;
        let val = val.as_ref().ok_or_else(|| null("val"))?;
        let values = knn_shapley(&train.inner, &val.inner, k).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(DataoobValues {
            values,
            influence: None,
            estimate: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `v` must be null or a live values handle.
#[no_mangle]
pub unsafe extern "C" fn dataoob_values_free(v: *mut DataoobValues) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `v` must be null or a live values handle.
#[no_mangle]
pub unsafe extern "C" fn dataoob_values_len(v: *const DataoobValues) -> usize {
    v.as_ref().map_or(0, |v| v.values.len())
}

/// Copies the values into `psi` (`len` doubles; undefined entries are NaN).
/// `undefined` may be null; otherwise it receives `len` flags (1 = never
/// out-of-bag).
///
/// # Safety
/// `psi` must point to `len` writable doubles and `undefined`, if not null,
/// to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dataoob_values_copy(
    v: *const DataoobValues,
    psi: *mut f64,
    undefined: *mut u8,
    len: usize,
) -> DataoobStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("values"))?;
        if psi.is_null() {
            return Err(null("psi"));
        }
        let n = v.values.len();
        if len < n {
            return Err((DataoobStatus::BufferTooSmall, format!("buffer holds {len}, need {n}")));
        }
        ptr::copy_nonoverlapping(v.values.psi.as_ptr(), psi, n);
        if !undefined.is_null() {
            for (i, &u) in v.values.undefined.iter().enumerate() {
                *undefined.add(i) = u8::from(u);
            }
        }
        Ok(())
    })
}

/// Copies the infinitesimal-jackknife influence values into `out`.
/// Fails with `UndefinedValue` when they were not computed (non-OOB
/// valuators, or some point never out-of-bag).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dataoob_values_influence(
    v: *const DataoobValues,
    out: *mut f64,
    len: usize,
) -> DataoobStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("values"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inf = v
            .influence
            .as_ref()
            .ok_or((DataoobStatus::UndefinedValue, "influence values not available".to_string()))?;
        if len < inf.len() {
            return Err((DataoobStatus::BufferTooSmall, format!("buffer holds {len}, need {}", inf.len())));
        }
        ptr::copy_nonoverlapping(inf.as_ptr(), out, inf.len());
        Ok(())
    })
}

/// Writes the out-of-bag estimate (mean of the values) to `out`.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn dataoob_values_oob_estimate(v: *const DataoobValues, out: *mut f64) -> DataoobStatus {
    guard(|| {
        let v = v.as_ref().ok_or_else(|| null("values"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = v
            .estimate
            .ok_or((DataoobStatus::UndefinedValue, "out-of-bag estimate not available".to_string()))?;
        Ok(())
    })
}
