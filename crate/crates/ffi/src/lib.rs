//! C ABI over the `selrisk` crate.
//!
//! Every function returns a [`SelriskStatus`]; results are written through
//! out-pointers only on success. On failure a message is kept per thread
//! and can be read with [`selrisk_last_error_message`]. Array arguments are
//! `(pointer, length)` pairs; a null pointer is accepted only with length 0.
//! Booleans are C `bool`. Handles returned by `*_calibrate` / `*_from_json`
//! are owned by the caller and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use selrisk::entropy::{cluster_by_entailment, semantic_entropy, sequence_nll, ClusterAssignment};
use selrisk::linalg::{sigmoid, Matrix};
use selrisk::metrics::{self, AlphaGrid, ZeroCoverageFallback};
use selrisk::policy::{calibrate_threshold, SelectivePolicy};
use selrisk::probes::LinearProbe;
use selrisk::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelriskStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SingleClass = 3,
    DimensionMismatch = 4,
    Parse = 5,
    Internal = 6,
}

/// Zero-coverage rule for TCE.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelriskFallback {
    PerAlpha = 0,
    WholeRange = 1,
}

/// Calibrated answer/abstain policy.
pub struct SelriskPolicy {
    inner: SelectivePolicy,
}

/// Linear probe loaded from its JSON form.
pub struct SelriskProbe {
    inner: LinearProbe,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SelriskStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SingleClass => SelriskStatus::SingleClass,
            Error::DimensionMismatch { .. } => SelriskStatus::DimensionMismatch,
            Error::Json(_) | Error::Csv(_) => SelriskStatus::Parse,
            Error::InvalidInput(_) | Error::TooFewRecords { .. } => SelriskStatus::InvalidInput,
            Error::Io { .. } | Error::MissingPrerequisite { .. } => SelriskStatus::Internal,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: SelriskStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SelriskStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SelriskStatus::Ok
        }
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(_) => {
            set_last_error("internal panic");
            SelriskStatus::Internal
        }
    }
}

/// # Safety
/// `data` must point to `len` readable values when non-null.
unsafe fn slice<'a, T>(data: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(SelriskStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `data` must point to `len` writable values when non-null.
unsafe fn slice_mut<'a, T>(data: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(fail(SelriskStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(SelriskStatus::NullPointer, format!("{name} is null")));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(text: *const c_char) -> Result<&'a str, Failure> {
    if text.is_null() {
        return Err(fail(SelriskStatus::NullPointer, "json is null"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(SelriskStatus::Parse, "json is not valid UTF-8"))
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn selrisk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// AUROC of `scores` for the positive `labels`, ties counted half.
///
/// # Safety
/// Arrays must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_auroc(scores: *const f64, labels: *const bool, n: usize, out: *mut f64) -> SelriskStatus {
    guard(|| {
        let v = metrics::auroc(slice(scores, n, "scores")?, slice(labels, n, "labels")?)?;
        write(out, v, "out")
    })
}

/// Step-wise average precision with positive `labels`.
///
/// # Safety
/// Arrays must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_auprc(scores: *const f64, labels: *const bool, n: usize, out: *mut f64) -> SelriskStatus {
    guard(|| {
        let v = metrics::auprc(slice(scores, n, "scores")?, slice(labels, n, "labels")?)?;
        write(out, v, "out")
    })
}

/// Area under the risk-coverage curve and its excess over the oracle.
///
/// # Safety
/// Arrays must hold `n` elements; `aurc_out` and `e_aurc_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_rc_area(
    risks: *const f64,
    hallucinated: *const bool,
    n: usize,
    aurc_out: *mut f64,
    e_aurc_out: *mut f64,
) -> SelriskStatus {
    guard(|| {
        let curve = metrics::rc_curve(slice(risks, n, "risks")?, slice(hallucinated, n, "hallucinated")?)?;
        write(aurc_out, curve.aurc, "aurc_out")?;
        write(e_aurc_out, curve.e_aurc, "e_aurc_out")
    })
}

/// Spearman rank correlation.
///
/// # Safety
/// Arrays must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_spearman(a: *const f64, b: *const f64, n: usize, out: *mut f64) -> SelriskStatus {
    guard(|| {
        let v = metrics::spearman(slice(a, n, "a")?, slice(b, n, "b")?)?;
        write(out, v, "out")
    })
}

/// Target calibration error over the grid `alpha_min..=alpha_max` in steps of `alpha_step`.
///
/// # Safety
/// Calibration arrays hold `n_cal` elements, test arrays `n_test`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_tce(
    cal_risks: *const f64,
    cal_hallucinated: *const bool,
    n_cal: usize,
    test_risks: *const f64,
    test_hallucinated: *const bool,
    n_test: usize,
    alpha_min: f64,
    alpha_max: f64,
    alpha_step: f64,
    fallback: SelriskFallback,
    out: *mut f64,
) -> SelriskStatus {
    guard(|| {
        let alphas = AlphaGrid {
            min: alpha_min,
            max: alpha_max,
            step: alpha_step,
        }
        .points()?;
        let fallback = match fallback {
            SelriskFallback::PerAlpha => ZeroCoverageFallback::PerAlpha,
            SelriskFallback::WholeRange => ZeroCoverageFallback::WholeRange,
        };
        let outcome = metrics::tce(
            slice(cal_risks, n_cal, "cal_risks")?,
            slice(cal_hallucinated, n_cal, "cal_hallucinated")?,
            slice(test_risks, n_test, "test_risks")?,
            slice(test_hallucinated, n_test, "test_hallucinated")?,
            &alphas,
            fallback,
        )?;
        write(out, outcome.tce, "out")
    })
}

/// Mean negative log-likelihood of answer-token log-probabilities.
///
/// # Safety
/// `logprobs` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_sequence_nll(logprobs: *const f64, n: usize, out: *mut f64) -> SelriskStatus {
    guard(|| write(out, sequence_nll(slice(logprobs, n, "logprobs")?)?.value, "out"))
}

/// Semantic entropy (natural log) of a cluster labelling `0..C-1` over `k` samples.
///
/// # Safety
/// `cluster_ids` must hold `k` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_semantic_entropy(cluster_ids: *const usize, k: usize, out: *mut f64) -> SelriskStatus {
    guard(|| {
        let assignment = ClusterAssignment::new(slice(cluster_ids, k, "cluster_ids")?.to_vec())?;
        write(out, semantic_entropy(&assignment).value, "out")
    })
}

/// Greedy mutual-entailment clustering of a row-major `k × k` matrix.
///
/// # Safety
/// `pairs` must hold `k * k` elements, `cluster_out` `k` writable elements,
/// and `num_clusters_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_cluster_by_entailment(
    pairs: *const bool,
    k: usize,
    cluster_out: *mut usize,
    num_clusters_out: *mut usize,
) -> SelriskStatus {
    guard(|| {
        let len = k
            .checked_mul(k)
            .ok_or_else(|| fail(SelriskStatus::InvalidInput, "k * k overflows"))?;
        let flat = slice(pairs, len, "pairs")?;
        let matrix: Vec<Vec<bool>> = flat.chunks(k.max(1)).map(<[bool]>::to_vec).collect();
        let assignment = cluster_by_entailment(&matrix)?;
        slice_mut(cluster_out, k, "cluster_out")?.copy_from_slice(assignment.cluster_of());
        write(num_clusters_out, assignment.num_clusters(), "num_clusters_out")
    })
}

/// Calibrates a policy answering iff `risk ≤ tau` with calibration risk at most `alpha`.
///
/// # Safety
/// Arrays must hold `n` elements; `policy_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_policy_calibrate(
    risks: *const f64,
    hallucinated: *const bool,
    n: usize,
    alpha: f64,
    policy_out: *mut *mut SelriskPolicy,
) -> SelriskStatus {
    guard(|| {
        let inner = calibrate_threshold("ffi", slice(risks, n, "risks")?, slice(hallucinated, n, "hallucinated")?, alpha)?;
        write(policy_out, Box::into_raw(Box::new(SelriskPolicy { inner })), "policy_out")
    })
}

/// Loads a policy from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `policy_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_policy_from_json(json: *const c_char, policy_out: *mut *mut SelriskPolicy) -> SelriskStatus {
    guard(|| {
        let inner = SelectivePolicy::from_json(c_str(json)?)?;
        write(policy_out, Box::into_raw(Box::new(SelriskPolicy { inner })), "policy_out")
    })
}

/// Threshold of a policy; `-INFINITY` when it abstains on everything.
///
/// # Safety
/// `policy` must come from this library and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn selrisk_policy_tau(policy: *const SelriskPolicy, out: *mut f64) -> SelriskStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| fail(SelriskStatus::NullPointer, "policy is null"))?;
        write(out, p.inner.tau, "out")
    })
}

/// Writes `true` (answer) or `false` (abstain) per risk.
///
/// # Safety
/// `policy` must be live; `risks` and `answer_out` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn selrisk_policy_apply(
    policy: *const SelriskPolicy,
    risks: *const f64,
    n: usize,
    answer_out: *mut bool,
) -> SelriskStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| fail(SelriskStatus::NullPointer, "policy is null"))?;
        let risks = slice(risks, n, "risks")?;
        let out = slice_mut(answer_out, n, "answer_out")?;
        for (o, r) in out.iter_mut().zip(risks) {
            *o = p.inner.answers(*r);
        }
        Ok(())
    })
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn selrisk_policy_free(policy: *mut SelriskPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Loads a probe from the JSON written by `train-probe`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `probe_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_probe_from_json(json: *const c_char, probe_out: *mut *mut SelriskProbe) -> SelriskStatus {
    guard(|| {
        let inner = LinearProbe::from_json(c_str(json)?)?;
        write(probe_out, Box::into_raw(Box::new(SelriskProbe { inner })), "probe_out")
    })
}

/// Feature dimension and hidden-state layer the probe reads.
///
/// # Safety
/// `probe` must be live; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn selrisk_probe_shape(probe: *const SelriskProbe, dim_out: *mut usize, layer_out: *mut usize) -> SelriskStatus {
    guard(|| {
        let p = probe.as_ref().ok_or_else(|| fail(SelriskStatus::NullPointer, "probe is null"))?;
        write(dim_out, p.inner.dim(), "dim_out")?;
        write(layer_out, p.inner.layer, "layer_out")
    })
}

/// Positive-class probability for `n` row-major feature rows of width `dim`.
///
/// # Safety
/// `probe` must be live; `features` must hold `n * dim` elements and `out` `n`.
#[no_mangle]
pub unsafe extern "C" fn selrisk_probe_predict(
    probe: *const SelriskProbe,
    features: *const f64,
    n: usize,
    dim: usize,
    out: *mut f64,
) -> SelriskStatus {
    guard(|| {
        let p = probe.as_ref().ok_or_else(|| fail(SelriskStatus::NullPointer, "probe is null"))?;
        if dim != p.inner.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.inner.dim(),
                got: dim,
            }
            .into());
        }
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| fail(SelriskStatus::InvalidInput, "n * dim overflows"))?;
        let x = Matrix::from_row_major(n, dim, slice(features, len, "features")?.to_vec())?;
        let dst = slice_mut(out, n, "out")?;
        for (o, row) in dst.iter_mut().zip(x.iter_rows()) {
            *o = sigmoid(p.inner.logit_row(row));
        }
        Ok(())
    })
}

/// Releases a probe. Null is ignored.
///
/// # Safety
/// `probe` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn selrisk_probe_free(probe: *mut SelriskProbe) {
    if !probe.is_null() {
        drop(Box::from_raw(probe));
    }
}
