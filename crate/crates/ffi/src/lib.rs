//! C ABI over `dffc-core`.
//!
//! Every fallible function returns a [`DffcStatus`]; results travel through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`dffc_last_error`]. Handles are opaque and must be released with
//! their matching `_free` function. Strings returned by the library are
//! released with [`dffc_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use dffc_core::forgeries::{ssim, tampering_ratio, ToyImage};
use dffc_core::hardness::{instantaneous_hardness, HardnessState};
use dffc_core::model::LrSchedule;
use dffc_core::pacing::{select_easy_pool, select_hard_pool, PacingSchedule};
use dffc_core::runner::{roc_auc, run_training, write_run, RunConfig};
use dffc_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DffcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSchedule = 3,
    IndexOutOfRange = 4,
    ShapeMismatch = 5,
    UndefinedAuc = 6,
    Diverged = 7,
    Io = 8,
    Format = 9,
    Panic = 10,
}

fn status_of(e: &Error) -> DffcStatus {
    match e {
        Error::InvalidSchedule(_) => DffcStatus::InvalidSchedule,
        Error::IndexOutOfRange { .. } => DffcStatus::IndexOutOfRange,
        Error::InvalidConfig(_) | Error::EmptyBatch => DffcStatus::InvalidArgument,
        Error::ShapeMismatch { .. } => DffcStatus::ShapeMismatch,
        Error::UndefinedAuc => DffcStatus::UndefinedAuc,
        Error::Diverged => DffcStatus::Diverged,
        Error::Io { .. } => DffcStatus::Io,
        Error::Format { .. } | Error::Json(_) => DffcStatus::Format,
        Error::Run { source, .. } => status_of(source),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(DffcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(DffcStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DffcStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult) -> DffcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DffcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            DffcStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> FfiResult {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains NUL"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dffc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dffc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn dffc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dffc_instantaneous_hardness(
    loss: f64,
    eta_t: f64,
    eta_max: f64,
    out: *mut f64,
) -> DffcStatus {
    guard(|| write_out(out, instantaneous_hardness(loss, eta_t, eta_max)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn dffc_cosine_lr(
    eta_max: f64,
    eta_min: f64,
    total_epochs: usize,
    epoch: usize,
    out: *mut f64,
) -> DffcStatus {
    guard(|| {
        let lr = LrSchedule::new(eta_max, eta_min, total_epochs)?;
        write_out(out, lr.cosine_lr(epoch)?, "out")
    })
}

/// Per-sample hardness state.
pub struct DffcHardness {
    state: HardnessState,
}

#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_new(
    prior: *const f64,
    n: usize,
    gamma: f64,
    alpha_f: f64,
    out: *mut *mut DffcHardness,
) -> DffcStatus {
    guard(|| {
        let prior = input(prior, n, "prior")?.to_vec();
        let state = HardnessState::new(prior, gamma, alpha_f)?;
        write_out(out, Box::into_raw(Box::new(DffcHardness { state })), "out")
    })
}

/// Restores a state saved by [`dffc_hardness_to_json`].
#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_from_json(
    json: *const c_char,
    out: *mut *mut DffcHardness,
) -> DffcStatus {
    guard(|| {
        let state = HardnessState::from_json(c_str(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(DffcHardness { state })), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_free(h: *mut DffcHardness) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

unsafe fn hardness<'a>(h: *const DffcHardness) -> FfiResult<&'a HardnessState> {
    h.as_ref()
        .map(|h| &h.state)
        .ok_or_else(|| null("hardness handle"))
}

unsafe fn hardness_mut<'a>(h: *mut DffcHardness) -> FfiResult<&'a mut HardnessState> {
    h.as_mut()
        .map(|h| &mut h.state)
        .ok_or_else(|| null("hardness handle"))
}

/// Number of samples, or 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_len(h: *const DffcHardness) -> usize {
    h.as_ref().map_or(0, |h| h.state.len())
}

#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_update(
    h: *mut DffcHardness,
    sample_id: usize,
    instantaneous: f64,
    in_hard_pool: bool,
) -> DffcStatus {
    guard(|| Ok(hardness_mut(h)?.update_dih(sample_id, instantaneous, in_hard_pool)?))
}

fn copy_into(dst: &mut [f64], src: &[f64]) -> FfiResult {
    if dst.len() != src.len() {
        return Err(Error::ShapeMismatch {
            expected: src.len(),
            actual: dst.len(),
        }
        .into());
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Writes all `n` DFH scores into `out`.
#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_dfh(
    h: *const DffcHardness,
    out: *mut f64,
    n: usize,
) -> DffcStatus {
    guard(|| copy_into(output(out, n, "out")?, &hardness(h)?.dfh_all()))
}

/// Writes all `n` DIH values into `out`.
#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_dih(
    h: *const DffcHardness,
    out: *mut f64,
    n: usize,
) -> DffcStatus {
    guard(|| copy_into(output(out, n, "out")?, hardness(h)?.dih()))
}

/// Serialises the state; free the string with [`dffc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dffc_hardness_to_json(
    h: *const DffcHardness,
    out: *mut *mut c_char,
) -> DffcStatus {
    guard(|| {
        let text = hardness(h)?.to_json()?;
        write_out(out, into_c_string(text)?, "out")
    })
}

/// Hard-pool schedule.
pub struct DffcSchedule {
    schedule: PacingSchedule,
}

#[no_mangle]
pub unsafe extern "C" fn dffc_schedule_new(
    milestones: *const usize,
    n_milestones: usize,
    alpha_k: f64,
    easy_pool_size: usize,
    n_samples: usize,
    total_epochs: usize,
    out: *mut *mut DffcSchedule,
) -> DffcStatus {
    guard(|| {
        let m = input(milestones, n_milestones, "milestones")?.to_vec();
        let schedule = PacingSchedule::new(m, alpha_k, easy_pool_size, n_samples, total_epochs)?;
        write_out(
            out,
            Box::into_raw(Box::new(DffcSchedule { schedule })),
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn dffc_schedule_free(s: *mut DffcSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dffc_schedule_pool_size(
    s: *const DffcSchedule,
    epoch: usize,
    out: *mut usize,
) -> DffcStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("schedule handle"))?;
        write_out(out, s.schedule.pool_size_at_epoch(epoch)?, "out")
    })
}

unsafe fn select_into(
    scores: *const f64,
    n: usize,
    k: usize,
    out_ids: *mut usize,
    select: fn(&[f64], usize) -> dffc_core::Result<Vec<usize>>,
) -> DffcStatus {
    guard(|| {
        let ids = select(input(scores, n, "scores")?, k)?;
        output(out_ids, k, "out_ids")?.copy_from_slice(&ids);
        Ok(())
    })
}

/// Writes the ids of the `k` highest scores, in ascending id order, to
/// `out_ids` (room for `k`). Ties go to the smaller id.
#[no_mangle]
pub unsafe extern "C" fn dffc_select_hard_pool(
    scores: *const f64,
    n: usize,
    k: usize,
    out_ids: *mut usize,
) -> DffcStatus {
    select_into(scores, n, k, out_ids, select_hard_pool)
}

/// As [`dffc_select_hard_pool`] for the `e` lowest scores.
#[no_mangle]
pub unsafe extern "C" fn dffc_select_easy_pool(
    scores: *const f64,
    n: usize,
    e: usize,
    out_ids: *mut usize,
) -> DffcStatus {
    select_into(scores, n, e, out_ids, select_easy_pool)
}

unsafe fn image_pair(
    a: *const f32,
    b: *const f32,
    width: usize,
    height: usize,
) -> FfiResult<(ToyImage, ToyImage)> {
    let len = width
        .checked_mul(height)
        .ok_or_else(|| invalid("image dimensions overflow"))?;
    let a = ToyImage::new(width, height, input(a, len, "a")?.to_vec())?;
    let b = ToyImage::new(width, height, input(b, len, "b")?.to_vec())?;
    Ok((a, b))
}

/// Global-window SSIM of two row-major `width * height` images in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn dffc_ssim(
    a: *const f32,
    b: *const f32,
    width: usize,
    height: usize,
    out: *mut f64,
) -> DffcStatus {
    guard(|| {
        let (a, b) = image_pair(a, b, width, height)?;
        write_out(out, ssim(&a, &b)?, "out")
    })
}

/// Fraction of pixels whose absolute difference exceeds `threshold`.
#[no_mangle]
pub unsafe extern "C" fn dffc_tampering_ratio(
    fake: *const f32,
    real: *const f32,
    width: usize,
    height: usize,
    threshold: f64,
    out: *mut f64,
) -> DffcStatus {
    guard(|| {
        let (fake, real) = image_pair(fake, real, width, height)?;
        write_out(out, tampering_ratio(&fake, &real, threshold)?, "out")
    })
}

/// ROC-AUC of `scores` against 0/1 `labels`.
#[no_mangle]
pub unsafe extern "C" fn dffc_roc_auc(
    scores: *const f64,
    labels: *const f64,
    n: usize,
    out: *mut f64,
) -> DffcStatus {
    guard(|| {
        let auc = roc_auc(input(scores, n, "scores")?, input(labels, n, "labels")?)?;
        write_out(out, auc, "out")
    })
}

/// Trains from a JSON run config (`"{}"` for defaults). When `out_dir` is
/// non-NULL the run artifacts are written there; the directory must exist.
/// `out_metrics`, when non-NULL, receives the per-epoch metrics as a JSON
/// array to be freed with [`dffc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dffc_train_json(
    config_json: *const c_char,
    out_dir: *const c_char,
    out_metrics: *mut *mut c_char,
) -> DffcStatus {
    guard(|| {
        let config: RunConfig =
            serde_json::from_str(c_str(config_json, "config_json")?).map_err(Error::from)?;
        let run = run_training(&config)?;
        if !out_dir.is_null() {
            write_run(Path::new(c_str(out_dir, "out_dir")?), &run)?;
        }
        if !out_metrics.is_null() {
            let text = serde_json::to_string(&run.log.rows).map_err(Error::from)?;
            out_metrics.write(into_c_string(text)?);
        }
        Ok(())
    })
}
