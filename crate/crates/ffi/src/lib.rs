//! C interface to `tc_core`.
//!
//! Every fallible function returns a [`TcStatus`]. On failure the message is
//! kept per thread and read with [`tc_last_error_message`]. Strings returned
//! through out-pointers belong to the caller and are released with
//! [`tc_string_free`]; handles are released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;
use std::sync::Arc;

use tc_core::augment::{num_perturbed, AugmentOpKind, Augmenter, Temperature};
use tc_core::corpus::{load_lexicon, tokenize, SynonymLexicon, TokenizedExample, Vocabulary};
use tc_core::curriculum::{preset_schedule, Schedule, ScheduleKind};
use tc_core::net::{cosine_distance, gradcheck_suite, triplet_loss, Margin};
use tc_core::rng::{self, Purpose};
use tc_core::trainer::{write_metrics_csv, RunConfig, Trainer};
use tc_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Data = 6,
    Config = 7,
    Numeric = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> TcStatus {
    match e {
        Error::Io { .. } => TcStatus::Io,
        Error::Parse { .. } | Error::Untokenizable(_) => TcStatus::Parse,
        Error::EmptyDataset | Error::ClassTooSmall { .. } => TcStatus::Data,
        Error::Config(_) | Error::UnknownPreset(_) | Error::Checkpoint(_) => TcStatus::Config,
        Error::NonFinite(_) => TcStatus::Numeric,
        _ => TcStatus::InvalidArgument,
    }
}

struct Failure(TcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

/// Runs `f`, recording any error or panic for [`tc_last_error_message`].
fn guard(f: impl FnOnce() -> FfiResult<()>) -> TcStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TcStatus::Panic
        }
    }
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(TcStatus::NullPointer, format!("{name} is null")))
}

fn in_ref<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    // SAFETY: callers pass either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(TcStatus::NullPointer, format!("{name} is null")))
}

fn in_str<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure(TcStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null and, per the contract, NUL-terminated.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(TcStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn in_slice<'a>(p: *const f64, len: usize, name: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(TcStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null and, per the contract, `len` readable doubles.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

fn out_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(TcStatus::InvalidArgument, "result contains a NUL byte".into()))
}

fn parse<T: std::str::FromStr<Err = Error>>(p: *const c_char, name: &str) -> FfiResult<T> {
    Ok(in_str(p, name)?.parse()?)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Positions a count-based operator perturbs in a sentence of `len` tokens.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_num_perturbed(tau: f64, len: usize, out: *mut usize) -> TcStatus {
    guard(|| {
        *out_ptr(out, "out")? = num_perturbed(Temperature::new(tau)?, len);
        Ok(())
    })
}

/// Cosine distance `1 - cos(u, v)`; zero vectors are at distance 1.
///
/// # Safety
/// `u` and `v` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_cosine_distance(u: *const f64, v: *const f64, len: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        *out_ptr(out, "out")? = cosine_distance(in_slice(u, len, "u")?, in_slice(v, len, "v")?);
        Ok(())
    })
}

/// Triplet hinge loss of one embedding triple.
///
/// # Safety
/// `anchor`, `positive` and `negative` must hold `len` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_triplet_loss(
    anchor: *const f64,
    positive: *const f64,
    negative: *const f64,
    len: usize,
    margin: f64,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let loss = triplet_loss(
            in_slice(anchor, len, "anchor")?,
            in_slice(positive, len, "positive")?,
            in_slice(negative, len, "negative")?,
            Margin::new(margin)?,
        )?;
        *out_ptr(out, "out")? = loss;
        Ok(())
    })
}

/// An augmentation technique bound to a synonym lexicon.
pub struct TcAugmenter {
    inner: Augmenter,
}

/// Creates an augmenter. `lexicon_path` may be null for an empty lexicon;
/// the switchout vocabulary is the lexicon's words.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_augmenter_new(
    technique: *const c_char,
    lexicon_path: *const c_char,
    out: *mut *mut TcAugmenter,
) -> TcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let kind: AugmentOpKind = parse(technique, "technique")?;
        let lexicon = if lexicon_path.is_null() {
            SynonymLexicon::default()
        } else {
            load_lexicon(Path::new(in_str(lexicon_path, "lexicon_path")?))?
        };
        let vocab = Vocabulary::from_tokens(
            lexicon
                .iter()
                .flat_map(|(w, syns)| std::iter::once(w).chain(syns.iter().map(String::as_str))),
        );
        let inner = Augmenter::new(kind, Arc::new(lexicon), Arc::new(vocab))?;
        *out = Box::into_raw(Box::new(TcAugmenter { inner }));
        Ok(())
    })
}

/// Augments `text` at temperature `tau`. The same `seed` gives the same
/// output. The result is written to `out_text`.
///
/// # Safety
/// `augmenter` must come from [`tc_augmenter_new`]; `text` must be
/// NUL-terminated; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_augment_text(
    augmenter: *const TcAugmenter,
    text: *const c_char,
    tau: f64,
    seed: u64,
    out_text: *mut *mut c_char,
) -> TcStatus {
    guard(|| {
        let aug = in_ref(augmenter, "augmenter")?;
        let out = out_ptr(out_text, "out_text")?;
        let text = in_str(text, "text")?;
        let tokens = tokenize(text)?;
        let mut r = rng::stream(seed, Purpose::Cli, 0);
        let ex = aug
            .inner
            .augment(&TokenizedExample::original(tokens.clone(), 0), Temperature::new(tau)?, &mut r);
        *out = out_string(if ex.tokens == tokens { text.to_string() } else { ex.text() })?;
        Ok(())
    })
}

/// # Safety
/// `augmenter` must come from [`tc_augmenter_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tc_augmenter_free(augmenter: *mut TcAugmenter) {
    if !augmenter.is_null() {
        drop(Box::from_raw(augmenter));
    }
}

/// A curriculum schedule.
pub struct TcSchedule {
    inner: Schedule,
}

/// Builds a preset schedule: `kind` is a schedule name such as
/// `"gradual"`, `preset` one of `huff`, `fewrel`, `covc`, `amzn`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_preset(
    kind: *const c_char,
    preset: *const c_char,
    tau_final: f64,
    seed: u64,
    out: *mut *mut TcSchedule,
) -> TcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let kind: ScheduleKind = parse(kind, "kind")?;
        let inner = preset_schedule(kind, in_str(preset, "preset")?, Temperature::new(tau_final)?, seed)?;
        *out = Box::into_raw(Box::new(TcSchedule { inner }));
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from [`tc_schedule_preset`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_total_updates(schedule: *const TcSchedule, out: *mut u64) -> TcStatus {
    guard(|| {
        *out_ptr(out, "out")? = in_ref(schedule, "schedule")?.inner.total_updates;
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from [`tc_schedule_preset`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_num_stages(schedule: *const TcSchedule, out: *mut usize) -> TcStatus {
    guard(|| {
        *out_ptr(out, "out")? = in_ref(schedule, "schedule")?.inner.stages.len();
        Ok(())
    })
}

/// Stage index, temperature and augmentation flag in effect at `update`.
///
/// # Safety
/// `schedule` must come from [`tc_schedule_preset`]; the out-pointers must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_stage_at(
    schedule: *const TcSchedule,
    update: u64,
    out_stage: *mut usize,
    out_tau: *mut f64,
    out_augment: *mut bool,
) -> TcStatus {
    guard(|| {
        let (idx, stage) = in_ref(schedule, "schedule")?.inner.stage_at(update)?;
        *out_ptr(out_stage, "out_stage")? = idx;
        *out_ptr(out_tau, "out_tau")? = stage.tau_at(update).value();
        *out_ptr(out_augment, "out_augment")? = stage.augment_enabled;
        Ok(())
    })
}

/// # Safety
/// `schedule` must come from [`tc_schedule_preset`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_free(schedule: *mut TcSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TcTrainSummary {
    pub best_accuracy: f64,
    pub best_update: u64,
    /// NaN when the run has no test split.
    pub test_accuracy: f64,
    pub total_updates: u64,
    pub mined_triplets: u64,
    pub fallback_triplets: u64,
}

/// Trains from a run config file. `out_metrics_csv` may be null; otherwise
/// it receives the metric history as CSV.
///
/// # Safety
/// `config_path` must be NUL-terminated; `out` must be writable;
/// `out_metrics_csv` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_train_from_config(
    config_path: *const c_char,
    out: *mut TcTrainSummary,
    out_metrics_csv: *mut *mut c_char,
) -> TcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = RunConfig::load(in_str(config_path, "config_path")?)?;
        let mut trainer = Trainer::new(cfg.train.clone(), cfg.prepare_data()?)?;
        let r = trainer.run()?;
        if !out_metrics_csv.is_null() {
            let mut buf = Vec::new();
            write_metrics_csv(&r.history, &mut buf).map_err(|e| Failure(TcStatus::Io, e.to_string()))?;
            *out_metrics_csv = out_string(String::from_utf8_lossy(&buf).into_owned())?;
        }
        *out = TcTrainSummary {
            best_accuracy: r.best_accuracy,
            best_update: r.best_update,
            test_accuracy: r.test_accuracy.unwrap_or(f64::NAN),
            total_updates: r.total_updates,
            mined_triplets: r.mined_triplets,
            fallback_triplets: r.fallback_triplets,
        };
        Ok(())
    })
}

/// Finite-difference gradient check over `configs` random networks; writes
/// the largest relative error.
///
/// # Safety
/// `out_max_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_gradcheck(seed: u64, configs: usize, out_max_error: *mut f64) -> TcStatus {
    guard(|| {
        let out = out_ptr(out_max_error, "out_max_error")?;
        let reports = gradcheck_suite(seed, configs)?;
        *out = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
        Ok(())
    })
}
