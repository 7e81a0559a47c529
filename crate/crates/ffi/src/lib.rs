//! C interface to `milboost`.
//!
//! Datasets and models cross the boundary as opaque pointers that the caller
//! releases with the matching `_free` function. Every fallible call returns a
//! [`MilboostStatus`]; on failure a message is available from
//! [`milboost_last_error`] on the same thread until the next failing call.
//! Strings handed out by the library must be released with
//! [`milboost_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use milboost::boost::{adaboost, adaboost_star, BoostConfig};
use milboost::io::{load_dataset, DatasetFormat};
use milboost::synth::{generate_synthetic, BagSizes, Regime, SynthSpec};
use milboost::{
    BagFunction, Ensemble, InstanceHypothesis, Label, LiftMode, MilDataset, MilError,
    MilearnConfig, OracleKind,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MilboostStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Untrained = 5,
    Runtime = 6,
    Panic = 7,
}

/// Opaque dataset handle.
pub struct MilboostDataset(MilDataset);

/// Opaque trained model handle.
pub struct MilboostModel(Ensemble);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(MilboostStatus, String);

fn status_of(e: &MilError) -> MilboostStatus {
    match e {
        MilError::Io(_) => MilboostStatus::Io,
        MilError::Parse { .. }
        | MilError::Json(_)
        | MilError::Csv(_)
        | MilError::InvalidLabel(_)
        | MilError::DimensionMismatch { .. }
        | MilError::DuplicateBagId(_)
        | MilError::BagTooLarge { .. }
        | MilError::EmptyBag
        | MilError::NoBags
        | MilError::FormatVersion(_) => MilboostStatus::Parse,
        MilError::Untrained => MilboostStatus::Untrained,
        MilError::InvalidArgument(_)
        | MilError::FeatureOutOfRange { .. }
        | MilError::NonFinite(_)
        | MilError::LengthMismatch { .. } => MilboostStatus::InvalidArgument,
        _ => MilboostStatus::Runtime,
    }
}

impl From<MilError> for Failure {
    fn from(e: MilError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> MilboostStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MilboostStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MilboostStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MilboostStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: String) -> Failure {
    Failure(MilboostStatus::InvalidArgument, message)
}

/// Reads an optional C string; `NULL` maps to `None`.
unsafe fn opt_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s)
        .to_str()
        .map(Some)
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn parse<T: std::str::FromStr<Err = MilError>>(
    value: Option<&str>,
    default: &str,
) -> Result<T, Failure> {
    value.unwrap_or(default).parse().map_err(Failure::from)
}

/// Message of the last failure on this thread, or `NULL` if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn milboost_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn milboost_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a JSONL or CSV dataset; `format` is `"jsonl"`, `"csv"` or `NULL` to
/// infer it from the extension.
///
/// # Safety
/// `path` must be a valid NUL-terminated string, `format` NULL or valid, and
/// `out` a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_load(
    path: *const c_char,
    format: *const c_char,
    out: *mut *mut MilboostDataset,
) -> MilboostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = opt_str(path, "path")?.ok_or_else(|| null("path"))?;
        let format = match opt_str(format, "format")? {
            Some(f) => f.parse::<DatasetFormat>()?,
            None => DatasetFormat::from_path(Path::new(path)),
        };
        let dataset = load_dataset(path, format)?;
        *out = Box::into_raw(Box::new(MilboostDataset(dataset)));
        Ok(())
    })
}

/// Generates a synthetic dataset labelled by the stump
/// `x[target_feature] > target_threshold` pooled with max.
///
/// # Safety
/// `regime` must be NULL (homogeneous_independent) or a valid string; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_synth(
    regime: *const c_char,
    dimension: usize,
    max_bag_size: usize,
    num_bags: usize,
    positive_rate: f64,
    target_feature: usize,
    target_threshold: f64,
    noise: f64,
    seed: u64,
    out: *mut *mut MilboostDataset,
) -> MilboostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let regime: Regime = parse(opt_str(regime, "regime")?, "homogeneous_independent")?;
        let spec = SynthSpec {
            dimension,
            max_bag_size,
            num_bags,
            positive_rate,
            target: InstanceHypothesis::stump(target_feature, target_threshold, Label::Positive),
            noise,
            seed,
            bag_sizes: BagSizes::Fixed,
        };
        spec.validate()?;
        let dataset = generate_synthetic(regime, &spec)?;
        *out = Box::into_raw(Box::new(MilboostDataset(dataset)));
        Ok(())
    })
}

/// Number of bags; 0 for a NULL handle.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_num_bags(dataset: *const MilboostDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.bags().len())
}

/// Instance dimension; 0 for a NULL handle.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_dimension(dataset: *const MilboostDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.dimension())
}

/// Label (`-1` or `1`) of bag `index`, or 0 when out of range.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_label(
    dataset: *const MilboostDataset,
    index: usize,
) -> i32 {
    dataset
        .as_ref()
        .and_then(|d| d.0.bags().get(index))
        .map_or(0, |b| b.label.sign() as i32)
}

/// # Safety
/// `dataset` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn milboost_dataset_free(dataset: *mut MilboostDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Trains an ensemble. String options may be NULL for their defaults:
/// `psi` = "max", `oracle` = "agnostic", `mode` = "per_instance",
/// `booster` = "adaboost" (or "adaboost_star", which uses `nu`).
///
/// # Safety
/// `dataset` must be a live handle, string arguments NULL or valid, `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milboost_train(
    dataset: *const MilboostDataset,
    psi: *const c_char,
    oracle: *const c_char,
    mode: *const c_char,
    booster: *const c_char,
    rounds: usize,
    nu: f64,
    out: *mut *mut MilboostModel,
) -> MilboostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let psi: BagFunction = parse(opt_str(psi, "psi")?, "max")?;
        let oracle: OracleKind = parse(opt_str(oracle, "oracle")?, "agnostic")?;
        let mode: LiftMode = parse(opt_str(mode, "mode")?, "per_instance")?;
        let learner = MilearnConfig { psi, oracle, mode };
        let config = BoostConfig::new(rounds, psi);
        let bags = dataset.0.bags();
        let (ensemble, _) = match opt_str(booster, "booster")?.unwrap_or("adaboost") {
            "adaboost" => adaboost(bags, &learner, &config)?,
            "adaboost_star" => adaboost_star(bags, &learner, &config, nu)?,
            other => return Err(invalid(format!("unknown booster {other:?}"))),
        };
        *out = Box::into_raw(Box::new(MilboostModel(ensemble)));
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milboost_model_from_json(
    json: *const c_char,
    out: *mut *mut MilboostModel,
) -> MilboostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = opt_str(json, "json")?.ok_or_else(|| null("json"))?;
        *out = Box::into_raw(Box::new(MilboostModel(Ensemble::from_json(text)?)));
        Ok(())
    })
}

/// Serializes a model to JSON; release the string with [`milboost_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milboost_model_to_json(
    model: *const MilboostModel,
    out: *mut *mut c_char,
) -> MilboostStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let json = model.0.to_json()?;
        *out = CString::new(json)
            .map_err(|_| Failure(MilboostStatus::Runtime, "model JSON contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// Number of boosting terms; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn milboost_model_num_terms(model: *const MilboostModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.len())
}

/// Writes normalized scores (in `[-1, 1]`) and predicted labels (`-1`/`1`)
/// for every bag. Either output array may be NULL; non-NULL arrays must hold
/// `len` elements and `len` must equal the number of bags.
///
/// # Safety
/// Handles must be live; output arrays NULL or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn milboost_model_predict(
    model: *const MilboostModel,
    dataset: *const MilboostDataset,
    scores: *mut f64,
    labels: *mut i32,
    len: usize,
) -> MilboostStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let dataset = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let bags = dataset.0.bags();
        if len != bags.len() {
            return Err(invalid(format!(
                "len {len} does not match {} bags",
                bags.len()
            )));
        }
        model.0.check_dimension(dataset.0.dimension())?;
        for (i, bag) in bags.iter().enumerate() {
            let score = model.0.normalized_score(bag)?;
            let label = model.0.predict(bag)?;
            if !scores.is_null() {
                *scores.add(i) = score;
            }
            if !labels.is_null() {
                *labels.add(i) = label.sign() as i32;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn milboost_model_free(model: *mut MilboostModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn milboost_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
