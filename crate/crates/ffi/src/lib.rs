//! C ABI over the relex engine.
//!
//! Every fallible call returns a [`RelexStatus`]; on failure the message is
//! available from [`relex_last_error`] on the same thread. Strings handed
//! out by the library must be released with [`relex_string_free`], handles
//! with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use relex::classifier::{should_stop, BaselineModel};
use relex::experiment::Metrics;
use relex::ner::{load_gazetteer, EntityClass, EntityMention, Links, Matcher, MatcherOptions, MentionSource};
use relex::silver::{vote, VoteOutcome};
use relex::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelexStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Format = 5,
    Training = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelexEntityClass {
    Food = 0,
    Chemical = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelexVote {
    Negative = 0,
    Positive = 1,
    Discard = 2,
}

/// Per-class precision/recall/F1 with class 1 as positive.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RelexMetrics {
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub macro_f1: f64,
    pub support: [usize; 2],
}

/// Opaque dictionary matcher.
pub struct RelexMatcher {
    inner: Matcher,
}

/// Opaque trained baseline model.
pub struct RelexBaseline {
    inner: BaselineModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RelexStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => RelexStatus::Io,
            Error::Format { .. } | Error::Payload { .. } | Error::Record { .. } | Error::Version { .. } => {
                RelexStatus::Format
            }
            Error::Training(_) | Error::Classifier { .. } => RelexStatus::Training,
            _ => RelexStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RelexStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RelexStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RelexStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error (panic)".into());
            RelexStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RelexStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RelexStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a pointer valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(RelexStatus::NullArgument, format!("{name} is null")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("result contains a nul byte"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn relex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn relex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn relex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a matcher from a gazetteer CSV.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_matcher_new(
    path: *const c_char,
    entity_class: RelexEntityClass,
    strip_plurals: bool,
    out: *mut *mut RelexMatcher,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let entries = load_gazetteer(Path::new(path))?;
        let options = MatcherOptions {
            entity_class: match entity_class {
                RelexEntityClass::Food => EntityClass::Food,
                RelexEntityClass::Chemical => EntityClass::Chemical,
            },
            strip_plurals,
        };
        let inner = Matcher::new(&entries, options)?;
        *out = Box::into_raw(Box::new(RelexMatcher { inner }));
        Ok(())
    })
}

/// Match `text` and return a JSON array of
/// `{"start","end","surface","concept_id"}` objects with char offsets.
///
/// # Safety
/// `matcher` must come from [`relex_matcher_new`]; `text` must be a
/// nul-terminated string; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_matcher_find(
    matcher: *const RelexMatcher,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let matcher = matcher
            .as_ref()
            .ok_or_else(|| Failure(RelexStatus::NullArgument, "matcher is null".into()))?;
        let text = str_arg(text, "text")?;
        let chars: Vec<char> = text.chars().collect();
        let spans: Vec<serde_json::Value> = matcher
            .inner
            .find_spans(text)
            .into_iter()
            .map(|(start, end, idx)| {
                serde_json::json!({
                    "start": start,
                    "end": end,
                    "surface": chars[start..end].iter().collect::<String>(),
                    "concept_id": matcher.inner.entries()[idx].concept_id,
                })
            })
            .collect();
        *out = to_c_string(serde_json::Value::Array(spans).to_string())?;
        Ok(())
    })
}

/// # Safety
/// `matcher` must be null or come from [`relex_matcher_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn relex_matcher_free(matcher: *mut RelexMatcher) {
    if !matcher.is_null() {
        drop(Box::from_raw(matcher));
    }
}

/// Sentence spans of `text` as a JSON array of `[start, end]` char offsets.
///
/// # Safety
/// `text` must be a nul-terminated string; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_sentence_spans(text: *const c_char, out_json: *mut *mut c_char) -> RelexStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let text = str_arg(text, "text")?;
        let spans = relex::segment::sentence_spans(text);
        *out = to_c_string(serde_json::to_string(&spans).expect("spans serialize"))?;
        Ok(())
    })
}

fn span_mention(sentence: &str, start: usize, end: usize, class: EntityClass) -> Result<EntityMention, Failure> {
    let surface = relex::text::char_slice(sentence, start, end)
        .filter(|_| start < end)
        .ok_or_else(|| invalid(format!("{class} span {start}..{end} is out of range")))?;
    Ok(EntityMention {
        sent_id: String::new(),
        start,
        end,
        surface: surface.to_string(),
        entity_class: class,
        source: match class {
            EntityClass::Food => MentionSource::Voted,
            EntityClass::Chemical => MentionSource::ChemicalDict,
        },
        links: Links::default(),
        food_group: None,
        food_subgroup: None,
    })
}

/// Mask a candidate pair given as char spans of `sentence`: the food
/// surface becomes `XXX`, the chemical surface `YYY`.
///
/// # Safety
/// `sentence` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_mask(
    sentence: *const c_char,
    food_start: usize,
    food_end: usize,
    chemical_start: usize,
    chemical_end: usize,
    out: *mut *mut c_char,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sentence = str_arg(sentence, "sentence")?;
        let food = span_mention(sentence, food_start, food_end, EntityClass::Food)?;
        let chemical = span_mention(sentence, chemical_start, chemical_end, EntityClass::Chemical)?;
        *out = to_c_string(relex::pairs::mask(sentence, &food, &chemical)?)?;
        Ok(())
    })
}

/// Unanimity vote over `len` binary labels from `k` classifiers.
///
/// # Safety
/// `labels` must point to `len` readable bytes; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_vote(labels: *const u8, len: usize, k: usize, out: *mut RelexVote) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if labels.is_null() && len > 0 {
            return Err(Failure(RelexStatus::NullArgument, "labels is null".into()));
        }
        let labels = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(labels, len)
        };
        *out = match vote(labels, k)? {
            VoteOutcome::Positive => RelexVote::Positive,
            VoteOutcome::Negative => RelexVote::Negative,
            VoteOutcome::Discard => RelexVote::Discard,
        };
        Ok(())
    })
}

/// Early-stopping decision for a sequence of evaluation losses.
///
/// # Safety
/// `losses` must point to `len` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_should_stop(
    losses: *const f64,
    len: usize,
    delta: f64,
    patience: usize,
    out: *mut bool,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if losses.is_null() && len > 0 {
            return Err(Failure(RelexStatus::NullArgument, "losses is null".into()));
        }
        let losses = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(losses, len)
        };
        *out = should_stop(losses, delta, patience);
        Ok(())
    })
}

/// Metrics from a 2x2 confusion matrix with class 1 as positive.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_metrics_from_confusion(
    tp: usize,
    fp: usize,
    fn_: usize,
    tn: usize,
    out: *mut RelexMetrics,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = Metrics::from_confusion(tp, fp, fn_, tn);
        *out = RelexMetrics {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            macro_f1: m.macro_f1,
            support: m.support,
        };
        Ok(())
    })
}

/// Load a baseline model saved by the pipeline.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_baseline_load(path: *const c_char, out: *mut *mut RelexBaseline) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let inner = BaselineModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(RelexBaseline { inner }));
        Ok(())
    })
}

/// Positive-class probability for a masked sentence.
///
/// # Safety
/// `model` must come from [`relex_baseline_load`]; `masked` must be a
/// nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn relex_baseline_score(
    model: *const RelexBaseline,
    masked: *const c_char,
    out: *mut f64,
) -> RelexStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = model
            .as_ref()
            .ok_or_else(|| Failure(RelexStatus::NullArgument, "model is null".into()))?;
        *out = model.inner.score_text(str_arg(masked, "masked")?);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from [`relex_baseline_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn relex_baseline_free(model: *mut RelexBaseline) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
