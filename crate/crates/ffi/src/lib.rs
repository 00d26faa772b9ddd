//! C ABI over `phinote`.
//!
//! Every function returns a [`PhinoteStatus`]; outputs come back through
//! out-pointers. Strings handed to the caller are NUL-terminated UTF-8 owned
//! by the library and must be released with [`phinote_string_free`]. After a
//! non-OK status, [`phinote_last_error`] describes the failure on the
//! calling thread. Engine and annotator handles are opaque, immutable after
//! configuration, and may be shared across threads for the note-level calls.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chrono::NaiveDate;
use phinote::annotate::{annotate_text, emit_note_nlp, ContextLexicons, TermIndex, TriggerMatcher};
use phinote::corpus::{Note, PatientRecord};
use phinote::detect::{run_detectors, AgeDetector, Gazetteer, GazetteerDetector, LookupDetector, PatternDetector, PatternSet, PhiDetector};
use phinote::hips::{apply_surrogates, derive_patient_map, shift_date_with, RewriteContext, Style, SurrogateDatabase};
use phinote::merge::merge_findings;
use phinote::Error;

/// Result codes. The non-zero values 2, 3 and 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhinoteStatus {
    Ok = 0,
    /// A null pointer, non-UTF-8 string or out-of-range argument.
    InvalidArgument = 1,
    /// Invalid configuration or malformed input data.
    Validation = 2,
    GateFailed = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

/// Rewrite style for [`phinote_deid_engine_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhinoteStyle {
    Surrogate = 0,
    Placeholder = 1,
}

/// De-identification engine: surrogate database, detectors and known patients.
pub struct PhinoteDeidEngine {
    db: SurrogateDatabase,
    patterns: PatternSet,
    gazetteer: Gazetteer,
    patients: BTreeMap<String, PatientRecord>,
    seed: u64,
    style: Style,
    date_offset_days: Option<i64>,
}

/// Concept annotator: term index plus modifier lexicons.
pub struct PhinoteAnnotator {
    index: TermIndex,
    matcher: TriggerMatcher,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(PhinoteStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => PhinoteStatus::Io,
            Error::GateFailed(_) => PhinoteStatus::GateFailed,
            _ => PhinoteStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PhinoteStatus::InvalidArgument, msg.into())
}

/// Run `f`, translating errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PhinoteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PhinoteStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal error: panic caught at the C boundary");
            PhinoteStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    let c = CString::new(s).map_err(|_| invalid("output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn json_err(e: serde_json::Error) -> Failure {
    Failure(PhinoteStatus::Validation, format!("invalid JSON: {e}"))
}

fn parse_date(s: Option<&str>) -> Result<Option<NaiveDate>, Failure> {
    s.map(|d| d.parse::<NaiveDate>().map_err(|e| invalid(format!("note_date '{d}': {e}"))))
        .transpose()
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn phinote_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Free with
/// [`phinote_string_free`].
#[no_mangle]
pub extern "C" fn phinote_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phinote_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Shift a date string by `offset_days` keeping its layout. `note_date`
/// (`YYYY-MM-DD`, may be NULL) anchors two-digit years and partial dates.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn phinote_shift_date(
    text: *const c_char,
    offset_days: i64,
    note_date: *const c_char,
    out: *mut *mut c_char,
) -> PhinoteStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let note_date = parse_date(opt_str_arg(note_date, "note_date")?)?;
        let shifted = shift_date_with(&PatternSet::default(), text, offset_days, note_date)
            .map_err(|e| Failure(PhinoteStatus::Validation, format!("cannot shift '{text}': {e}")))?;
        write_string(out, shifted)
    })
}

/// Create an engine from a compiled surrogate database (JSON written by
/// `phinote build-surrogate-db`).
///
/// # Safety
/// `surrogate_db_path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_engine_new(
    surrogate_db_path: *const c_char,
    seed: u64,
    style: PhinoteStyle,
    out: *mut *mut PhinoteDeidEngine,
) -> PhinoteStatus {
    guard(|| {
        let path = str_arg(surrogate_db_path, "surrogate_db_path")?;
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let engine = PhinoteDeidEngine {
            db: SurrogateDatabase::load(Path::new(path))?,
            patterns: PatternSet::default(),
            gazetteer: Gazetteer::default(),
            patients: BTreeMap::new(),
            seed,
            style: match style {
                PhinoteStyle::Surrogate => Style::Surrogate,
                PhinoteStyle::Placeholder => Style::Placeholder,
            },
            date_offset_days: None,
        };
        *out = Box::into_raw(Box::new(engine));
        Ok(())
    })
}

/// Register a patient from one JSON object in the patients-file schema.
///
/// # Safety
/// `engine` must come from [`phinote_deid_engine_new`]; no other call may use it concurrently.
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_engine_add_patient(
    engine: *mut PhinoteDeidEngine,
    patient_json: *const c_char,
) -> PhinoteStatus {
    guard(|| {
        let engine = engine.as_mut().ok_or_else(|| invalid("engine is null"))?;
        let json = str_arg(patient_json, "patient_json")?;
        let patients = phinote::corpus::read_patients(json.as_bytes(), "patient_json")?;
        engine.patients.extend(patients);
        Ok(())
    })
}

/// Load gazetteer files (one entry per line); any path may be NULL.
///
/// # Safety
/// As for [`phinote_deid_engine_add_patient`].
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_engine_set_gazetteer(
    engine: *mut PhinoteDeidEngine,
    names_path: *const c_char,
    locations_path: *const c_char,
    organizations_path: *const c_char,
) -> PhinoteStatus {
    guard(|| {
        let engine = engine.as_mut().ok_or_else(|| invalid("engine is null"))?;
        let path = |p, n| opt_str_arg(p, n).map(|s| s.map(Path::new));
        engine.gazetteer = Gazetteer::load(
            path(names_path, "names_path")?,
            path(locations_path, "locations_path")?,
            path(organizations_path, "organizations_path")?,
        )?;
        Ok(())
    })
}

/// Use `offset_days` for every patient instead of the seeded offset.
///
/// # Safety
/// As for [`phinote_deid_engine_add_patient`].
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_engine_set_date_offset(
    engine: *mut PhinoteDeidEngine,
    offset_days: i64,
) -> PhinoteStatus {
    guard(|| {
        let engine = engine.as_mut().ok_or_else(|| invalid("engine is null"))?;
        if offset_days == 0 || offset_days.abs() > phinote::hips::MAX_DATE_OFFSET {
            return Err(invalid(format!("offset {offset_days} must be nonzero and within ±31")));
        }
        engine.date_offset_days = Some(offset_days);
        Ok(())
    })
}

/// De-identify one note given as a JSON object in the notes-file schema.
/// Writes the rewritten record (`note_id`, `text`, `style`, `replacements`) as JSON.
///
/// # Safety
/// `engine` must be a live engine; `note_json` NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_note(
    engine: *const PhinoteDeidEngine,
    note_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PhinoteStatus {
    guard(|| {
        let engine = ref_arg(engine, "engine")?;
        let note: Note = serde_json::from_str(str_arg(note_json, "note_json")?).map_err(json_err)?;
        let patient = engine.patients.get(&note.patient_id).ok_or_else(|| {
            Failure(PhinoteStatus::Validation, format!("unknown patient '{}'", note.patient_id))
        })?;
        let detectors: Vec<Box<dyn PhiDetector>> = vec![
            Box::new(LookupDetector),
            Box::new(PatternDetector {
                patterns: engine.patterns.clone(),
            }),
            Box::new(GazetteerDetector {
                gazetteer: engine.gazetteer.clone(),
            }),
            Box::new(AgeDetector),
        ];
        let merged = merge_findings(&run_detectors(&detectors, &note, Some(patient)))?;
        let mut map = derive_patient_map(engine.seed, patient, &engine.db);
        if let Some(d) = engine.date_offset_days {
            map = map.with_date_offset(d);
        }
        let ctx = RewriteContext {
            map: &map,
            db: &engine.db,
            patterns: &engine.patterns,
            style: engine.style,
        };
        let deid = apply_surrogates(&note, &merged, &ctx)?;
        write_string(out_json, serde_json::to_string(&deid.to_record()).map_err(json_err)?)
    })
}

/// Destroy an engine. NULL is ignored.
///
/// # Safety
/// `engine` must be NULL or a live engine that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn phinote_deid_engine_free(engine: *mut PhinoteDeidEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Create an annotator from a compiled term index (`phinote build-term-index`).
/// `lexicon_dir` may be NULL for the built-in trigger lexicons.
///
/// # Safety
/// Paths must be NULL (where allowed) or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn phinote_annotator_new(
    term_index_path: *const c_char,
    lexicon_dir: *const c_char,
    window_tokens: usize,
    out: *mut *mut PhinoteAnnotator,
) -> PhinoteStatus {
    guard(|| {
        let index_path = str_arg(term_index_path, "term_index_path")?;
        if out.is_null() {
            return Err(invalid("output pointer is null"));
        }
        if window_tokens == 0 {
            return Err(invalid("window_tokens must be at least 1"));
        }
        let lexicons = match opt_str_arg(lexicon_dir, "lexicon_dir")? {
            Some(dir) => ContextLexicons::load_dir(Path::new(dir), window_tokens)?,
            None => ContextLexicons {
                window_tokens,
                ..ContextLexicons::default()
            },
        };
        let annotator = PhinoteAnnotator {
            index: TermIndex::load(Path::new(index_path))?,
            matcher: lexicons.matcher(),
        };
        *out = Box::into_raw(Box::new(annotator));
        Ok(())
    })
}

/// Annotate one text. Writes a JSON array of NOTE_NLP records numbered from 1.
///
/// # Safety
/// `annotator` must be live; strings NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn phinote_annotate_text(
    annotator: *const PhinoteAnnotator,
    note_id: *const c_char,
    text: *const c_char,
    nlp_date: *const c_char,
    out_json: *mut *mut c_char,
) -> PhinoteStatus {
    guard(|| {
        let annotator = ref_arg(annotator, "annotator")?;
        let note_id = str_arg(note_id, "note_id")?;
        let text = str_arg(text, "text")?;
        let nlp_date = str_arg(nlp_date, "nlp_date")?;
        let mentions = annotate_text(note_id, text, &annotator.index, &annotator.matcher);
        let system = format!("phinote {}", env!("CARGO_PKG_VERSION"));
        let records = emit_note_nlp(&mentions, &system, nlp_date);
        write_string(out_json, serde_json::to_string(&records).map_err(json_err)?)
    })
}

/// Destroy an annotator. NULL is ignored.
///
/// # Safety
/// `annotator` must be NULL or live and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn phinote_annotator_free(annotator: *mut PhinoteAnnotator) {
    if !annotator.is_null() {
        drop(Box::from_raw(annotator));
    }
}
