//! Surrogate substitution: the surrogate database, per-patient consistent
//! surrogate maps with date jitter, and note rewriting.

mod db;
mod patient_map;
mod rewrite;

use std::sync::OnceLock;

use chrono::NaiveDate;

use crate::dates::DateShiftError;
use crate::detect::PatternSet;

pub use db::SurrogateDatabase;
pub use patient_map::{date_offset, derive_patient_map, NameRole, PatientSurrogateMap, MAX_DATE_OFFSET};
pub use rewrite::{
    apply_surrogates, DeidNote, DeidNoteRecord, Replacement, ReplacementRecord, RewriteContext, Style, AGE_OVER_89,
    DATE_FALLBACK,
};

fn default_patterns() -> &'static PatternSet {
    static SET: OnceLock<PatternSet> = OnceLock::new();
    SET.get_or_init(PatternSet::default)
}

/// Shift a date string by `offset_days`, keeping its textual format.
/// Partial dates (no year) are anchored on `note_date`'s year.
pub fn shift_date(text_date: &str, offset_days: i64, note_date: Option<NaiveDate>) -> Result<String, DateShiftError> {
    shift_date_with(default_patterns(), text_date, offset_days, note_date)
}

pub fn shift_date_with(
    patterns: &PatternSet,
    text_date: &str,
    offset_days: i64,
    note_date: Option<NaiveDate>,
) -> Result<String, DateShiftError> {
    patterns
        .parse_date(text_date, note_date)
        .ok_or(DateShiftError::Unrecognized)?
        .shift(offset_days, note_date)
}
