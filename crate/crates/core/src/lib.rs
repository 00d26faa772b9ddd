//! De-identification and concept annotation for clinical free text.
//!
//! The de-identification path finds PHI with several independent detectors
//! ([`detect`]), merges their findings into disjoint regions ([`merge`]) and
//! rewrites each region with a consistent surrogate or placeholder
//! ([`hips`]). The annotation path ([`annotate`]) finds vocabulary terms by
//! longest match, attaches negation/history/experiencer modifiers and emits
//! NOTE_NLP-shaped records. [`pipeline`] composes both into deterministic
//! runs with quality gates and provenance manifests.

pub mod annotate;
pub mod corpus;
pub mod dates;
pub mod detect;
pub mod error;
pub mod hash;
pub mod hips;
pub mod jsonl;
pub mod merge;
pub mod pipeline;
pub mod qc;
pub mod text;

pub use error::{Error, Result};
