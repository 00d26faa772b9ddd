//! PHI finders. Each detector maps a note (and optionally its patient) to a
//! list of [`PhiFinding`]s over the note's character offsets.

mod age;
mod external;
mod gazetteer;
mod lookup;
mod patterns;

use serde::{Deserialize, Serialize};

use crate::corpus::{Note, PatientRecord, PhiCategory};
use crate::dates::DateParts;
use crate::text::CharMap;

pub use age::{detect_ages, AgeDetector};
pub use external::ExternalFindings;
pub use gazetteer::{detect_ner, Gazetteer, GazetteerDetector};
pub use lookup::{detect_known_phi, LookupDetector, MIN_LOOKUP_LEN};
pub use patterns::{detect_patterns, PatternDetector, PatternSet, DEFAULT_PATTERNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectionMethod {
    Lookup,
    Pattern,
    NER,
}

impl DetectionMethod {
    pub const ALL: [DetectionMethod; 3] = [DetectionMethod::Lookup, DetectionMethod::Pattern, DetectionMethod::NER];

    /// Merge precedence: lower wins.
    pub fn precedence(self) -> u8 {
        match self {
            DetectionMethod::Lookup => 0,
            DetectionMethod::Pattern => 1,
            DetectionMethod::NER => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DetectionMethod::Lookup => "Lookup",
            DetectionMethod::Pattern => "Pattern",
            DetectionMethod::NER => "NER",
        }
    }
}

/// Half-open char range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A typed span located by one detection method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiFinding {
    pub note_id: String,
    pub span: Span,
    pub category: PhiCategory,
    pub method: DetectionMethod,
    pub matched_text: String,
    /// The patient-record value that matched; empty for pattern and NER findings.
    #[serde(default)]
    pub source_value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<DateParts>,
}

impl PhiFinding {
    pub(crate) fn at(
        note: &Note,
        map: &CharMap,
        span: Span,
        category: PhiCategory,
        method: DetectionMethod,
    ) -> PhiFinding {
        PhiFinding {
            note_id: note.note_id.clone(),
            span,
            category,
            method,
            matched_text: map.slice(&note.text, span.start, span.end).to_string(),
            source_value: String::new(),
            date: None,
        }
    }

    /// Checks the span lies in `text` and `matched_text` equals the slice.
    pub fn is_valid_for(&self, text: &str) -> bool {
        let map = CharMap::new(text);
        !self.span.is_empty()
            && self.span.end <= map.char_count()
            && map.slice(text, self.span.start, self.span.end) == self.matched_text
    }
}

/// The behavioural interface every finder implements. Implementations hold
/// no mutable state; identical inputs give identical output.
pub trait PhiDetector: Send + Sync {
    fn name(&self) -> &str;
    fn method(&self) -> DetectionMethod;
    fn detect(&self, note: &Note, patient: Option<&PatientRecord>) -> Vec<PhiFinding>;
}

/// Runs every detector and concatenates their findings in detector order.
pub fn run_detectors(detectors: &[Box<dyn PhiDetector>], note: &Note, patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
    detectors.iter().flat_map(|d| d.detect(note, patient)).collect()
}
