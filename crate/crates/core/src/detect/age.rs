use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::{Note, PatientRecord, PhiCategory};
use crate::text::CharMap;

use super::{DetectionMethod, PhiDetector, PhiFinding, Span};

/// Ages up to and including this value are not PHI.
const MAX_UNPROTECTED_AGE: u32 = 89;

fn age_patterns() -> &'static [Regex; 2] {
    static PATTERNS: OnceLock<[Regex; 2]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i)\b(?P<n>[0-9]{1,3})\s*-?\s*(?:years?\b|yrs?\b|y/o\b|y\.\s?o\.?|yo\b)").unwrap(),
            Regex::new(r"(?i)\bage[:\s]\s*(?P<n>[0-9]{1,3})\b").unwrap(),
        ]
    })
}

/// `AgeOver89` findings over the numeral of "<n> years", "<n> y.o." or
/// "age <n>" when n > 89.
pub fn detect_ages(note: &Note) -> Vec<PhiFinding> {
    let map = CharMap::new(&note.text);
    let mut spans = Vec::new();
    for re in age_patterns() {
        for caps in re.captures_iter(&note.text) {
            let n = caps.name("n").expect("pattern has group n");
            if n.as_str().parse::<u32>().is_ok_and(|age| age > MAX_UNPROTECTED_AGE) {
                spans.push(Span::new(map.to_char(n.start()), map.to_char(n.end())));
            }
        }
    }
    spans.sort();
    spans.dedup();
    spans
        .into_iter()
        .map(|s| PhiFinding::at(note, &map, s, PhiCategory::AgeOver89, DetectionMethod::Pattern))
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AgeDetector;

impl PhiDetector for AgeDetector {
    fn name(&self) -> &str {
        "age"
    }

    fn method(&self) -> DetectionMethod {
        DetectionMethod::Pattern
    }

    fn detect(&self, note: &Note, _patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
        detect_ages(note)
    }
}
