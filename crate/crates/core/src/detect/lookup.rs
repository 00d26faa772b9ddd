use crate::corpus::{Note, PatientRecord};
use crate::text::{char_len, tokenize, CharMap, NormalizedText};

use super::{DetectionMethod, PhiDetector, PhiFinding, Span};

/// Identifier values and name tokens shorter than this (in normalized chars) are not searched.
pub const MIN_LOOKUP_LEN: usize = 2;

/// Every whole-word, case-insensitive, whitespace-collapsed occurrence of the
/// patient's identifier values. Name identifiers are also matched token by
/// token so a surname alone ("Mr. Smith") is caught.
pub fn detect_known_phi(note: &Note, patient: &PatientRecord) -> Vec<PhiFinding> {
    let normalized = NormalizedText::new(&note.text);
    let map = CharMap::new(&note.text);
    let mut findings = Vec::new();
    for (category, value, norm) in patient.normalized_identifiers() {
        let mut needles = vec![norm.to_string()];
        if category.is_name() {
            let tokens = tokenize(norm);
            if tokens.len() > 1 {
                needles.extend(tokens.into_iter().map(|t| t.text));
            }
        }
        for needle in needles {
            if char_len(&needle) < MIN_LOOKUP_LEN {
                continue;
            }
            for (start, end) in normalized.find_all(&needle) {
                let mut f = PhiFinding::at(note, &map, Span::new(start, end), category, DetectionMethod::Lookup);
                f.source_value = value.to_string();
                findings.push(f);
            }
        }
    }
    findings.sort_by(|a, b| (a.span, a.category).cmp(&(b.span, b.category)));
    findings.dedup_by(|a, b| a.span == b.span && a.category == b.category);
    findings
}

#[derive(Debug, Default, Clone, Copy)]
pub struct LookupDetector;

impl PhiDetector for LookupDetector {
    fn name(&self) -> &str {
        "lookup"
    }

    fn method(&self) -> DetectionMethod {
        DetectionMethod::Lookup
    }

    fn detect(&self, note: &Note, patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
        patient.map(|p| detect_known_phi(note, p)).unwrap_or_default()
    }
}
