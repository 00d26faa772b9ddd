use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{Note, PatientRecord};
use crate::error::{Error, Result};
use crate::jsonl;

use super::{DetectionMethod, PhiDetector, PhiFinding};

/// Findings produced by an out-of-process recognizer and exchanged as
/// JSONL in the [`PhiFinding`] schema. Every finding is reported as `NER`.
#[derive(Debug, Clone, Default)]
pub struct ExternalFindings {
    by_note: HashMap<String, Vec<PhiFinding>>,
}

impl ExternalFindings {
    pub fn from_findings(findings: impl IntoIterator<Item = PhiFinding>) -> Self {
        let mut by_note: HashMap<String, Vec<PhiFinding>> = HashMap::new();
        for mut f in findings {
            f.method = DetectionMethod::NER;
            by_note.entry(f.note_id.clone()).or_default().push(f);
        }
        for list in by_note.values_mut() {
            list.sort_by(|a, b| (a.span, a.category).cmp(&(b.span, b.category)));
        }
        ExternalFindings { by_note }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let records: Vec<(usize, PhiFinding)> = jsonl::read_file(path)?;
        Ok(Self::from_findings(records.into_iter().map(|(_, f)| f)))
    }

    /// Every finding must name a known note and match that note's text at its span.
    pub fn validate(&self, notes: &[Note]) -> Result<()> {
        let texts: HashMap<&str, &str> = notes.iter().map(|n| (n.note_id.as_str(), n.text.as_str())).collect();
        for (note_id, findings) in &self.by_note {
            let Some(text) = texts.get(note_id.as_str()) else {
                continue;
            };
            if let Some(bad) = findings.iter().find(|f| !f.is_valid_for(text)) {
                return Err(Error::Contract(format!(
                    "external finding {:?} does not match note '{note_id}'",
                    bad.span
                )));
            }
        }
        Ok(())
    }
}

impl PhiDetector for ExternalFindings {
    fn name(&self) -> &str {
        "external-ner"
    }

    fn method(&self) -> DetectionMethod {
        DetectionMethod::NER
    }

    fn detect(&self, note: &Note, _patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
        self.by_note.get(&note.note_id).cloned().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PhiCategory;
    use crate::detect::Span;

    fn finding(note_id: &str, start: usize, end: usize, text: &str) -> PhiFinding {
        PhiFinding {
            note_id: note_id.into(),
            span: Span::new(start, end),
            category: PhiCategory::Location,
            method: DetectionMethod::Pattern,
            matched_text: text.into(),
            source_value: String::new(),
            date: None,
        }
    }

    #[test]
    fn findings_route_by_note_and_become_ner() {
        let ext = ExternalFindings::from_findings([finding("a", 5, 11, "Boston"), finding("b", 0, 1, "x")]);
        let note = Note::new("a", "p", "from Boston");
        ext.validate(std::slice::from_ref(&note)).unwrap();
        let got = ext.detect(&note, None);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].method, DetectionMethod::NER);
    }

    #[test]
    fn mismatched_text_is_contract_error() {
        let ext = ExternalFindings::from_findings([finding("a", 0, 6, "Boston")]);
        let note = Note::new("a", "p", "from Boston");
        assert!(matches!(ext.validate(&[note]), Err(Error::Contract(_))));
    }
}
