//! Quality gates checked between pipeline stages.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotate::{ModifierSet, NoteNlpRecord};
use crate::corpus::{Note, PatientRecord, PhiCategory};
use crate::detect::PatternSet;
use crate::hips::DeidNote;
use crate::text::{char_len, tokenize, CharMap, NormalizedText};

/// Identifier values (and name tokens) shorter than this are not re-checked.
pub const MIN_RESIDUAL_LEN: usize = 4;
pub const MAX_GATE_SAMPLES: usize = 20;

pub const G1_RESIDUAL_PHI: &str = "g1_residual_phi";
pub const G2_SPAN_SANITY: &str = "g2_span_sanity";
pub const G3_DATE_SANITY: &str = "g3_date_sanity";
pub const G4_ANNOTATION_SANITY: &str = "g4_annotation_sanity";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub gate: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: usize,
    /// At most [`MAX_GATE_SAMPLES`] descriptions. They cite note ids and
    /// categories, never the identifier values themselves.
    pub samples: Vec<String>,
}

impl GateResult {
    fn new(gate: &str) -> GateResult {
        GateResult {
            gate: gate.to_string(),
            passed: true,
            checked: 0,
            failures: 0,
            samples: Vec::new(),
        }
    }

    fn fail(&mut self, sample: String) {
        self.passed = false;
        self.failures += 1;
        if self.samples.len() < MAX_GATE_SAMPLES {
            self.samples.push(sample);
        }
    }
}

/// Strings g1 searches for: whole values and, for names, single tokens,
/// each with normalized length of at least [`MIN_RESIDUAL_LEN`].
pub fn residual_candidates(patient: &PatientRecord) -> Vec<(PhiCategory, usize, String)> {
    let mut out = Vec::new();
    for (i, (category, _, norm)) in patient.normalized_identifiers().enumerate() {
        if char_len(norm) >= MIN_RESIDUAL_LEN {
            out.push((category, i, norm.to_string()));
        }
        if category.is_name() {
            for t in tokenize(norm) {
                if char_len(&t.text) >= MIN_RESIDUAL_LEN && t.text != norm {
                    out.push((category, i, t.text));
                }
            }
        }
    }
    out
}

/// g1: no identifier of the note's patient survives in the rewritten text.
/// `deid[i]` must be the rewrite of `originals[i]`.
pub fn residual_phi_gate(deid: &[DeidNote], originals: &[Note], patients: &BTreeMap<String, PatientRecord>) -> GateResult {
    let mut g = GateResult::new(G1_RESIDUAL_PHI);
    let mut cache: BTreeMap<&str, Vec<(PhiCategory, usize, String)>> = BTreeMap::new();
    for (d, note) in deid.iter().zip(originals) {
        g.checked += 1;
        let Some(patient) = patients.get(&note.patient_id) else {
            g.fail(format!("note {}: unknown patient", d.note_id));
            continue;
        };
        let candidates = cache.entry(note.patient_id.as_str()).or_insert_with(|| residual_candidates(patient));
        let text = NormalizedText::new(&d.text);
        for (category, index, value) in candidates.iter() {
            if text.contains_word(value) {
                g.fail(format!("note {}: {} identifier #{} found in output", d.note_id, category, index));
            }
        }
    }
    g
}

/// g2: replacement spans are sorted, disjoint and inside the original text,
/// and replaying them reproduces the output text.
pub fn span_sanity_gate(deid: &[DeidNote], originals: &[Note]) -> GateResult {
    let mut g = GateResult::new(G2_SPAN_SANITY);
    for (d, note) in deid.iter().zip(originals) {
        g.checked += 1;
        let len = char_len(&note.text);
        let mut previous_end = 0;
        let mut ok = true;
        for r in &d.replacements {
            if r.span.is_empty() || r.span.start < previous_end || r.span.end > len {
                g.fail(format!("note {}: replacement {:?} overlaps or is out of bounds", d.note_id, r.span));
                ok = false;
                break;
            }
            previous_end = r.span.end;
        }
        if ok && d.apply_to(&note.text) != d.text {
            g.fail(format!("note {}: replacements do not reproduce the output text", d.note_id));
        }
    }
    g
}

fn strip_placeholder(s: &str) -> &str {
    s.strip_prefix("[**").and_then(|r| r.strip_suffix(']')).unwrap_or(s)
}

/// g3: every shifted date parses back to a valid calendar date.
pub fn date_sanity_gate(deid: &[DeidNote], originals: &[Note], patterns: &PatternSet) -> GateResult {
    let mut g = GateResult::new(G3_DATE_SANITY);
    for (d, note) in deid.iter().zip(originals) {
        for r in d.replacements.iter().filter(|r| r.category == PhiCategory::Date && !r.date_fallback) {
            g.checked += 1;
            let shifted = strip_placeholder(&r.replacement);
            let valid = patterns
                .parse_date(shifted, note.note_date)
                .is_some_and(|m| m.resolve(note.note_date).is_ok());
            if !valid {
                g.fail(format!("note {}: date at {:?} does not parse after shifting", d.note_id, r.span));
            }
        }
    }
    g
}

/// g4: mentions within a note do not overlap and every `term_modifiers` parses.
/// `texts` maps note ids to the annotated text.
pub fn annotation_sanity_gate(records: &[NoteNlpRecord], texts: &BTreeMap<String, String>) -> GateResult {
    let mut g = GateResult::new(G4_ANNOTATION_SANITY);
    let mut by_note: BTreeMap<&str, Vec<&NoteNlpRecord>> = BTreeMap::new();
    for r in records {
        g.checked += 1;
        if ModifierSet::from_str(&r.term_modifiers).is_err() {
            g.fail(format!("record {}: unparseable term_modifiers", r.note_nlp_id));
        }
        by_note.entry(&r.note_id).or_default().push(r);
    }
    for (note_id, mut rs) in by_note {
        rs.sort_by_key(|r| r.offset);
        let text = texts.get(note_id);
        let map = text.map(|t| CharMap::new(t));
        let mut previous_end = 0;
        for r in rs {
            let end = r.offset + char_len(&r.lexical_variant);
            if r.offset < previous_end {
                g.fail(format!("record {}: overlaps the previous mention in note {note_id}", r.note_nlp_id));
            }
            if let (Some(t), Some(m)) = (text, &map) {
                if end > m.char_count() || m.slice(t, r.offset, end) != r.lexical_variant {
                    g.fail(format!("record {}: offset does not match note {note_id}", r.note_nlp_id));
                }
            }
            previous_end = previous_end.max(end);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sex;
    use crate::detect::Span;
    use crate::hips::{Replacement, Style};

    fn patient() -> PatientRecord {
        PatientRecord::new(
            "p1",
            Sex::Male,
            vec![
                (PhiCategory::PatientName, "Jonathan Smith".into()),
                (PhiCategory::MRN, "123".into()),
            ],
        )
    }

    fn deid(text: &str, replacements: Vec<Replacement>) -> DeidNote {
        DeidNote {
            note_id: "n1".into(),
            text: text.into(),
            replacements,
            style: Style::Surrogate,
        }
    }

    fn rep(start: usize, end: usize, replacement: &str, category: PhiCategory) -> Replacement {
        Replacement {
            span: Span::new(start, end),
            replacement: replacement.into(),
            category,
            date_fallback: false,
        }
    }

    #[test]
    fn candidates_respect_min_length() {
        let c: Vec<String> = residual_candidates(&patient()).into_iter().map(|c| c.2).collect();
        assert_eq!(c, ["jonathan smith", "jonathan", "smith"]);
    }

    #[test]
    fn g1_catches_reinserted_surname() {
        let patients = BTreeMap::from([("p1".to_string(), patient())]);
        let original = Note::new("n1", "p1", "Mr. Smith seen");
        let clean = residual_phi_gate(&[deid("Mr. Jones seen", vec![])], &[original.clone()], &patients);
        assert!(clean.passed);
        let bad = residual_phi_gate(&[deid("Mr. Jones seen, Smith", vec![])], &[original], &patients);
        assert!(!bad.passed);
        assert!(bad.samples[0].contains("n1"));
        assert!(!bad.samples[0].to_lowercase().contains("smith"));
    }

    #[test]
    fn g1_matches_whole_words_only() {
        let patients = BTreeMap::from([("p1".to_string(), patient())]);
        let note = Note::new("n1", "p1", "x");
        assert!(residual_phi_gate(&[deid("Smithfield road", vec![])], &[note], &patients).passed);
    }

    #[test]
    fn g2_detects_overlap_and_mismatch() {
        let note = Note::new("n1", "p1", "Mr. Smith on 5/13/10");
        let good = deid("Mr. Jones on 5/31/10", vec![rep(4, 9, "Jones", PhiCategory::PatientName), rep(13, 20, "5/31/10", PhiCategory::Date)]);
        assert!(span_sanity_gate(&[good], &[note.clone()]).passed);
        let overlap = deid("x", vec![rep(4, 9, "Jones", PhiCategory::PatientName), rep(8, 20, "5/31/10", PhiCategory::Date)]);
        assert!(!span_sanity_gate(&[overlap], &[note.clone()]).passed);
        let out_of_bounds = deid("x", vec![rep(4, 99, "Jones", PhiCategory::PatientName)]);
        assert!(!span_sanity_gate(&[out_of_bounds], &[note.clone()]).passed);
        let wrong_text = deid("Mr. Brown on 5/31/10", vec![rep(4, 9, "Jones", PhiCategory::PatientName)]);
        assert!(!span_sanity_gate(&[wrong_text], &[note]).passed);
    }

    #[test]
    fn g3_checks_shifted_dates() {
        let note = Note::new("n1", "p1", "on 5/13/10");
        let patterns = PatternSet::default();
        let ok = deid("on [**5/31/10]", vec![rep(3, 10, "[**5/31/10]", PhiCategory::Date)]);
        let g = date_sanity_gate(&[ok], &[note.clone()], &patterns);
        assert!(g.passed && g.checked == 1);
        let bad = deid("on 2/30/10", vec![rep(3, 10, "2/30/10", PhiCategory::Date)]);
        assert!(!date_sanity_gate(&[bad], &[note], &patterns).passed);
    }

    fn nlp(id: u64, offset: usize, lexical_variant: &str, mods: &str) -> NoteNlpRecord {
        NoteNlpRecord {
            note_nlp_id: id,
            note_id: "n1".into(),
            offset,
            lexical_variant: lexical_variant.into(),
            note_nlp_concept_id: 1,
            snippet: String::new(),
            term_modifiers: mods.into(),
            nlp_system: "t".into(),
            nlp_date: "d".into(),
        }
    }

    #[test]
    fn g4_overlap_and_modifier_parse() {
        let texts = BTreeMap::from([("n1".to_string(), "chest pain and fever".to_string())]);
        let good = [nlp(1, 0, "chest pain", ""), nlp(2, 15, "fever", "polarity_negated")];
        assert!(annotation_sanity_gate(&good, &texts).passed);
        let overlapping = [nlp(1, 0, "chest pain", ""), nlp(2, 6, "pain", "")];
        assert!(!annotation_sanity_gate(&overlapping, &texts).passed);
        let bad_mods = [nlp(1, 15, "fever", "negated")];
        assert!(!annotation_sanity_gate(&bad_mods, &texts).passed);
        let misplaced = [nlp(1, 14, "fever", "")];
        assert!(!annotation_sanity_gate(&misplaced, &texts).passed);
    }

    #[test]
    fn samples_are_capped() {
        let mut g = GateResult::new("x");
        for i in 0..50 {
            g.fail(i.to_string());
        }
        assert_eq!((g.failures, g.samples.len()), (50, MAX_GATE_SAMPLES));
    }
}
