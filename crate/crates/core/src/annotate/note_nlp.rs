use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ConceptMention;

/// One OMOP NOTE_NLP row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteNlpRecord {
    pub note_nlp_id: u64,
    pub note_id: String,
    /// Char offset of the mention start in the note text.
    pub offset: usize,
    pub lexical_variant: String,
    pub note_nlp_concept_id: i64,
    pub snippet: String,
    pub term_modifiers: String,
    pub nlp_system: String,
    pub nlp_date: String,
}

/// Number mentions from 1 after ordering by (note_id, offset).
pub fn emit_note_nlp(mentions: &[ConceptMention], nlp_system: &str, nlp_date: &str) -> Vec<NoteNlpRecord> {
    let mut order: Vec<&ConceptMention> = mentions.iter().collect();
    order.sort_by(|a, b| (&a.note_id, a.span.start, a.span.end).cmp(&(&b.note_id, b.span.start, b.span.end)));
    order
        .into_iter()
        .zip(1u64..)
        .map(|(m, id)| NoteNlpRecord {
            note_nlp_id: id,
            note_id: m.note_id.clone(),
            offset: m.span.start,
            lexical_variant: m.lexical_variant.clone(),
            note_nlp_concept_id: m.concept.concept_id,
            snippet: m.snippet.clone(),
            term_modifiers: m.modifiers.to_string(),
            nlp_system: nlp_system.to_string(),
            nlp_date: nlp_date.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyRow {
    pub vocabulary_id: String,
    pub total: usize,
    pub total_percent: f64,
    pub unique_concepts: usize,
    pub unique_percent: f64,
}

/// Mention and distinct-concept counts per vocabulary, largest distinct-concept count first.
pub fn vocabulary_frequency_report(mentions: &[ConceptMention]) -> Vec<VocabularyRow> {
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    let mut concepts: BTreeMap<&str, BTreeSet<i64>> = BTreeMap::new();
    for m in mentions {
        *totals.entry(&m.concept.vocabulary_id).or_default() += 1;
        concepts.entry(&m.concept.vocabulary_id).or_default().insert(m.concept.concept_id);
    }
    let grand_total = mentions.len();
    let grand_unique: usize = concepts.values().map(BTreeSet::len).sum();
    let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let mut rows: Vec<VocabularyRow> = totals
        .into_iter()
        .map(|(vocab, total)| {
            let unique = concepts[vocab].len();
            VocabularyRow {
                vocabulary_id: vocab.to_string(),
                total,
                total_percent: pct(total, grand_total),
                unique_concepts: unique,
                unique_percent: pct(unique, grand_unique),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.unique_concepts
            .cmp(&a.unique_concepts)
            .then(b.total.cmp(&a.total))
            .then(a.vocabulary_id.cmp(&b.vocabulary_id))
    });
    rows
}
