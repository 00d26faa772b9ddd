//! Vocabulary concept extraction with ConText-style modifiers.

mod context;
mod index;
mod note_nlp;
mod segment;

use serde::{Deserialize, Serialize};

use crate::detect::Span;
use crate::text::{CharMap, Token};

pub use context::{detect_modifiers, ContextLexicons, Modifier, ModifierSet, TriggerMatcher, DEFAULT_WINDOW_TOKENS};
pub use index::{map_to_concept, normalize_term, ConceptRef, PruneReport, TermIndex, TermIndexEntry, MIN_TERM_LEN};
pub use note_nlp::{emit_note_nlp, vocabulary_frequency_report, NoteNlpRecord, VocabularyRow};
pub use segment::{segment, Sentence};

/// One matched vocabulary term; becomes one NOTE_NLP row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMention {
    pub note_id: String,
    pub span: Span,
    pub lexical_variant: String,
    pub concept: ConceptRef,
    pub modifiers: ModifierSet,
    pub snippet: String,
    /// Sentence-local token range `[first, end)` and sentence index, for modifier detection.
    #[serde(skip)]
    pub(crate) tokens: (usize, usize, usize),
}

/// Greedy left-to-right longest match within each sentence. A match
/// consumes its tokens. Modifiers are left empty.
pub fn extract_mentions(note_id: &str, text: &str, sentences: &[Sentence], index: &TermIndex) -> Vec<ConceptMention> {
    let map = CharMap::new(text);
    let mut out = Vec::new();
    for (si, sentence) in sentences.iter().enumerate() {
        let norm: Vec<String> = sentence.tokens.iter().map(Token::normalized).collect();
        let snippet = map.slice(text, sentence.start, sentence.end).to_string();
        let mut i = 0;
        while i < norm.len() {
            match index.longest_prefix(&norm[i..]) {
                Some((n, entry)) => {
                    let span = Span::new(sentence.tokens[i].start, sentence.tokens[i + n - 1].end);
                    let lexical_variant = map.slice(text, span.start, span.end).to_string();
                    if lexical_variant.chars().count() >= MIN_TERM_LEN {
                        out.push(ConceptMention {
                            note_id: note_id.to_string(),
                            span,
                            lexical_variant,
                            concept: map_to_concept(entry),
                            modifiers: ModifierSet::default(),
                            snippet: snippet.clone(),
                            tokens: (si, i, i + n),
                        });
                    }
                    i += n;
                }
                None => i += 1,
            }
        }
    }
    out
}

/// Segment, extract and attach modifiers for one note.
pub fn annotate_text(note_id: &str, text: &str, index: &TermIndex, matcher: &TriggerMatcher) -> Vec<ConceptMention> {
    let sentences = segment(text);
    let mut mentions = extract_mentions(note_id, text, &sentences, index);
    for m in &mut mentions {
        let (si, first, end) = m.tokens;
        m.modifiers = matcher.modifiers(&sentences[si].tokens, first, end);
    }
    mentions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(terms: &[&str]) -> TermIndex {
        TermIndex::build(
            terms
                .iter()
                .enumerate()
                .map(|(i, t)| TermIndexEntry {
                    term: t.to_string(),
                    sui: format!("S{i}"),
                    cui: format!("C{i}"),
                    concept_id: i as i64 + 1,
                    vocabulary_id: "SNOMED".into(),
                    domain_id: "Condition".into(),
                })
                .collect(),
            &[],
        )
    }

    fn variants(text: &str, terms: &[&str]) -> Vec<String> {
        let sentences = segment(text);
        extract_mentions("n", text, &sentences, &index(terms))
            .into_iter()
            .map(|m| m.lexical_variant)
            .collect()
    }

    #[test]
    fn simple_and_capitalized() {
        assert_eq!(variants("patient has fever", &["fever"]), ["fever"]);
        assert_eq!(variants("Fever resolved.", &["fever"]), ["Fever"]);
    }

    #[test]
    fn longest_match_consumes() {
        assert_eq!(variants("chest pain", &["chest pain", "pain"]), ["chest pain"]);
        assert_eq!(variants("pain in chest, chest pain", &["chest pain", "pain"]), ["pain", "chest pain"]);
    }

    #[test]
    fn no_cross_sentence_matches() {
        assert!(variants("it was the chest. Pain later", &["chest pain"]).is_empty());
    }

    #[test]
    fn annotate_attaches_modifiers_and_snippet() {
        let text = "No fever. Father had stroke.";
        let out = annotate_text("n", text, &index(&["fever", "stroke"]), &ContextLexicons::default().matcher());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].modifiers.to_string(), "polarity_negated");
        assert_eq!(out[0].snippet, "No fever.");
        assert_eq!(out[1].modifiers.to_string(), "experiencer_other,history_of_past");
        assert_eq!(out[1].span, Span::new(21, 27));
    }
}
