use std::collections::HashMap;
use std::path::Path;

use crate::corpus::{Note, PatientRecord, PhiCategory};
use crate::error::{Error, Result};
use crate::text::{char_len, tokenize, CharMap, Token};

use super::{DetectionMethod, PhiDetector, PhiFinding, Span};

/// Dictionary-backed default for the NER finder: names, locations and
/// organizations, each entry stored as its normalized token sequence.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, PhiCategory>,
    max_tokens: usize,
}

/// Separators allowed between the tokens of one multi-word entry.
fn is_joiner(c: char) -> bool {
    c.is_whitespace() || matches!(c, '.' | '-' | '&')
}

fn entry_key(entry: &str) -> Option<(String, usize)> {
    let tokens = tokenize(entry);
    if tokens.is_empty() {
        return None;
    }
    let key = tokens.iter().map(Token::normalized).collect::<Vec<_>>().join(" ");
    Some((key, tokens.len()))
}

impl Gazetteer {
    /// Entries shorter than two characters are skipped. An entry listed in
    /// more than one set keeps the first category in names, locations,
    /// organizations order.
    pub fn new<'a>(
        names: impl IntoIterator<Item = &'a str>,
        locations: impl IntoIterator<Item = &'a str>,
        organizations: impl IntoIterator<Item = &'a str>,
    ) -> Gazetteer {
        let mut g = Gazetteer::default();
        g.extend(names, PhiCategory::OtherName);
        g.extend(locations, PhiCategory::Location);
        g.extend(organizations, PhiCategory::Organization);
        g
    }

    fn extend<'a>(&mut self, entries: impl IntoIterator<Item = &'a str>, category: PhiCategory) {
        for entry in entries {
            if char_len(entry.trim()) < 2 {
                continue;
            }
            if let Some((key, n)) = entry_key(entry) {
                self.entries.entry(key).or_insert(category);
                self.max_tokens = self.max_tokens.max(n);
            }
        }
    }

    /// Load three one-entry-per-line files. A missing path yields an empty set.
    pub fn load(names: Option<&Path>, locations: Option<&Path>, organizations: Option<&Path>) -> Result<Gazetteer> {
        let read = |p: Option<&Path>| -> Result<String> {
            match p {
                Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e)),
                None => Ok(String::new()),
            }
        };
        let (n, l, o) = (read(names)?, read(locations)?, read(organizations)?);
        Ok(Gazetteer::new(n.lines(), l.lines(), o.lines()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest non-overlapping entry matches, scanning left to right.
    pub fn find(&self, note: &Note) -> Vec<PhiFinding> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let map = CharMap::new(&note.text);
        let tokens = tokenize(&note.text);
        let normalized: Vec<String> = tokens.iter().map(Token::normalized).collect();
        let chars: Vec<char> = note.text.chars().collect();
        let joined = |a: &Token, b: &Token| chars[a.end..b.start].iter().all(|c| is_joiner(*c));

        let mut out = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut best: Option<(usize, PhiCategory)> = None;
            let mut key = String::new();
            for j in i..tokens.len().min(i + self.max_tokens) {
                if j > i {
                    if !joined(&tokens[j - 1], &tokens[j]) {
                        break;
                    }
                    key.push(' ');
                }
                key.push_str(&normalized[j]);
                if let Some(cat) = self.entries.get(&key) {
                    best = Some((j, *cat));
                }
            }
            match best {
                Some((j, category)) => {
                    let span = Span::new(tokens[i].start, tokens[j].end);
                    out.push(PhiFinding::at(note, &map, span, category, DetectionMethod::NER));
                    i = j + 1;
                }
                None => i += 1,
            }
        }
        out
    }
}

pub fn detect_ner(note: &Note, gazetteer: &Gazetteer) -> Vec<PhiFinding> {
    gazetteer.find(note)
}

#[derive(Debug, Clone, Default)]
pub struct GazetteerDetector {
    pub gazetteer: Gazetteer,
}

impl PhiDetector for GazetteerDetector {
    fn name(&self) -> &str {
        "gazetteer"
    }

    fn method(&self) -> DetectionMethod {
        DetectionMethod::NER
    }

    fn detect(&self, note: &Note, _patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
        self.gazetteer.find(note)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn found(g: &Gazetteer, text: &str) -> Vec<(PhiCategory, String)> {
        g.find(&Note::new("n", "p", text)).into_iter().map(|f| (f.category, f.matched_text)).collect()
    }

    #[test]
    fn children_names() {
        let g = Gazetteer::new(["Lynn", "David"], [], []);
        assert_eq!(
            found(&g, "children, Lynn and David and Madison"),
            [(PhiCategory::OtherName, "Lynn".into()), (PhiCategory::OtherName, "David".into())]
        );
    }

    #[test]
    fn empty_gazetteer_finds_nothing() {
        assert!(found(&Gazetteer::default(), "Lynn and David").is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let g = Gazetteer::new([], ["York", "New York", "St. Louis"], ["New York Presbyterian"]);
        assert_eq!(
            found(&g, "from New York, transferred to NEW YORK PRESBYTERIAN via St Louis"),
            [
                (PhiCategory::Location, "New York".into()),
                (PhiCategory::Organization, "NEW YORK PRESBYTERIAN".into()),
                (PhiCategory::Location, "St Louis".into()),
            ]
        );
    }

    #[test]
    fn entries_do_not_span_commas() {
        let g = Gazetteer::new(["Lynn David"], [], []);
        assert!(found(&g, "Lynn, David").is_empty());
        assert_eq!(found(&g, "Lynn David").len(), 1);
    }

    #[test]
    fn first_category_wins_on_duplicates() {
        let g = Gazetteer::new(["Madison"], ["Madison"], []);
        assert_eq!(found(&g, "Madison"), [(PhiCategory::OtherName, "Madison".into())]);
    }
}
