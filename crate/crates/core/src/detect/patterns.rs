use std::path::Path;

use chrono::{Datelike, NaiveDate};
use regex::Regex;

use crate::corpus::{Note, PatientRecord, PhiCategory};
use crate::dates::DateMatch;
use crate::error::{Error, Result};
use crate::text::CharMap;

use super::{DetectionMethod, PhiDetector, PhiFinding, Span};

/// The pattern set shipped with the crate.
pub const DEFAULT_PATTERNS: &str = include_str!("../../data/patterns.tsv");

#[derive(Debug, Clone)]
struct PatternEntry {
    name: String,
    category: PhiCategory,
    regex: Regex,
}

/// An ordered, validated set of category-tagged regular expressions.
#[derive(Debug, Clone)]
pub struct PatternSet {
    entries: Vec<PatternEntry>,
}

impl Default for PatternSet {
    fn default() -> Self {
        PatternSet::parse(DEFAULT_PATTERNS, "builtin patterns").expect("builtin pattern set is valid")
    }
}

impl PatternSet {
    /// Parse `name<TAB>category<TAB>regex` lines; `#` starts a comment line.
    pub fn parse(source: &str, source_name: &str) -> Result<PatternSet> {
        let mut entries: Vec<PatternEntry> = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(name), Some(category), Some(pattern)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(source_name, line_no, "expected name<TAB>category<TAB>regex"));
            };
            let category: PhiCategory = category.trim().parse().map_err(|e: String| Error::parse(source_name, line_no, e))?;
            let regex = Regex::new(pattern).map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
            let groups: Vec<&str> = regex.capture_names().flatten().collect();
            if category == PhiCategory::Date {
                let has_month = groups.contains(&"month") || groups.contains(&"month_name");
                if !has_month || !groups.contains(&"day") {
                    return Err(Error::parse(
                        source_name,
                        line_no,
                        format!("date pattern '{name}' needs `month` or `month_name` and `day` groups"),
                    ));
                }
            }
            if entries.iter().any(|e| e.name == name) {
                return Err(Error::parse(source_name, line_no, format!("duplicate pattern name '{name}'")));
            }
            entries.push(PatternEntry {
                name: name.to_string(),
                category,
                regex,
            });
        }
        Ok(PatternSet { entries })
    }

    pub fn load(path: &Path) -> Result<PatternSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PatternSet::parse(&text, &path.display().to_string())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Parse `text` as a whole against the date patterns, first match wins.
    pub fn parse_date(&self, text: &str, note_date: Option<NaiveDate>) -> Option<DateMatch> {
        let anchor = note_date.map(|d| d.year());
        self.entries
            .iter()
            .filter(|e| e.category == PhiCategory::Date)
            .find_map(|e| {
                let caps = e.regex.captures(text)?;
                let whole = caps.get(0)?;
                if whole.start() != 0 || whole.end() != text.len() {
                    return None;
                }
                DateMatch::from_captures(&e.regex, &caps, anchor)
            })
    }

    /// Leftmost non-overlapping matches across the whole set.
    pub fn find(&self, note: &Note) -> Vec<PhiFinding> {
        let map = CharMap::new(&note.text);
        let anchor = note.note_date.map(|d| d.year());
        // (char span, entry index, date parts)
        let mut candidates = Vec::new();
        for (idx, entry) in self.entries.iter().enumerate() {
            for caps in entry.regex.captures_iter(&note.text) {
                let m = caps.name("phi").or_else(|| caps.get(0)).expect("group 0 always present");
                if m.start() == m.end() {
                    continue;
                }
                let span = Span::new(map.to_char(m.start()), map.to_char(m.end()));
                let date = if entry.category == PhiCategory::Date {
                    DateMatch::from_captures(&entry.regex, &caps, anchor).map(|d| d.parts())
                } else {
                    None
                };
                candidates.push((span, idx, date));
            }
        }
        candidates.sort_by(|a, b| {
            a.0.start
                .cmp(&b.0.start)
                .then(b.0.len().cmp(&a.0.len()))
                .then(a.1.cmp(&b.1))
        });
        let mut out: Vec<PhiFinding> = Vec::new();
        let mut frontier = 0;
        for (span, idx, date) in candidates {
            if span.start < frontier {
                continue;
            }
            frontier = span.end;
            let mut f = PhiFinding::at(note, &map, span, self.entries[idx].category, DetectionMethod::Pattern);
            f.date = date;
            out.push(f);
        }
        out
    }
}

pub fn detect_patterns(note: &Note, patterns: &PatternSet) -> Vec<PhiFinding> {
    patterns.find(note)
}

#[derive(Debug, Clone, Default)]
pub struct PatternDetector {
    pub patterns: PatternSet,
}

impl PhiDetector for PatternDetector {
    fn name(&self) -> &str {
        "pattern"
    }

    fn method(&self) -> DetectionMethod {
        DetectionMethod::Pattern
    }

    fn detect(&self, note: &Note, _patient: Option<&PatientRecord>) -> Vec<PhiFinding> {
        self.patterns.find(note)
    }
}
