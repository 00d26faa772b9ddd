use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Note, PhiCategory};
use crate::detect::{PatternSet, Span};
use crate::error::{Error, Result};
use crate::merge::MergedFinding;
use crate::text::{normalize, tokenize, CharMap};

use super::db::SurrogateDatabase;
use super::patient_map::{NameRole, PatientSurrogateMap};

/// Replacement text for ages above 89.
pub const AGE_OVER_89: &str = "90+";

/// Used when a detected date cannot be shifted.
pub const DATE_FALLBACK: &str = "[**DATE]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// Realistic surrogates (hiding in plain sight).
    #[default]
    Surrogate,
    /// Typed `[**...]` placeholders.
    Placeholder,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Surrogate => "surrogate",
            Style::Placeholder => "placeholder",
        })
    }
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "surrogate" => Ok(Style::Surrogate),
            "placeholder" => Ok(Style::Placeholder),
            other => Err(format!("unknown style '{other}' (expected surrogate or placeholder)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    /// Span in the original text.
    pub span: Span,
    pub replacement: String,
    pub category: PhiCategory,
    /// True when a date could not be shifted and was redacted instead.
    pub date_fallback: bool,
}

/// A rewritten note. Replacements reference original-text offsets, sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeidNote {
    pub note_id: String,
    pub text: String,
    pub replacements: Vec<Replacement>,
    pub style: Style,
}

/// Serialized form: spans and categories only, never the source values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeidNoteRecord {
    pub note_id: String,
    pub text: String,
    pub style: Style,
    pub replacements: Vec<ReplacementRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementRecord {
    pub start: usize,
    pub end: usize,
    pub category: PhiCategory,
}

impl DeidNote {
    pub fn to_record(&self) -> DeidNoteRecord {
        DeidNoteRecord {
            note_id: self.note_id.clone(),
            text: self.text.clone(),
            style: self.style,
            replacements: self
                .replacements
                .iter()
                .map(|r| ReplacementRecord {
                    start: r.span.start,
                    end: r.span.end,
                    category: r.category,
                })
                .collect(),
        }
    }

    /// Re-apply the replacements to `original`.
    pub fn apply_to(&self, original: &str) -> String {
        apply_replacements(original, &self.replacements)
    }
}

fn apply_replacements(original: &str, replacements: &[Replacement]) -> String {
    let map = CharMap::new(original);
    let mut out = String::with_capacity(original.len());
    let mut cursor = 0;
    for r in replacements {
        out.push_str(map.slice(original, cursor, r.span.start));
        out.push_str(&r.replacement);
        cursor = r.span.end;
    }
    out.push_str(map.slice(original, cursor, map.char_count()));
    out
}

fn placeholder(category: PhiCategory) -> &'static str {
    match category {
        PhiCategory::PatientName => "[**PAT-LN]",
        PhiCategory::ProviderName => "[**DR-LN]",
        PhiCategory::OtherName => "[**NAME]",
        PhiCategory::Date => DATE_FALLBACK,
        PhiCategory::AgeOver89 => AGE_OVER_89,
        PhiCategory::MRN => "[**MRN]",
        PhiCategory::SSN => "[**SSN]",
        PhiCategory::Phone => "[**PHONE]",
        PhiCategory::Email => "[**EMAIL]",
        PhiCategory::IPAddress => "[**IP]",
        PhiCategory::URL => "[**URL]",
        PhiCategory::Location => "[**LOCATION]",
        PhiCategory::Organization => "[**ORGANIZATION]",
    }
}

fn name_placeholder(category: PhiCategory, role: NameRole) -> &'static str {
    match (category, role) {
        (PhiCategory::PatientName, NameRole::Given) => "[**PAT-FN]",
        (PhiCategory::PatientName, NameRole::Surname) => "[**PAT-LN]",
        (PhiCategory::ProviderName, NameRole::Given) => "[**DR-FN]",
        (PhiCategory::ProviderName, NameRole::Surname) => "[**DR-LN]",
        _ => "[**NAME]",
    }
}

/// Copy the letter case of `like` (all upper, all lower, or as-is) onto `value`.
fn match_case(value: &str, like: &str) -> String {
    let letters: Vec<char> = like.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        value.to_uppercase()
    } else if !letters.is_empty() && letters.iter().all(|c| c.is_lowercase()) {
        value.to_lowercase()
    } else {
        value.to_string()
    }
}

/// Everything the rewriter needs besides the note and its findings.
pub struct RewriteContext<'a> {
    pub map: &'a PatientSurrogateMap,
    pub db: &'a SurrogateDatabase,
    pub patterns: &'a PatternSet,
    pub style: Style,
}

impl RewriteContext<'_> {
    fn rewrite_name(&self, category: PhiCategory, original: &str) -> String {
        let tokens = tokenize(original);
        if tokens.is_empty() {
            return placeholder(category).to_string();
        }
        if self.style == Style::Placeholder && category == PhiCategory::OtherName {
            return placeholder(category).to_string();
        }
        let chars: Vec<char> = original.chars().collect();
        let mut out = String::new();
        let mut cursor = 0;
        for (i, tok) in tokens.iter().enumerate() {
            out.extend(&chars[cursor..tok.start]);
            let norm = tok.normalized();
            let role = self.map.role_of(category, &norm, i, tokens.len());
            match self.style {
                Style::Placeholder => out.push_str(name_placeholder(category, role)),
                Style::Surrogate => {
                    let s = self.map.surrogate_name(category, role, &norm, self.db);
                    out.push_str(&match_case(&s, &tok.text));
                }
            }
            cursor = tok.end;
        }
        out.extend(&chars[cursor..]);
        out
    }

    fn rewrite_date(&self, original: &str, note: &Note) -> Option<String> {
        let parsed = self.patterns.parse_date(original, note.note_date)?;
        let shifted = parsed.shift(self.map.date_offset_days, note.note_date).ok()?;
        Some(match self.style {
            Style::Surrogate => shifted,
            Style::Placeholder => format!("[**{shifted}]"),
        })
    }

    fn rewrite(&self, note: &Note, category: PhiCategory, original: &str) -> (String, bool) {
        use PhiCategory::*;
        let out = match (category, self.style) {
            (PatientName | ProviderName | OtherName, _) => self.rewrite_name(category, original),
            (Date, _) => {
                return match self.rewrite_date(original, note) {
                    Some(s) => (s, false),
                    None => (DATE_FALLBACK.to_string(), true),
                }
            }
            (AgeOver89, _) => AGE_OVER_89.to_string(),
            (Location, Style::Surrogate) => self.map.surrogate_address(&normalize(original), self.db),
            (MRN | SSN | Phone | Email | IPAddress | URL, Style::Surrogate) => self.map.synthetic_value(category, original),
            _ => placeholder(category).to_string(),
        };
        (out, false)
    }
}

/// Rewrite `note`, replacing each merged finding and leaving all other text untouched.
pub fn apply_surrogates(note: &Note, merged: &[MergedFinding], ctx: &RewriteContext<'_>) -> Result<DeidNote> {
    let map = CharMap::new(&note.text);
    let mut previous_end = 0;
    let mut replacements = Vec::with_capacity(merged.len());
    for m in merged {
        if m.span.is_empty() || m.span.start < previous_end || m.span.end > map.char_count() {
            return Err(Error::Contract(format!(
                "merged findings for note '{}' must be sorted, disjoint and in bounds (at {:?})",
                note.note_id, m.span
            )));
        }
        previous_end = m.span.end;
        let original = map.slice(&note.text, m.span.start, m.span.end);
        let (replacement, date_fallback) = ctx.rewrite(note, m.category, original);
        replacements.push(Replacement {
            span: m.span,
            replacement,
            category: m.category,
            date_fallback,
        });
    }
    Ok(DeidNote {
        note_id: note.note_id.clone(),
        text: apply_replacements(&note.text, &replacements),
        replacements,
        style: ctx.style,
    })
}
