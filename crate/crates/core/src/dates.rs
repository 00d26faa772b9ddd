//! Calendar dates found in text: component extraction from pattern captures,
//! shifting, and re-rendering in the original textual format.
//!
//! Date patterns identify their components by named capture groups:
//! `month` (numeric) or `month_name`, `day`, optional `year` (2 or 4
//! digits) and optional `suffix` (ordinal `st`/`nd`/`rd`/`th`). A pattern
//! without a `year` group matches partial dates.

use chrono::{Datelike, Duration, NaiveDate};
use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december",
];

fn month_from_name(name: &str) -> Option<u32> {
    let lower = name.to_lowercase();
    if lower == "sept" {
        return Some(9);
    }
    if lower.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| *m == lower || (lower.len() == 3 && m.starts_with(&lower)))
        .map(|i| i as u32 + 1)
}

/// Calendar components of a matched date. `year` is `None` for partial dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateParts {
    pub year: Option<i32>,
    pub month: u32,
    pub day: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DateShiftError {
    #[error("text is not a recognized date")]
    Unrecognized,
    #[error("components do not form a valid calendar date")]
    InvalidDate,
    #[error("partial date without a note date to anchor its year")]
    MissingNoteDate,
}

/// Resolve a two-digit year: the latest year ending in those digits that is
/// not after the anchor year; without an anchor, 00-49 map to 20xx.
pub fn expand_two_digit_year(yy: i32, anchor_year: Option<i32>) -> i32 {
    match anchor_year {
        Some(anchor) => {
            let century = anchor.div_euclid(100) * 100;
            let candidate = century + yy;
            if candidate > anchor {
                candidate - 100
            } else {
                candidate
            }
        }
        None if yy < 50 => 2000 + yy,
        None => 1900 + yy,
    }
}

/// A date match within some text: the components plus enough layout
/// information to re-render a different date in the same format.
#[derive(Debug, Clone)]
pub struct DateMatch {
    text: String,
    // (byte range within `text`, component) in textual order
    fields: Vec<(std::ops::Range<usize>, Field)>,
    parts: DateParts,
    /// Whether numeric month and day are zero-padded to two digits.
    padded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Month,
    MonthName,
    Day,
    Year,
    Suffix,
}

impl DateMatch {
    /// Build from captures of a date pattern. `caps` must come from matching `text`-containing input;
    /// offsets are taken relative to the whole match.
    pub fn from_captures(re: &Regex, caps: &Captures<'_>, anchor_year: Option<i32>) -> Option<DateMatch> {
        let whole = caps.get(0)?;
        let base = whole.start();
        let mut fields = Vec::new();
        let mut month = None;
        let mut day = None;
        let mut year = None;
        for name in re.capture_names().flatten() {
            let Some(m) = caps.name(name) else { continue };
            let field = match name {
                "month" => {
                    month = m.as_str().parse::<u32>().ok();
                    Field::Month
                }
                "month_name" => {
                    month = month_from_name(m.as_str());
                    Field::MonthName
                }
                "day" => {
                    day = m.as_str().parse::<u32>().ok();
                    Field::Day
                }
                "year" => {
                    let digits = m.as_str();
                    let value: i32 = digits.parse().ok()?;
                    year = Some(if digits.len() <= 2 {
                        expand_two_digit_year(value, anchor_year)
                    } else {
                        value
                    });
                    Field::Year
                }
                "suffix" => Field::Suffix,
                _ => continue,
            };
            fields.push((m.start() - base..m.end() - base, field));
        }
        fields.sort_by_key(|(r, _)| r.start);
        let text = whole.as_str().to_string();
        let padded = infer_padding(re, &text, &fields);
        Some(DateMatch {
            text,
            fields,
            parts: DateParts {
                year,
                month: month?,
                day: day?,
            },
            padded,
        })
    }

    pub fn parts(&self) -> DateParts {
        self.parts
    }

    pub fn is_partial(&self) -> bool {
        self.parts.year.is_none()
    }

    /// Resolve to a calendar date, anchoring partial dates on `note_date`'s year.
    pub fn resolve(&self, note_date: Option<NaiveDate>) -> Result<NaiveDate, DateShiftError> {
        let year = match self.parts.year {
            Some(y) => y,
            None => note_date.ok_or(DateShiftError::MissingNoteDate)?.year(),
        };
        NaiveDate::from_ymd_opt(year, self.parts.month, self.parts.day).ok_or(DateShiftError::InvalidDate)
    }

    /// Render `date` using this match's layout: same separators, padding,
    /// month-name style and year width.
    pub fn render(&self, date: NaiveDate) -> String {
        let mut out = String::with_capacity(self.text.len() + 4);
        let mut cursor = 0;
        for (range, field) in &self.fields {
            out.push_str(&self.text[cursor..range.start]);
            let original = &self.text[range.clone()];
            match field {
                Field::Month => out.push_str(&self.pad(date.month())),
                Field::Day => out.push_str(&self.pad(date.day())),
                Field::Year => {
                    if original.len() <= 2 {
                        out.push_str(&format!("{:02}", date.year().rem_euclid(100)));
                    } else {
                        out.push_str(&date.year().to_string());
                    }
                }
                Field::MonthName => out.push_str(&month_name_like(original, date.month())),
                Field::Suffix => out.push_str(&ordinal_suffix_like(original, date.day())),
            }
            cursor = range.end;
        }
        out.push_str(&self.text[cursor..]);
        out
    }

    /// Shift by `offset_days` and re-render.
    pub fn shift(&self, offset_days: i64, note_date: Option<NaiveDate>) -> Result<String, DateShiftError> {
        let date = self.resolve(note_date)?;
        let shifted = date
            .checked_add_signed(Duration::days(offset_days))
            .ok_or(DateShiftError::InvalidDate)?;
        Ok(self.render(shifted))
    }
}

impl DateMatch {
    fn pad(&self, value: u32) -> String {
        if self.padded {
            format!("{value:02}")
        } else {
            value.to_string()
        }
    }
}

/// A leading zero on either numeric field means padded and a single digit
/// means unpadded. When both fields have two digits without a leading zero
/// ("12/30/2015"), the layout is unpadded if the pattern accepts single-digit
/// fields and padded otherwise ("2006-05-30").
fn infer_padding(re: &Regex, text: &str, fields: &[(std::ops::Range<usize>, Field)]) -> bool {
    let numeric: Vec<&str> = fields
        .iter()
        .filter(|(_, f)| matches!(f, Field::Month | Field::Day))
        .map(|(r, _)| &text[r.clone()])
        .collect();
    if numeric.iter().any(|s| s.len() == 2 && s.starts_with('0')) {
        return true;
    }
    if numeric.is_empty() || numeric.iter().any(|s| s.len() == 1) {
        return false;
    }
    let mut probe = String::new();
    let mut cursor = 0;
    for (range, field) in fields {
        probe.push_str(&text[cursor..range.start]);
        probe.push_str(match field {
            Field::Month | Field::Day => "1",
            _ => &text[range.clone()],
        });
        cursor = range.end;
    }
    probe.push_str(&text[cursor..]);
    let accepts_unpadded = re.find(&probe).is_some_and(|m| m.start() == 0 && m.end() == probe.len());
    !accepts_unpadded
}

fn month_name_like(original: &str, month: u32) -> String {
    let full = MONTHS[month as usize - 1];
    let abbreviated = original.chars().count() <= 4 && !MONTHS.contains(&original.to_lowercase().as_str());
    let name: String = if abbreviated { full.chars().take(3).collect() } else { full.to_string() };
    let all_upper = original.chars().all(|c| c.is_uppercase());
    let first_upper = original.chars().next().is_some_and(char::is_uppercase);
    if all_upper {
        name.to_uppercase()
    } else if first_upper {
        let mut chars = name.chars();
        chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default()
    } else {
        name
    }
}

fn ordinal_suffix_like(original: &str, day: u32) -> String {
    let suffix = match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    if original.chars().all(|c| c.is_uppercase()) {
        suffix.to_uppercase()
    } else {
        suffix.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mdy() -> Regex {
        Regex::new(r"\b(?P<month>1[0-2]|0?[1-9])/(?P<day>3[01]|[12][0-9]|0?[1-9])/(?P<year>[0-9]{4}|[0-9]{2})\b").unwrap()
    }

    fn parse(re: &Regex, s: &str) -> DateMatch {
        let caps = re.captures(s).unwrap();
        DateMatch::from_captures(re, &caps, None).unwrap()
    }

    #[test]
    fn two_digit_years() {
        assert_eq!(expand_two_digit_year(10, None), 2010);
        assert_eq!(expand_two_digit_year(75, None), 1975);
        assert_eq!(expand_two_digit_year(45, Some(2010)), 1945);
        assert_eq!(expand_two_digit_year(10, Some(2010)), 2010);
    }

    #[test]
    fn preserves_padding_and_width() {
        let re = mdy();
        assert_eq!(parse(&re, "05/13/2010").shift(18, None).unwrap(), "05/31/2010");
        assert_eq!(parse(&re, "5/13/10").shift(18, None).unwrap(), "5/31/10");
        assert_eq!(parse(&re, "12/31/2019").shift(1, None).unwrap(), "1/1/2020");
        assert_eq!(parse(&re, "12/31/99").shift(1, None).unwrap(), "1/1/00");
        assert_eq!(parse(&re, "10/05/2010").shift(-10, None).unwrap(), "09/25/2010");
    }

    #[test]
    fn two_digit_fields_follow_what_the_pattern_accepts() {
        let iso = Regex::new(r"\b(?P<year>[0-9]{4})-(?P<month>1[0-2]|0[1-9])-(?P<day>3[01]|[12][0-9]|0[1-9])\b").unwrap();
        assert_eq!(parse(&iso, "2006-05-30").shift(-27, None).unwrap(), "2006-05-03");
        assert_eq!(parse(&iso, "2006-12-30").shift(3, None).unwrap(), "2007-01-02");
        assert_eq!(parse(&mdy(), "12/30/2015").shift(5, None).unwrap(), "1/4/2016");
    }

    #[test]
    fn month_names_keep_style() {
        let re = Regex::new(r"(?P<month_name>[A-Za-z]+)\.? (?P<day>[0-9]{1,2})(?P<suffix>(?i:st|nd|rd|th))?, (?P<year>[0-9]{4})").unwrap();
        assert_eq!(parse(&re, "May 13, 2010").shift(18, None).unwrap(), "May 31, 2010");
        assert_eq!(parse(&re, "JAN 30th, 2010").shift(2, None).unwrap(), "FEB 1st, 2010");
        assert_eq!(parse(&re, "MAR 1ST, 2010").shift(1, None).unwrap(), "MAR 2ND, 2010");
        assert_eq!(parse(&re, "Sept 29, 2010").shift(3, None).unwrap(), "Oct 2, 2010");
        assert_eq!(parse(&re, "december 22nd, 2010").shift(1, None).unwrap(), "december 23rd, 2010");
    }

    #[test]
    fn invalid_and_partial_dates() {
        let re = mdy();
        assert_eq!(parse(&re, "2/30/19").shift(1, None), Err(DateShiftError::InvalidDate));
        let partial = Regex::new(r"(?P<month>[0-9]{1,2})/(?P<day>[0-9]{1,2})").unwrap();
        let m = parse(&partial, "5/7");
        assert!(m.is_partial());
        assert_eq!(m.shift(3, None), Err(DateShiftError::MissingNoteDate));
        let anchor = NaiveDate::from_ymd_opt(2010, 6, 1);
        assert_eq!(m.shift(25, anchor).unwrap(), "6/1");
    }
}
