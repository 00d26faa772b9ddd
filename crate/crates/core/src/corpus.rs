//! Notes, patients and the closed PHI category set, plus JSONL ingestion.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::text::normalize;

/// One clinical document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub note_id: String,
    pub patient_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note_date: Option<NaiveDate>,
    #[serde(default)]
    pub note_type: String,
    pub text: String,
}

impl Note {
    pub fn new(note_id: impl Into<String>, patient_id: impl Into<String>, text: impl Into<String>) -> Self {
        Note {
            note_id: note_id.into(),
            patient_id: patient_id.into(),
            note_date: None,
            note_type: String::new(),
            text: text.into(),
        }
    }

    pub fn has_text(&self) -> bool {
        self.text.chars().any(|c| !c.is_whitespace())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
    #[default]
    Unknown,
}

/// The closed set of PHI categories. Declaration order is the final
/// tie-break when merging conflicting findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhiCategory {
    PatientName,
    ProviderName,
    OtherName,
    Date,
    AgeOver89,
    MRN,
    SSN,
    Phone,
    Email,
    IPAddress,
    URL,
    Location,
    Organization,
}

impl PhiCategory {
    pub const ALL: [PhiCategory; 13] = [
        PhiCategory::PatientName,
        PhiCategory::ProviderName,
        PhiCategory::OtherName,
        PhiCategory::Date,
        PhiCategory::AgeOver89,
        PhiCategory::MRN,
        PhiCategory::SSN,
        PhiCategory::Phone,
        PhiCategory::Email,
        PhiCategory::IPAddress,
        PhiCategory::URL,
        PhiCategory::Location,
        PhiCategory::Organization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhiCategory::PatientName => "PatientName",
            PhiCategory::ProviderName => "ProviderName",
            PhiCategory::OtherName => "OtherName",
            PhiCategory::Date => "Date",
            PhiCategory::AgeOver89 => "AgeOver89",
            PhiCategory::MRN => "MRN",
            PhiCategory::SSN => "SSN",
            PhiCategory::Phone => "Phone",
            PhiCategory::Email => "Email",
            PhiCategory::IPAddress => "IPAddress",
            PhiCategory::URL => "URL",
            PhiCategory::Location => "Location",
            PhiCategory::Organization => "Organization",
        }
    }

    pub fn is_name(self) -> bool {
        matches!(
            self,
            PhiCategory::PatientName | PhiCategory::ProviderName | PhiCategory::OtherName
        )
    }
}

impl fmt::Display for PhiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhiCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PhiCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown PHI category '{s}'"))
    }
}

/// A patient's known identifiers, used for lookup detection and surrogate assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    #[serde(default)]
    pub sex: Sex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_date: Option<NaiveDate>,
    #[serde(default)]
    pub identifiers: Vec<(PhiCategory, String)>,
    /// Normalized copy of each identifier value, index-aligned with `identifiers`.
    #[serde(skip)]
    normalized: Vec<String>,
}

impl PatientRecord {
    pub fn new(patient_id: impl Into<String>, sex: Sex, identifiers: Vec<(PhiCategory, String)>) -> Self {
        let mut record = PatientRecord {
            patient_id: patient_id.into(),
            sex,
            birth_date: None,
            identifiers,
            normalized: Vec::new(),
        };
        record.refresh_normalized();
        record
    }

    fn refresh_normalized(&mut self) {
        self.normalized = self.identifiers.iter().map(|(_, v)| normalize(v)).collect();
    }

    /// (category, original value, normalized value) for every identifier.
    pub fn normalized_identifiers(&self) -> impl Iterator<Item = (PhiCategory, &str, &str)> {
        self.identifiers
            .iter()
            .zip(&self.normalized)
            .map(|((c, v), n)| (*c, v.as_str(), n.as_str()))
    }
}

/// Read notes from JSONL. Fails on the first malformed line or repeated `note_id`.
pub fn read_notes<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Note>> {
    let records: Vec<(usize, Note)> = jsonl::read_records(reader, source_name)?;
    let mut seen = HashSet::new();
    let mut notes = Vec::with_capacity(records.len());
    for (line, note) in records {
        if !seen.insert(note.note_id.clone()) {
            return Err(Error::Duplicate {
                source_name: source_name.to_string(),
                line,
                kind: "note_id",
                id: note.note_id,
            });
        }
        notes.push(note);
    }
    Ok(notes)
}

pub fn load_notes(path: &Path) -> Result<Vec<Note>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_notes(std::io::BufReader::new(file), &path.display().to_string())
}

/// Keep notes with at least one non-whitespace character, preserving order.
pub fn filter_empty_notes(notes: Vec<Note>) -> (Vec<Note>, usize) {
    let total = notes.len();
    let kept: Vec<Note> = notes.into_iter().filter(Note::has_text).collect();
    let dropped = total - kept.len();
    (kept, dropped)
}

pub fn read_patients<R: BufRead>(reader: R, source_name: &str) -> Result<BTreeMap<String, PatientRecord>> {
    let records: Vec<(usize, PatientRecord)> = jsonl::read_records(reader, source_name)?;
    let mut out = BTreeMap::new();
    for (line, mut record) in records {
        if let Some((category, _)) = record.identifiers.iter().find(|(_, v)| v.trim().is_empty()) {
            return Err(Error::parse(
                source_name,
                line,
                format!("empty {category} identifier for patient '{}'", record.patient_id),
            ));
        }
        record.refresh_normalized();
        if out.contains_key(&record.patient_id) {
            return Err(Error::Duplicate {
                source_name: source_name.to_string(),
                line,
                kind: "patient_id",
                id: record.patient_id,
            });
        }
        out.insert(record.patient_id.clone(), record);
    }
    Ok(out)
}

pub fn load_patients(path: &Path) -> Result<BTreeMap<String, PatientRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_patients(std::io::BufReader::new(file), &path.display().to_string())
}
