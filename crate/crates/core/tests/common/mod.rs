//! Shared helpers for the integration tests: fixture paths, the CLI runner,
//! an independent proleptic Gregorian calendar and a synthetic corpus.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use phinote::corpus::{Note, PatientRecord, PhiCategory, Sex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Copy every file of a fixture directory into `dst`.
pub fn copy_fixture(name: &str, dst: &Path) {
    for entry in std::fs::read_dir(fixture(name)).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            std::fs::copy(entry.path(), dst.join(entry.file_name())).unwrap();
        }
    }
}

pub fn phinote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phinote")).args(args).output().expect("run phinote")
}

pub fn phinote_ok(args: &[&str]) -> Output {
    let out = phinote(args);
    assert!(
        out.status.success(),
        "phinote {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// ---- calendar oracle -------------------------------------------------------

pub fn is_leap(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

pub fn days_in_month(y: i64, m: i64) -> i64 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(y) => 29,
        2 => 28,
        _ => 0,
    }
}

pub fn is_valid_date(y: i64, m: i64, d: i64) -> bool {
    (1..=12).contains(&m) && d >= 1 && d <= days_in_month(y, m)
}

/// Day number of a civil date, counted by summing year and month lengths from 1 Jan 1900.
pub fn day_number(y: i64, m: i64, d: i64) -> i64 {
    let mut n = 0;
    for year in 1900..y {
        n += if is_leap(year) { 366 } else { 365 };
    }
    for month in 1..m {
        n += days_in_month(y, month);
    }
    n + d - 1
}

pub const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

fn month_from_name(s: &str) -> Option<i64> {
    let lower = s.trim_end_matches('.').to_lowercase();
    MONTHS
        .iter()
        .position(|m| {
            let m = m.to_lowercase();
            m == lower || (lower.len() >= 3 && m.starts_with(&lower) && (lower.len() == 3 || lower == "sept"))
        })
        .map(|i| i as i64 + 1)
}

/// The textual layouts the synthetic corpus uses for full dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateFormat {
    /// 03/07/2011
    PaddedSlash,
    /// 3/7/2011
    Slash,
    /// 3/7/11, anchored on the note year
    ShortYear,
    /// 2011-03-07
    Iso,
    /// March 7, 2011
    LongName,
    /// Mar 7, 2011
    ShortName,
}

pub const DATE_FORMATS: [DateFormat; 6] = [
    DateFormat::PaddedSlash,
    DateFormat::Slash,
    DateFormat::ShortYear,
    DateFormat::Iso,
    DateFormat::LongName,
    DateFormat::ShortName,
];

pub fn render_date(format: DateFormat, (y, m, d): (i64, i64, i64)) -> String {
    match format {
        DateFormat::PaddedSlash => format!("{m:02}/{d:02}/{y}"),
        DateFormat::Slash => format!("{m}/{d}/{y}"),
        DateFormat::ShortYear => format!("{m}/{d}/{:02}", y % 100),
        DateFormat::Iso => format!("{y}-{m:02}-{d:02}"),
        DateFormat::LongName => format!("{} {d}, {y}", MONTHS[m as usize - 1]),
        DateFormat::ShortName => format!("{} {d}, {y}", &MONTHS[m as usize - 1][..3]),
    }
}

/// Parse a date rendered in `format`; two-digit years take the latest
/// century not after `anchor_year`.
pub fn parse_date(format: DateFormat, s: &str, anchor_year: i64) -> Option<(i64, i64, i64)> {
    let num = |t: &str| t.parse::<i64>().ok();
    let (y, m, d) = match format {
        DateFormat::PaddedSlash | DateFormat::Slash | DateFormat::ShortYear => {
            let parts: Vec<&str> = s.split('/').collect();
            if parts.len() != 3 {
                return None;
            }
            let mut y = num(parts[2])?;
            if parts[2].len() == 2 {
                y += anchor_year - anchor_year % 100;
                if y > anchor_year {
                    y -= 100;
                }
            }
            (y, num(parts[0])?, num(parts[1])?)
        }
        DateFormat::Iso => {
            let parts: Vec<&str> = s.split('-').collect();
            if parts.len() != 3 {
                return None;
            }
            (num(parts[0])?, num(parts[1])?, num(parts[2])?)
        }
        DateFormat::LongName | DateFormat::ShortName => {
            let (month, rest) = s.split_once(' ')?;
            let (day, year) = rest.split_once(", ")?;
            (num(year)?, month_from_name(month)?, num(day)?)
        }
    };
    is_valid_date(y, m, d).then_some((y, m, d))
}

// ---- synthetic corpus ------------------------------------------------------

pub const SURROGATE_FEMALE: [&str; 6] = ["Mary", "Linda", "Susan", "Karen", "Nancy", "Betty"];
pub const SURROGATE_MALE: [&str; 6] = ["Tom", "Joe", "Paul", "Mark", "Gary", "Frank"];
pub const SURROGATE_SURNAMES: [&str; 6] = ["Jones", "Brown", "Clark", "Lewis", "Walker", "Young"];
pub const SURROGATE_PROVIDERS: [&str; 4] = ["Howe", "Reed", "Hayes", "Ford"];
pub const SURROGATE_ADDRESSES: [&str; 2] = ["100 Main Street, Springfield", "42 Elm Road, Riverton"];

const FEMALE: [&str; 10] = [
    "Beatrix", "Delphine", "Giselle", "Isolde", "Marisol", "Ottoline", "Rosalind", "Seraphina", "Wilhelmina", "Zinnia",
];
const MALE: [&str; 10] = [
    "Alaric", "Cosimo", "Evander", "Florian", "Hollis", "Jasper", "Leopold", "Nikolai", "Peregrine", "Thaddeus",
];
const SURNAMES: [&str; 20] = [
    "Abernathy", "Blackwood", "Castellanos", "Davenport", "Ellsworth", "Fairweather", "Galloway", "Hargrove",
    "Ingersoll", "Kowalczyk", "Lindqvist", "Montgomery", "Northcott", "Okonkwo", "Pemberton", "Quisenberry",
    "Rutherford", "Stanhope", "Thackeray", "Underhill",
];
const PROVIDERS: [&str; 8] = ["Fenwick", "Gallagher", "Haverford", "Ishikawa", "Jorgensen", "Kincaid", "Lockhart", "Mcallister"];

const FILLER: [&str; 8] = [
    "Patient reports intermittent chest pain without radiation.",
    "No fever or chills.",
    "Family history of diabetes in mother.",
    "She had hyperlipidemia, now controlled on diet.",
    "Lungs clear to auscultation bilaterally.",
    "Will schedule screening mammogram at next visit.",
    "Denies shortness of breath; mild fatigue noted.",
    "Blood pressure 132/84, heart rate 72.",
];

pub const NOTE_DATE: (i32, u32, u32) = (2021, 6, 1);

/// What was embedded where, for recall and date checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddedKind {
    Identifier(PhiCategory),
    Date { ymd: (i64, i64, i64), format: DateFormat },
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub note_index: usize,
    pub start: usize,
    pub end: usize,
    pub kind: EmbeddedKind,
}

pub struct SyntheticCorpus {
    pub notes: Vec<Note>,
    pub patients: Vec<PatientRecord>,
    pub embedded: Vec<Embedded>,
}

struct NoteBuilder {
    text: String,
    len: usize,
    spans: Vec<(usize, usize, EmbeddedKind)>,
}

impl NoteBuilder {
    fn text(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn phi(&mut self, s: &str, kind: EmbeddedKind) {
        let start = self.len;
        self.text(s);
        self.spans.push((start, self.len, kind));
    }
}

fn random_date(rng: &mut ChaCha8Rng) -> (i64, i64, i64) {
    let y = rng.gen_range(2005..=2020);
    let m = rng.gen_range(1..=12);
    let dim = days_in_month(y, m);
    // Bias toward month edges so shifts roll over months and years often.
    let d = match rng.gen_range(0..4) {
        0 => rng.gen_range(1..=3),
        1 => rng.gen_range(dim - 2..=dim),
        _ => rng.gen_range(1..=dim),
    };
    let (m, d) = if rng.gen_ratio(1, 8) { (12, rng.gen_range(25..=31)) } else { (m, d) };
    (y, m, d)
}

/// `patients * notes_per_patient` notes, each embedding the patient's
/// names, MRN, SSN, phone, e-mail and several full dates.
pub fn synthetic_corpus(seed: u64, patients: usize, notes_per_patient: usize) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let note_date = NaiveDate::from_ymd_opt(NOTE_DATE.0, NOTE_DATE.1, NOTE_DATE.2).unwrap();
    let mut out = SyntheticCorpus {
        notes: Vec::new(),
        patients: Vec::new(),
        embedded: Vec::new(),
    };
    for pi in 0..patients {
        let female = pi % 2 == 0;
        let given = *if female { &FEMALE[..] } else { &MALE[..] }.choose(&mut rng).unwrap();
        let surname = *SURNAMES.choose(&mut rng).unwrap();
        let provider = *PROVIDERS.choose(&mut rng).unwrap();
        let mrn = format!("{}", rng.gen_range(10_000_000..99_999_999u64));
        let ssn = format!("{}-{:02}-{:04}", rng.gen_range(100..900), rng.gen_range(10..100), rng.gen_range(1000..10000));
        let (a, b, c) = (rng.gen_range(200..990), rng.gen_range(200..990), rng.gen_range(1000..10000));
        let phone = match rng.gen_range(0..3) {
            0 => format!("({a}) {b}-{c}"),
            1 => format!("{a}-{b}-{c}"),
            _ => format!("{a}.{b}.{c}"),
        };
        let email = format!("{}.{}{}@example.org", given.to_lowercase(), surname.to_lowercase(), pi);
        let patient_id = format!("P{pi:05}");
        let full_name = format!("{given} {surname}");
        out.patients.push(PatientRecord::new(
            &patient_id,
            if female { Sex::Female } else { Sex::Male },
            vec![
                (PhiCategory::PatientName, full_name.clone()),
                (PhiCategory::ProviderName, provider.to_string()),
                (PhiCategory::MRN, mrn.clone()),
                (PhiCategory::SSN, ssn.clone()),
                (PhiCategory::Phone, phone.clone()),
                (PhiCategory::Email, email.clone()),
            ],
        ));
        let title = if female { "Ms." } else { "Mr." };
        for ni in 0..notes_per_patient {
            let mut b = NoteBuilder {
                text: String::new(),
                len: 0,
                spans: Vec::new(),
            };
            let id = |c| EmbeddedKind::Identifier(c);
            let date = |b: &mut NoteBuilder, rng: &mut ChaCha8Rng| {
                let ymd = random_date(rng);
                let format = *DATE_FORMATS.choose(rng).unwrap();
                b.phi(&render_date(format, ymd), EmbeddedKind::Date { ymd, format });
            };
            b.phi(&full_name, id(PhiCategory::PatientName));
            b.text(" was seen on ");
            date(&mut b, &mut rng);
            b.text(" by Dr. ");
            b.phi(provider, id(PhiCategory::ProviderName));
            b.text(". MRN: ");
            b.phi(&mrn, id(PhiCategory::MRN));
            b.text(". ");
            b.text(FILLER.choose(&mut rng).unwrap());
            b.text(" Prior visit ");
            date(&mut b, &mut rng);
            b.text(". ");
            if rng.gen_bool(0.5) {
                b.text("SSN ");
                b.phi(&ssn, id(PhiCategory::SSN));
                b.text(" on file. ");
            }
            b.text(FILLER.choose(&mut rng).unwrap());
            b.text(&format!(" {title} "));
            b.phi(surname, id(PhiCategory::PatientName));
            b.text(" can be reached at ");
            b.phi(&phone, id(PhiCategory::Phone));
            b.text(" or ");
            b.phi(&email, id(PhiCategory::Email));
            b.text(". Follow up on ");
            date(&mut b, &mut rng);
            b.text(". ");
            if rng.gen_bool(0.3) {
                b.text("Spoke with ");
                b.phi(given, id(PhiCategory::PatientName));
                b.text(" about the plan. ");
            }
            b.text(FILLER.choose(&mut rng).unwrap());

            let note_index = out.notes.len();
            for (start, end, kind) in b.spans {
                out.embedded.push(Embedded {
                    note_index,
                    start,
                    end,
                    kind,
                });
            }
            let mut note = Note::new(format!("N{pi:05}-{ni:02}"), &patient_id, b.text);
            note.note_date = Some(note_date);
            note.note_type = ["Progress", "Discharge", "Consult", "Radiology"][ni % 4].to_string();
            out.notes.push(note);
        }
    }
    out
}

impl SyntheticCorpus {
    /// Write notes, patients, surrogate-db sources and a deid config into `dir`.
    pub fn write(&self, dir: &Path) {
        let lines = |items: Vec<String>| items.into_iter().map(|s| s + "\n").collect::<String>();
        std::fs::write(dir.join("notes.jsonl"), lines(self.notes.iter().map(|n| serde_json::to_string(n).unwrap()).collect()))
            .unwrap();
        std::fs::write(
            dir.join("patients.jsonl"),
            lines(self.patients.iter().map(|p| serde_json::to_string(p).unwrap()).collect()),
        )
        .unwrap();
        let mut names = String::from("name\tsex\n");
        for n in SURROGATE_FEMALE {
            names += &format!("{n}\tF\n");
        }
        for n in SURROGATE_MALE {
            names += &format!("{n}\tM\n");
        }
        for n in SURROGATE_SURNAMES {
            names += &format!("{n}\tS\n");
        }
        std::fs::write(dir.join("names.tsv"), names).unwrap();
        std::fs::write(dir.join("addresses.txt"), SURROGATE_ADDRESSES.join("\n") + "\n").unwrap();
        std::fs::write(dir.join("providers.txt"), SURROGATE_PROVIDERS.join("\n") + "\n").unwrap();
    }
}

pub fn surrogate_db() -> phinote::hips::SurrogateDatabase {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    phinote::hips::SurrogateDatabase::from_pools(
        v(&SURROGATE_FEMALE),
        v(&SURROGATE_MALE),
        v(&SURROGATE_SURNAMES),
        v(&SURROGATE_PROVIDERS),
        v(&SURROGATE_ADDRESSES),
    )
    .unwrap()
}

/// Runs of letters, digits and apostrophes with edge apostrophes removed,
/// as (start, end) char offsets.
pub fn oracle_words(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let is_word = |c: char| c.is_alphanumeric() || c == '\'' || c == '\u{2019}';
    let is_apos = |c: char| c == '\'' || c == '\u{2019}';
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word(chars[i]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_word(chars[j]) {
            j += 1;
        }
        let (mut s, mut e) = (i, j);
        while s < e && is_apos(chars[s]) {
            s += 1;
        }
        while e > s && is_apos(chars[e - 1]) {
            e -= 1;
        }
        if s < e {
            out.push((s, e));
        }
        i = j;
    }
    out
}
