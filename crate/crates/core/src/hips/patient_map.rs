use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PatientRecord, PhiCategory, Sex};
use crate::hash::selection_hash;
use crate::text::{char_len, normalize, tokenize};

use super::db::SurrogateDatabase;

/// Largest absolute date shift in days.
pub const MAX_DATE_OFFSET: i64 = 31;

/// Whether a name token is a given name or a surname.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameRole {
    Given,
    Surname,
}

impl NameRole {
    fn as_str(self) -> &'static str {
        match self {
            NameRole::Given => "given",
            NameRole::Surname => "surname",
        }
    }
}

/// Everything needed to rewrite one patient's notes consistently.
///
/// All surrogate choices are pure functions of `(seed, patient_id, slot,
/// normalized source)`, so two workers deriving the same map agree.
#[derive(Debug, Clone)]
pub struct PatientSurrogateMap {
    pub patient_id: String,
    pub seed: u64,
    pub sex: Sex,
    pub date_offset_days: i64,
    /// (category, role, normalized source) → surrogate, for the patient's own names.
    pub name_map: BTreeMap<(PhiCategory, NameRole, String), String>,
    roles: HashMap<(PhiCategory, String), NameRole>,
    /// Normalized identifier values and name tokens a surrogate must never equal or contain.
    protected: HashSet<String>,
}

/// Deterministic offset in [-31, -1] ∪ [1, 31].
pub fn date_offset(seed: u64, patient_id: &str) -> i64 {
    let span = (2 * MAX_DATE_OFFSET) as u64;
    let v = (selection_hash(seed, patient_id, "date_offset", "") % span) as i64;
    if v < MAX_DATE_OFFSET {
        v - MAX_DATE_OFFSET
    } else {
        v - MAX_DATE_OFFSET + 1
    }
}

fn slot(category: PhiCategory, role: Option<NameRole>) -> String {
    match role {
        Some(r) => format!("{}.{}", category.as_str(), r.as_str()),
        None => category.as_str().to_string(),
    }
}

pub fn derive_patient_map(seed: u64, patient: &PatientRecord, db: &SurrogateDatabase) -> PatientSurrogateMap {
    let mut roles = HashMap::new();
    let mut protected = HashSet::new();
    for (category, _, norm) in patient.normalized_identifiers() {
        protected.insert(norm.to_string());
        if !category.is_name() {
            continue;
        }
        let tokens = tokenize(norm);
        let last = tokens.len().saturating_sub(1);
        for (i, t) in tokens.iter().enumerate() {
            protected.insert(t.text.clone());
            let role = if i == last { NameRole::Surname } else { NameRole::Given };
            roles.entry((category, t.text.clone())).or_insert(role);
        }
    }
    let mut map = PatientSurrogateMap {
        patient_id: patient.patient_id.clone(),
        seed,
        sex: patient.sex,
        date_offset_days: date_offset(seed, &patient.patient_id),
        name_map: BTreeMap::new(),
        roles,
        protected,
    };
    let keys: Vec<(PhiCategory, String, NameRole)> =
        map.roles.iter().map(|((c, s), r)| (*c, s.clone(), *r)).collect();
    for (category, source, role) in keys {
        let surrogate = map.pick_name(category, role, &source, db);
        map.name_map.insert((category, role, source), surrogate);
    }
    map
}

impl PatientSurrogateMap {
    /// Replace the derived date offset, e.g. to reproduce a known shift.
    pub fn with_date_offset(mut self, offset_days: i64) -> Self {
        self.date_offset_days = offset_days;
        self
    }

    fn is_protected(&self, candidate: &str) -> bool {
        let norm = normalize(candidate);
        if self.protected.contains(&norm) {
            return true;
        }
        let text = crate::text::NormalizedText::new(candidate);
        self.protected
            .iter()
            .any(|p| char_len(p) >= crate::pipeline::gates::MIN_RESIDUAL_LEN && text.contains_word(p))
    }

    /// Hash-indexed pick from `pool`, probing forward past values that would
    /// re-expose one of this patient's identifiers.
    fn pick<'a>(&self, pool: &'a [String], slot: &str, source: &str) -> &'a str {
        let start = (selection_hash(self.seed, &self.patient_id, slot, source) % pool.len() as u64) as usize;
        (0..pool.len())
            .map(|k| pool[(start + k) % pool.len()].as_str())
            .find(|c| !self.is_protected(c))
            .unwrap_or(&pool[start])
    }

    fn given_pool<'a>(&self, category: PhiCategory, db: &'a SurrogateDatabase) -> &'a [String] {
        match (category, self.sex) {
            (PhiCategory::PatientName, Sex::Female) => &db.female_given,
            (PhiCategory::PatientName, Sex::Male) => &db.male_given,
            _ => db.combined_given(),
        }
    }

    fn pick_name(&self, category: PhiCategory, role: NameRole, source: &str, db: &SurrogateDatabase) -> String {
        let pool: &[String] = match (role, category) {
            (NameRole::Given, _) => self.given_pool(category, db),
            (NameRole::Surname, PhiCategory::ProviderName) => &db.provider_surnames,
            (NameRole::Surname, _) => &db.surnames,
        };
        self.pick(pool, &slot(category, Some(role)), source).to_string()
    }

    /// Role of a name token: the patient record decides for known tokens;
    /// otherwise the last token of a multi-token name is the surname and a
    /// lone token is a surname for patient/provider names, a given name for others.
    pub fn role_of(&self, category: PhiCategory, normalized_token: &str, index: usize, count: usize) -> NameRole {
        if let Some(r) = self.roles.get(&(category, normalized_token.to_string())) {
            return *r;
        }
        match (count, category) {
            (1, PhiCategory::OtherName) => NameRole::Given,
            (1, _) => NameRole::Surname,
            _ if index + 1 == count => NameRole::Surname,
            _ => NameRole::Given,
        }
    }

    /// Surrogate for one name token (normalized), consistent for the life of the map.
    pub fn surrogate_name(&self, category: PhiCategory, role: NameRole, normalized_token: &str, db: &SurrogateDatabase) -> String {
        if let Some(s) = self.name_map.get(&(category, role, normalized_token.to_string())) {
            return s.clone();
        }
        self.pick_name(category, role, normalized_token, db)
    }

    pub fn surrogate_address(&self, normalized_source: &str, db: &SurrogateDatabase) -> String {
        self.pick(&db.addresses, "Location", normalized_source).to_string()
    }

    /// Format-preserving synthetic value: ASCII digits and letters are redrawn
    /// (letter case kept), everything else is kept. IPv4 addresses get fresh
    /// octets; URL schemes and e-mail/URL top-level domains are kept.
    pub fn synthetic_value(&self, category: PhiCategory, original: &str) -> String {
        let source = normalize(original);
        let hash = selection_hash(self.seed, &self.patient_id, category.as_str(), &source);
        let mut rng = ChaCha8Rng::seed_from_u64(hash);
        for _ in 0..16 {
            let candidate = match category {
                PhiCategory::IPAddress => (0..4)
                    .map(|_| rng.gen_range(1..=254u32).to_string())
                    .collect::<Vec<_>>()
                    .join("."),
                _ => {
                    let (head, body, tail) = split_kept_parts(category, original);
                    let scrambled: String = body.chars().map(|c| redraw(c, &mut rng)).collect();
                    format!("{head}{scrambled}{tail}")
                }
            };
            if normalize(&candidate) != source && !self.is_protected(&candidate) {
                return candidate;
            }
        }
        // Unreachable in practice; never hand back the original value.
        format!("[**{}]", category.as_str().to_uppercase())
    }
}

fn redraw(c: char, rng: &mut ChaCha8Rng) -> char {
    if c.is_ascii_digit() {
        char::from(b'0' + rng.gen_range(0..10u8))
    } else if c.is_ascii_lowercase() {
        char::from(b'a' + rng.gen_range(0..26u8))
    } else if c.is_ascii_uppercase() {
        char::from(b'A' + rng.gen_range(0..26u8))
    } else {
        c
    }
}

/// Split into (kept prefix, part to scramble, kept suffix).
fn split_kept_parts(category: PhiCategory, original: &str) -> (&str, &str, &str) {
    let mut head_len = 0;
    if category == PhiCategory::URL {
        let lower = original.to_ascii_lowercase();
        for scheme in ["https://", "http://"] {
            if lower.starts_with(scheme) {
                head_len = scheme.len();
            }
        }
        if lower[head_len..].starts_with("www.") {
            head_len += 4;
        }
    }
    let mut tail_start = original.len();
    if matches!(category, PhiCategory::Email | PhiCategory::URL) {
        let host_end = if category == PhiCategory::URL {
            original[head_len..].find('/').map_or(original.len(), |i| head_len + i)
        } else {
            original.len()
        };
        if let Some(dot) = original[head_len..host_end].rfind('.') {
            tail_start = head_len + dot;
        }
    }
    (&original[..head_len], &original[head_len..tail_start], &original[tail_start..])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db() -> SurrogateDatabase {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        SurrogateDatabase::from_pools(
            v(&["Mary", "Ann", "Sue"]),
            v(&["Tom", "Joe", "Bob"]),
            v(&["Jones", "Brown", "Lee"]),
            v(&["Howe", "Kent"]),
            v(&["1 Elm St, Springfield", "22 Oak Ave, Shelbyville"]),
        )
        .unwrap()
    }

    fn patient(sex: Sex) -> PatientRecord {
        PatientRecord::new(
            "p1",
            sex,
            vec![
                (PhiCategory::PatientName, "Jonathan Smith".into()),
                (PhiCategory::ProviderName, "White".into()),
            ],
        )
    }

    #[test]
    fn offset_range_excludes_zero() {
        for seed in 0..2000u64 {
            let off = date_offset(seed, "p");
            assert!((-31..=31).contains(&off) && off != 0, "{off}");
        }
        // every value is reachable
        let seen: HashSet<i64> = (0..5000u64).map(|s| date_offset(s, "p")).collect();
        assert_eq!(seen.len(), 62);
    }

    #[test]
    fn derivation_is_pure() {
        let a = derive_patient_map(7, &patient(Sex::Male), &db());
        let b = derive_patient_map(7, &patient(Sex::Male), &db());
        assert_eq!(a.name_map, b.name_map);
        assert_eq!(a.date_offset_days, b.date_offset_days);
    }

    #[test]
    fn given_names_follow_sex() {
        let d = db();
        for seed in 0..50 {
            let m = derive_patient_map(seed, &patient(Sex::Male), &d);
            let given = &m.name_map[&(PhiCategory::PatientName, NameRole::Given, "jonathan".into())];
            assert!(d.male_given.contains(given));
            let f = derive_patient_map(seed, &patient(Sex::Female), &d);
            let given = &f.name_map[&(PhiCategory::PatientName, NameRole::Given, "jonathan".into())];
            assert!(d.female_given.contains(given));
            let sur = &m.name_map[&(PhiCategory::PatientName, NameRole::Surname, "smith".into())];
            assert!(d.surnames.contains(sur));
            let prov = &m.name_map[&(PhiCategory::ProviderName, NameRole::Surname, "white".into())];
            assert!(d.provider_surnames.contains(prov));
        }
    }

    #[test]
    fn surrogates_never_reuse_patient_names() {
        let d = db();
        let p = PatientRecord::new("p9", Sex::Female, vec![(PhiCategory::PatientName, "Mary Jones".into())]);
        for seed in 0..100 {
            let m = derive_patient_map(seed, &p, &d);
            assert_ne!(m.surrogate_name(PhiCategory::PatientName, NameRole::Given, "mary", &d), "Mary");
            assert_ne!(m.surrogate_name(PhiCategory::PatientName, NameRole::Surname, "jones", &d), "Jones");
            assert_ne!(m.surrogate_name(PhiCategory::OtherName, NameRole::Given, "lynn", &d), "Mary");
        }
    }

    #[test]
    fn roles() {
        let m = derive_patient_map(1, &patient(Sex::Male), &db());
        assert_eq!(m.role_of(PhiCategory::PatientName, "smith", 0, 1), NameRole::Surname);
        assert_eq!(m.role_of(PhiCategory::PatientName, "jonathan", 0, 1), NameRole::Given);
        assert_eq!(m.role_of(PhiCategory::OtherName, "lynn", 0, 1), NameRole::Given);
        assert_eq!(m.role_of(PhiCategory::OtherName, "lynn", 1, 2), NameRole::Surname);
    }

    #[test]
    fn synthetic_values_keep_shape() {
        let m = derive_patient_map(3, &patient(Sex::Male), &db());
        let ssn = m.synthetic_value(PhiCategory::SSN, "123-45-6789");
        assert_ne!(ssn, "123-45-6789");
        assert!(regex::Regex::new(r"^[0-9]{3}-[0-9]{2}-[0-9]{4}$").unwrap().is_match(&ssn), "{ssn}");
        let email = m.synthetic_value(PhiCategory::Email, "John.Doe@example.org");
        assert!(email.ends_with(".org") && email.contains('@'), "{email}");
        let url = m.synthetic_value(PhiCategory::URL, "https://www.clinic.com/p/123");
        assert!(url.starts_with("https://www."), "{url}");
        let ip = m.synthetic_value(PhiCategory::IPAddress, "10.0.0.1");
        assert_eq!(ip.split('.').count(), 4);
        assert_eq!(m.synthetic_value(PhiCategory::SSN, "123-45-6789"), ssn);
    }
}
