use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::sha256_hex;

/// Pools of realistic replacement values. Pool order is fixed at build time
/// because surrogate selection indexes into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateDatabase {
    pub female_given: Vec<String>,
    pub male_given: Vec<String>,
    pub surnames: Vec<String>,
    pub provider_surnames: Vec<String>,
    pub addresses: Vec<String>,
    /// SHA-256 over the pools' canonical serialization.
    pub version: String,
    #[serde(skip)]
    combined_given: Vec<String>,
}

fn dedup_in_order(values: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    values
        .into_iter()
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty() && seen.insert(v.clone()))
        .collect()
}

fn content_version(pools: [&[String]; 5]) -> String {
    let mut buf = Vec::new();
    for pool in pools {
        for v in pool {
            buf.extend_from_slice(v.as_bytes());
            buf.push(b'\n');
        }
        buf.push(0);
    }
    sha256_hex(&buf)
}

impl SurrogateDatabase {
    /// Build from in-memory pools. Every pool must be non-empty after deduplication.
    pub fn from_pools(
        female_given: Vec<String>,
        male_given: Vec<String>,
        surnames: Vec<String>,
        provider_surnames: Vec<String>,
        addresses: Vec<String>,
    ) -> Result<Self> {
        let female_given = dedup_in_order(female_given);
        let male_given = dedup_in_order(male_given);
        let surnames = dedup_in_order(surnames);
        let provider_surnames = dedup_in_order(provider_surnames);
        let addresses = dedup_in_order(addresses);
        for (name, pool) in [
            ("female given name", &female_given),
            ("male given name", &male_given),
            ("surname", &surnames),
            ("provider surname", &provider_surnames),
            ("address", &addresses),
        ] {
            if pool.is_empty() {
                return Err(Error::Build(format!("{name} pool is empty")));
            }
        }
        let version = content_version([&female_given, &male_given, &surnames, &provider_surnames, &addresses]);
        let mut db = SurrogateDatabase {
            female_given,
            male_given,
            surnames,
            provider_surnames,
            addresses,
            version,
            combined_given: Vec::new(),
        };
        db.refresh_combined();
        Ok(db)
    }

    fn refresh_combined(&mut self) {
        self.combined_given = dedup_in_order(self.female_given.iter().chain(&self.male_given).cloned());
    }

    /// Female then male given names, deduplicated.
    pub fn combined_given(&self) -> &[String] {
        &self.combined_given
    }

    /// Build from a names TSV (`name<TAB>sex`, sex one of `female`/`F`,
    /// `male`/`M`, or `surname`/`S`; an optional `name<TAB>sex` header),
    /// an address file and a provider-surname file (one entry per line).
    pub fn build(names_path: &Path, addresses_path: &Path, providers_path: &Path) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let names = read(names_path)?;
        let (mut female, mut male, mut surnames) = (Vec::new(), Vec::new(), Vec::new());
        for (i, line) in names.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((name, sex)) = line.split_once('\t') else {
                return Err(Error::parse(names_path.display().to_string(), i + 1, "expected name<TAB>sex"));
            };
            match sex.trim().to_ascii_lowercase().as_str() {
                "f" | "female" => female.push(name.to_string()),
                "m" | "male" => male.push(name.to_string()),
                "s" | "surname" => surnames.push(name.to_string()),
                "sex" if i == 0 => {}
                other => {
                    return Err(Error::parse(
                        names_path.display().to_string(),
                        i + 1,
                        format!("unknown sex/kind '{other}'"),
                    ))
                }
            }
        }
        let lines = |s: String| s.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
        let addresses = lines(read(addresses_path)?);
        let providers = lines(read(providers_path)?);
        SurrogateDatabase::from_pools(female, male, surnames, providers, addresses)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: SurrogateDatabase = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        let db = SurrogateDatabase::from_pools(raw.female_given, raw.male_given, raw.surnames, raw.provider_surnames, raw.addresses)?;
        if db.version != raw.version {
            return Err(Error::Validation(format!(
                "{}: surrogate database version {} does not match its content ({})",
                path.display(),
                raw.version,
                db.version
            )));
        }
        Ok(db)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }
}
