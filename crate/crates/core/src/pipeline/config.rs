use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::annotate::DEFAULT_WINDOW_TOKENS;
use crate::error::{Error, Result};
use crate::hash::sha256_hex;
use crate::hips::{Style, MAX_DATE_OFFSET};
use crate::qc::{DEFAULT_POOL, DEFAULT_REVIEW, DEFAULT_REVIEW_WORDS, DEFAULT_TOP_TYPES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Patient-record lookup.
    Lookup,
    /// Regular-expression pattern set.
    Pattern,
    /// Gazetteer NER.
    Ner,
    /// Ages over 89.
    Age,
    /// Precomputed NER findings from `inputs.ner_findings`.
    External,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub notes: Option<PathBuf>,
    pub patients: Option<PathBuf>,
    pub surrogate_db: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub gazetteer_names: Option<PathBuf>,
    pub gazetteer_locations: Option<PathBuf>,
    pub gazetteer_organizations: Option<PathBuf>,
    pub ner_findings: Option<PathBuf>,
    pub term_index: Option<PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
    /// Notes to annotate; defaults to `<output_dir>/deid_notes.jsonl`.
    pub annotate_input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Defaults to lookup, pattern, ner and age, plus external when
    /// `inputs.ner_findings` is set.
    pub enabled: Option<Vec<DetectorKind>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HipsConfig {
    /// Use this offset for every patient instead of the seeded one.
    pub date_offset_days: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotateConfig {
    pub window_tokens: usize,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            window_tokens: DEFAULT_WINDOW_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QcConfig {
    pub top_types: usize,
    pub pool: usize,
    pub review: usize,
    pub review_words: usize,
}

impl Default for QcConfig {
    fn default() -> Self {
        QcConfig {
            top_types: DEFAULT_TOP_TYPES,
            pool: DEFAULT_POOL,
            review: DEFAULT_REVIEW,
            review_words: DEFAULT_REVIEW_WORDS,
        }
    }
}

fn default_workers() -> usize {
    1
}

/// A run configuration, read from TOML. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub style: Style,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    /// Written to NOTE_NLP `nlp_date`; today when unset.
    pub run_date: Option<NaiveDate>,
    #[serde(default)]
    pub inputs: InputPaths,
    #[serde(default)]
    pub detectors: DetectorConfig,
    #[serde(default)]
    pub hips: HipsConfig,
    #[serde(default)]
    pub annotate: AnnotateConfig,
    #[serde(default)]
    pub qc: QcConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            style: Style::default(),
            workers: default_workers(),
            output_dir: None,
            run_date: None,
            inputs: InputPaths::default(),
            detectors: DetectorConfig::default(),
            hips: HipsConfig::default(),
            annotate: AnnotateConfig::default(),
            qc: QcConfig::default(),
        }
    }
}

/// The settings that determine output bytes. Paths, worker count and the
/// output directory are excluded; inputs are tracked by content hash instead.
#[derive(Serialize)]
struct ConfigDigest<'a> {
    seed: Option<u64>,
    style: Style,
    detectors: Vec<DetectorKind>,
    date_offset_days: Option<i64>,
    window_tokens: usize,
    run_date: Option<NaiveDate>,
    qc: &'a QcConfig,
}

/// Which run a configuration is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Deid,
    Annotate,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        let i = &mut self.inputs;
        for p in [
            &mut i.notes,
            &mut i.patients,
            &mut i.surrogate_db,
            &mut i.patterns,
            &mut i.gazetteer_names,
            &mut i.gazetteer_locations,
            &mut i.gazetteer_organizations,
            &mut i.ner_findings,
            &mut i.term_index,
            &mut i.lexicon_dir,
            &mut i.annotate_input,
            &mut self.output_dir,
        ] {
            fix(p);
        }
    }

    pub fn enabled_detectors(&self) -> Vec<DetectorKind> {
        let mut kinds = match &self.detectors.enabled {
            Some(k) => k.clone(),
            None => {
                let mut k = vec![DetectorKind::Lookup, DetectorKind::Pattern, DetectorKind::Ner, DetectorKind::Age];
                if self.inputs.ner_findings.is_some() {
                    k.push(DetectorKind::External);
                }
                k
            }
        };
        kinds.sort();
        kinds.dedup();
        kinds
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn annotate_input(&self) -> PathBuf {
        self.inputs
            .annotate_input
            .clone()
            .unwrap_or_else(|| self.output_dir().join(super::DEID_NOTES))
    }

    pub fn config_hash(&self) -> String {
        let digest = ConfigDigest {
            seed: self.seed,
            style: self.style,
            detectors: self.enabled_detectors(),
            date_offset_days: self.hips.date_offset_days,
            window_tokens: self.annotate.window_tokens,
            run_date: self.run_date,
            qc: &self.qc,
        };
        sha256_hex(serde_json::to_string(&digest).expect("serializable").as_bytes())
    }

    pub fn validate(&self, kind: RunKind) -> Result<()> {
        let missing = |what: &str| Error::Validation(format!("missing required input '{what}'"));
        if self.workers == 0 {
            return Err(Error::Validation("workers must be at least 1".into()));
        }
        let detectors = self.enabled_detectors();
        match kind {
            RunKind::Deid => {
                self.inputs.notes.as_ref().ok_or_else(|| missing("notes"))?;
                self.inputs.patients.as_ref().ok_or_else(|| missing("patients"))?;
                self.inputs.surrogate_db.as_ref().ok_or_else(|| missing("surrogate_db"))?;
                if self.style == Style::Surrogate && self.seed.is_none() {
                    return Err(Error::Validation("seed is required in surrogate style".into()));
                }
                if detectors.contains(&DetectorKind::External) && self.inputs.ner_findings.is_none() {
                    return Err(missing("ner_findings"));
                }
                if let Some(d) = self.hips.date_offset_days {
                    if d == 0 || d.abs() > MAX_DATE_OFFSET {
                        return Err(Error::Validation(format!(
                            "date_offset_days must be nonzero and within ±{MAX_DATE_OFFSET}, got {d}"
                        )));
                    }
                }
            }
            RunKind::Annotate => {
                self.inputs.term_index.as_ref().ok_or_else(|| missing("term_index"))?;
                if self.annotate.window_tokens == 0 {
                    return Err(Error::Validation("window_tokens must be at least 1".into()));
                }
                let input = self.annotate_input();
                if !input.is_file() {
                    return Err(Error::Validation(format!("annotate input {} does not exist", input.display())));
                }
            }
        }
        let i = &self.inputs;
        for p in [
            &i.notes,
            &i.patients,
            &i.surrogate_db,
            &i.patterns,
            &i.gazetteer_names,
            &i.gazetteer_locations,
            &i.gazetteer_organizations,
            &i.ner_findings,
            &i.term_index,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(Error::Validation(format!("input file {} does not exist", p.display())));
            }
        }
        if let Some(dir) = &i.lexicon_dir {
            if !dir.is_dir() {
                return Err(Error::Validation(format!("lexicon directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }
}
