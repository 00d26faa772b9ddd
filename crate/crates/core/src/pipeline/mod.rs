//! Deterministic end-to-end runs with quality gates and provenance manifests.
//!
//! A run reads immutable inputs, fans notes out to a bounded worker pool,
//! sorts results by note id and writes every output to a temporary file that
//! is renamed into place only after all gates pass. When a gate fails, only
//! the manifest is written and any stale outputs of that run are removed.

pub mod config;
pub mod gates;
pub mod manifest;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::annotate::{
    annotate_text, emit_note_nlp, vocabulary_frequency_report, ContextLexicons, NoteNlpRecord, TermIndex,
    VocabularyRow,
};
use crate::corpus::{filter_empty_notes, read_notes, read_patients, Note, PatientRecord};
use crate::detect::{
    run_detectors, AgeDetector, ExternalFindings, Gazetteer, GazetteerDetector, LookupDetector, PatternDetector,
    PatternSet, PhiDetector, DEFAULT_PATTERNS,
};
use crate::error::{Error, Result};
use crate::hips::{apply_surrogates, derive_patient_map, DeidNote, PatientSurrogateMap, RewriteContext, SurrogateDatabase};
use crate::jsonl;
use crate::merge::{merge_findings, MergedFinding, NoteFindings};
use crate::qc::{compute_phi_stats, PhiStatsReport};

pub use config::{DetectorKind, RunConfig, RunKind};
pub use gates::GateResult;
pub use manifest::{verify, FileDigest, ProvenanceManifest, RunStatus, StageRecord, VerifyReport, TOOL_NAME, TOOL_VERSION};

pub const DEID_NOTES: &str = "deid_notes.jsonl";
pub const MERGED_FINDINGS: &str = "merged_findings.jsonl";
pub const PHI_STATS: &str = "phi_stats.json";
pub const DEID_MANIFEST: &str = "deid_manifest.json";
pub const NOTE_NLP: &str = "note_nlp.jsonl";
pub const VOCABULARY_REPORT: &str = "vocabulary_report.json";
pub const ANNOTATE_MANIFEST: &str = "annotate_manifest.json";

const LEXICON_FILES: [&str; 4] = ["negation_pre.txt", "negation_terminators.txt", "history.txt", "experiencer.txt"];

pub struct DeidRun {
    pub notes: Vec<DeidNote>,
    pub findings: Vec<NoteFindings>,
    pub stats: PhiStatsReport,
    pub manifest: ProvenanceManifest,
}

pub struct AnnotateRun {
    pub records: Vec<NoteNlpRecord>,
    pub report: Vec<VocabularyRow>,
    pub manifest: ProvenanceManifest,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start {workers} workers: {e}")))
}

fn pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Records stage counts and wall time.
struct Stages(Vec<StageRecord>);

impl Stages {
    fn run<T>(&mut self, stage: &str, records_in: usize, f: impl FnOnce() -> Result<T>, count: impl Fn(&T) -> usize) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.0.push(StageRecord {
            stage: stage.to_string(),
            records_in,
            records_out: count(&out),
            duration_ms: start.elapsed().as_millis() as u64,
        });
        Ok(out)
    }
}

/// Outputs staged next to their final location and renamed together.
struct Staged {
    dir: PathBuf,
    files: Vec<(String, PathBuf, PathBuf)>,
}

impl Staged {
    fn new(dir: &Path) -> Result<Staged> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Staged {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, role: &str, name: &str, bytes: &[u8], manifest: &mut ProvenanceManifest) -> Result<()> {
        let final_path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            self.discard();
            return Err(Error::io(&tmp, e));
        }
        manifest.outputs.insert(role.to_string(), FileDigest::of(name, bytes));
        self.files.push((role.to_string(), tmp, final_path));
        Ok(())
    }

    fn commit(mut self) -> Result<()> {
        let files = std::mem::take(&mut self.files);
        for (i, (_, tmp, dest)) in files.iter().enumerate() {
            if let Err(e) = std::fs::rename(tmp, dest) {
                for (_, t, _) in &files[i..] {
                    let _ = std::fs::remove_file(t);
                }
                return Err(Error::io(dest, e));
            }
        }
        Ok(())
    }

    fn discard(&mut self) {
        for (_, tmp, _) in self.files.drain(..) {
            let _ = std::fs::remove_file(tmp);
        }
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        self.discard();
    }
}

fn write_manifest(dir: &Path, name: &str, manifest: &ProvenanceManifest) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, manifest.to_json()).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

fn remove_outputs(dir: &Path, names: &[&str]) -> Result<()> {
    for name in names {
        let path = dir.join(name);
        match std::fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(&path, e)),
        }
    }
    Ok(())
}

fn gate_summary(gates: &[GateResult]) -> String {
    gates
        .iter()
        .filter(|g| !g.passed)
        .map(|g| {
            let first = g.samples.first().map(String::as_str).unwrap_or("");
            format!("{} ({} failures; first: {first})", g.gate, g.failures)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Fail the run if any gate failed: remove stale outputs, write the manifest only.
fn halt_on_gate_failure(dir: &Path, outputs: &[&str], manifest_name: &str, manifest: &mut ProvenanceManifest) -> Result<()> {
    if manifest.gates_passed() {
        return Ok(());
    }
    manifest.status = RunStatus::GateFailed;
    remove_outputs(dir, outputs)?;
    write_manifest(dir, manifest_name, manifest)?;
    Err(Error::GateFailed(gate_summary(&manifest.gates)))
}

struct DeidInputs {
    notes: Vec<Note>,
    patients: BTreeMap<String, PatientRecord>,
    db: SurrogateDatabase,
    patterns: PatternSet,
    detectors: Vec<Box<dyn PhiDetector>>,
}

fn load_deid_inputs(cfg: &RunConfig, manifest: &mut ProvenanceManifest) -> Result<DeidInputs> {
    let i = &cfg.inputs;
    let mut record = |role: &str, path: &Path| -> Result<Vec<u8>> {
        let bytes = read_bytes(path)?;
        manifest.inputs.insert(role.to_string(), FileDigest::of(path.display().to_string(), &bytes));
        Ok(bytes)
    };
    let notes_path = i.notes.as_deref().expect("validated");
    let notes = read_notes(&record("notes", notes_path)?[..], &notes_path.display().to_string())?;
    let patients_path = i.patients.as_deref().expect("validated");
    let patients = read_patients(&record("patients", patients_path)?[..], &patients_path.display().to_string())?;
    let db_path = i.surrogate_db.as_deref().expect("validated");
    record("surrogate_db", db_path)?;
    let db = SurrogateDatabase::load(db_path)?;
    let patterns = match &i.patterns {
        Some(p) => {
            let text = String::from_utf8(record("patterns", p)?)
                .map_err(|e| Error::parse(p.display().to_string(), 0, e.to_string()))?;
            PatternSet::parse(&text, &p.display().to_string())?
        }
        None => PatternSet::default(),
    };

    let mut detectors: Vec<Box<dyn PhiDetector>> = Vec::new();
    for kind in cfg.enabled_detectors() {
        match kind {
            DetectorKind::Lookup => detectors.push(Box::new(LookupDetector)),
            DetectorKind::Pattern => detectors.push(Box::new(PatternDetector {
                patterns: patterns.clone(),
            })),
            DetectorKind::Age => detectors.push(Box::new(AgeDetector)),
            DetectorKind::Ner => {
                let mut record_opt = |role: &str, p: &Option<PathBuf>| -> Result<()> {
                    if let Some(p) = p {
                        record(role, p)?;
                    }
                    Ok(())
                };
                record_opt("gazetteer_names", &i.gazetteer_names)?;
                record_opt("gazetteer_locations", &i.gazetteer_locations)?;
                record_opt("gazetteer_organizations", &i.gazetteer_organizations)?;
                let gazetteer = Gazetteer::load(
                    i.gazetteer_names.as_deref(),
                    i.gazetteer_locations.as_deref(),
                    i.gazetteer_organizations.as_deref(),
                )?;
                detectors.push(Box::new(GazetteerDetector { gazetteer }));
            }
            DetectorKind::External => {
                let p = i.ner_findings.as_deref().expect("validated");
                record("ner_findings", p)?;
                let external = ExternalFindings::load(p)?;
                external.validate(&notes)?;
                detectors.push(Box::new(external));
            }
        }
    }
    if i.patterns.is_none() {
        manifest
            .inputs
            .insert("patterns".into(), FileDigest::of("builtin:patterns.tsv", DEFAULT_PATTERNS.as_bytes()));
    }
    Ok(DeidInputs {
        notes,
        patients,
        db,
        patterns,
        detectors,
    })
}

/// filter → detect → merge → surrogate rewrite → gates g1–g3 → stats, then
/// write `deid_notes.jsonl`, `merged_findings.jsonl`, `phi_stats.json` and
/// `deid_manifest.json` into the output directory.
pub fn run_deid(cfg: &RunConfig) -> Result<DeidRun> {
    cfg.validate(RunKind::Deid)?;
    let out_dir = cfg.output_dir();
    let seed = cfg.seed.unwrap_or(0);
    let mut manifest = ProvenanceManifest::new("deid", cfg.config_hash(), cfg.seed, cfg.workers);
    let mut stages = Stages(Vec::new());
    let pool = thread_pool(cfg.workers)?;

    let start = Instant::now();
    let DeidInputs {
        notes,
        patients,
        db,
        patterns,
        detectors,
    } = load_deid_inputs(cfg, &mut manifest)?;
    manifest.assign_run_id();
    stages.0.push(StageRecord {
        stage: "load".into(),
        records_in: notes.len(),
        records_out: notes.len(),
        duration_ms: start.elapsed().as_millis() as u64,
    });

    let total = notes.len();
    let mut notes = stages.run("filter", total, || Ok(filter_empty_notes(notes).0), Vec::len)?;
    notes.sort_by(|a, b| a.note_id.cmp(&b.note_id));
    if let Some(n) = notes.iter().find(|n| !patients.contains_key(&n.patient_id)) {
        return Err(Error::Validation(format!(
            "note '{}' references unknown patient '{}'",
            n.note_id, n.patient_id
        )));
    }

    let n = notes.len();
    let (deid, merged, stats) = pool.install(|| -> Result<_> {
        let raw = stages.run(
            "detect",
            n,
            || {
                Ok(notes
                    .par_iter()
                    .map(|note| run_detectors(&detectors, note, patients.get(&note.patient_id)))
                    .collect::<Vec<_>>())
            },
            |v| v.iter().map(Vec::len).sum(),
        )?;
        let raw_count = raw.iter().map(Vec::len).sum();
        let merged = stages.run(
            "merge",
            raw_count,
            || raw.par_iter().map(|f| merge_findings(f)).collect::<Result<Vec<_>>>(),
            |v| v.iter().map(Vec::len).sum(),
        )?;
        drop(raw);

        let used: HashSet<&str> = notes.iter().map(|n| n.patient_id.as_str()).collect();
        let maps: BTreeMap<&str, PatientSurrogateMap> = patients
            .par_iter()
            .filter(|(id, _)| used.contains(id.as_str()))
            .map(|(id, p)| {
                let map = derive_patient_map(seed, p, &db);
                let map = match cfg.hips.date_offset_days {
                    Some(d) => map.with_date_offset(d),
                    None => map,
                };
                (id.as_str(), map)
            })
            .collect();
        let deid = stages.run(
            "hips",
            n,
            || {
                notes
                    .par_iter()
                    .zip(merged.par_iter())
                    .map(|(note, m)| {
                        let ctx = RewriteContext {
                            map: &maps[note.patient_id.as_str()],
                            db: &db,
                            patterns: &patterns,
                            style: cfg.style,
                        };
                        apply_surrogates(note, m, &ctx)
                    })
                    .collect::<Result<Vec<_>>>()
            },
            Vec::len,
        )?;

        let start = Instant::now();
        manifest.gates = vec![
            gates::residual_phi_gate(&deid, &notes, &patients),
            gates::span_sanity_gate(&deid, &notes),
            gates::date_sanity_gate(&deid, &notes, &patterns),
        ];
        stages.0.push(StageRecord {
            stage: "gates".into(),
            records_in: n,
            records_out: manifest.gates.iter().filter(|g| g.passed).count(),
            duration_ms: start.elapsed().as_millis() as u64,
        });
        if !manifest.gates_passed() {
            return Ok((deid, merged, None));
        }
        let by_note: BTreeMap<String, Vec<MergedFinding>> =
            notes.iter().map(|n| n.note_id.clone()).zip(merged.iter().cloned()).collect();
        let stats = stages.run("stats", n, || Ok(compute_phi_stats(&notes, &by_note)), |s| s.notes_total)?;
        Ok((deid, merged, Some(stats)))
    })?;
    manifest.stages = stages.0;

    let outputs = [DEID_NOTES, MERGED_FINDINGS, PHI_STATS];
    halt_on_gate_failure(&out_dir, &outputs, DEID_MANIFEST, &mut manifest)?;
    let stats = stats.expect("computed when gates pass");

    let findings: Vec<NoteFindings> = notes
        .iter()
        .zip(merged)
        .map(|(n, findings)| NoteFindings {
            note_id: n.note_id.clone(),
            findings,
        })
        .collect();
    let records: Vec<_> = deid.iter().map(DeidNote::to_record).collect();

    let mut staged = Staged::new(&out_dir)?;
    staged.write("deid_notes", DEID_NOTES, &jsonl::to_bytes(&records), &mut manifest)?;
    staged.write("merged_findings", MERGED_FINDINGS, &jsonl::to_bytes(&findings), &mut manifest)?;
    staged.write("phi_stats", PHI_STATS, &pretty_json(&stats), &mut manifest)?;
    staged.commit()?;
    write_manifest(&out_dir, DEID_MANIFEST, &manifest)?;

    Ok(DeidRun {
        notes: deid,
        findings,
        stats,
        manifest,
    })
}

/// Any JSONL with `note_id` and `text` fields, such as `deid_notes.jsonl`.
#[derive(Deserialize)]
struct AnnotateInput {
    note_id: String,
    text: String,
}

fn load_lexicons(cfg: &RunConfig, manifest: &mut ProvenanceManifest) -> Result<ContextLexicons> {
    let window = cfg.annotate.window_tokens;
    match &cfg.inputs.lexicon_dir {
        Some(dir) => {
            for name in LEXICON_FILES {
                let path = dir.join(name);
                if path.is_file() {
                    let bytes = read_bytes(&path)?;
                    manifest
                        .inputs
                        .insert(format!("lexicon.{name}"), FileDigest::of(path.display().to_string(), &bytes));
                }
            }
            ContextLexicons::load_dir(dir, window)
        }
        None => {
            let mut lex = ContextLexicons::default();
            lex.window_tokens = window;
            Ok(lex)
        }
    }
}

/// segment → extract → modifiers → emit → gate g4, then write
/// `note_nlp.jsonl`, `vocabulary_report.json` and `annotate_manifest.json`.
pub fn run_annotate(cfg: &RunConfig) -> Result<AnnotateRun> {
    cfg.validate(RunKind::Annotate)?;
    let out_dir = cfg.output_dir();
    let mut manifest = ProvenanceManifest::new("annotate", cfg.config_hash(), cfg.seed, cfg.workers);
    let mut stages = Stages(Vec::new());
    let pool = thread_pool(cfg.workers)?;

    let start = Instant::now();
    let input_path = cfg.annotate_input();
    let bytes = read_bytes(&input_path)?;
    manifest
        .inputs
        .insert("notes".into(), FileDigest::of(input_path.display().to_string(), &bytes));
    let source_name = input_path.display().to_string();
    let rows: Vec<(usize, AnnotateInput)> = jsonl::read_records(&bytes[..], &source_name)?;
    let mut seen = HashSet::new();
    let mut notes = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if !seen.insert(row.note_id.clone()) {
            return Err(Error::Duplicate {
                source_name: source_name.clone(),
                line,
                kind: "note_id",
                id: row.note_id,
            });
        }
        notes.push(row);
    }
    notes.sort_by(|a, b| a.note_id.cmp(&b.note_id));
    let index_path = cfg.inputs.term_index.as_deref().expect("validated");
    let index_bytes = read_bytes(index_path)?;
    manifest
        .inputs
        .insert("term_index".into(), FileDigest::of(index_path.display().to_string(), &index_bytes));
    let index = TermIndex::load(index_path)?;
    let lexicons = load_lexicons(cfg, &mut manifest)?;
    let matcher = lexicons.matcher();
    manifest.assign_run_id();
    stages.0.push(StageRecord {
        stage: "load".into(),
        records_in: notes.len(),
        records_out: notes.len(),
        duration_ms: start.elapsed().as_millis() as u64,
    });

    let nlp_date = cfg
        .run_date
        .unwrap_or_else(|| chrono::Local::now().date_naive())
        .to_string();
    let nlp_system = format!("{TOOL_NAME} {TOOL_VERSION}");
    let n = notes.len();
    let records = pool.install(|| {
        let mentions = stages.run(
            "extract",
            n,
            || {
                Ok(notes
                    .par_iter()
                    .flat_map_iter(|note| annotate_text(&note.note_id, &note.text, &index, &matcher))
                    .collect::<Vec<_>>())
            },
            Vec::len,
        )?;
        let records = stages.run("emit", mentions.len(), || Ok(emit_note_nlp(&mentions, &nlp_system, &nlp_date)), Vec::len)?;
        Ok::<_, Error>((records, mentions))
    })?;
    let (records, mentions) = records;

    let texts: BTreeMap<String, String> = notes.into_iter().map(|n| (n.note_id, n.text)).collect();
    manifest.gates = vec![gates::annotation_sanity_gate(&records, &texts)];
    manifest.stages = stages.0;
    halt_on_gate_failure(&out_dir, &[NOTE_NLP, VOCABULARY_REPORT], ANNOTATE_MANIFEST, &mut manifest)?;

    let report = vocabulary_frequency_report(&mentions);
    let mut staged = Staged::new(&out_dir)?;
    staged.write("note_nlp", NOTE_NLP, &jsonl::to_bytes(&records), &mut manifest)?;
    staged.write("vocabulary_report", VOCABULARY_REPORT, &pretty_json(&report), &mut manifest)?;
    staged.commit()?;
    write_manifest(&out_dir, ANNOTATE_MANIFEST, &manifest)?;

    Ok(AnnotateRun {
        records,
        report,
        manifest,
    })
}
