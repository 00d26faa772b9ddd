use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use phinote::annotate::TermIndex;
use phinote::corpus::load_notes;
use phinote::hips::{Style, SurrogateDatabase};
use phinote::jsonl;
use phinote::merge::{MergedFinding, NoteFindings};
use phinote::pipeline::{self, ProvenanceManifest, RunConfig};
use phinote::qc::{self, DEFAULT_POOL, DEFAULT_REVIEW, DEFAULT_REVIEW_WORDS, DEFAULT_TOP_TYPES};
use phinote::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_GATE: u8 = 3;
const EXIT_IO: u8 = 4;

/// De-identify clinical notes and annotate them with vocabulary concepts.
#[derive(Parser)]
#[command(name = "phinote", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a surrogate database from name, address and provider lists.
    BuildSurrogateDb {
        /// `name<TAB>female|male|surname` lines.
        #[arg(long)]
        names: PathBuf,
        #[arg(long)]
        addresses: PathBuf,
        #[arg(long)]
        providers: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Compile a pruned term index from a vocabulary TSV.
    BuildTermIndex {
        #[arg(long)]
        vocabulary: PathBuf,
        /// Terms to exclude, one per line.
        #[arg(long)]
        ambiguous: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Run de-identification as configured.
    Deid(RunArgs),
    /// Annotate notes (by default the de-identified output) with concepts.
    Annotate(RunArgs),
    /// Recompute PHI statistics from notes and a merged-findings dump.
    Stats {
        #[arg(long)]
        notes: PathBuf,
        #[arg(long)]
        findings: PathBuf,
        /// Write JSON here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Draw the manual-review note sample; prints one note_id per line.
    QcSample {
        #[arg(long)]
        notes: PathBuf,
        #[arg(long)]
        findings: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOP_TYPES)]
        top_types: usize,
        #[arg(long, default_value_t = DEFAULT_POOL)]
        pool: usize,
        #[arg(long, default_value_t = DEFAULT_REVIEW)]
        review: usize,
    },
    /// List the rarest words of a flowsheet file; prints `word<TAB>count`.
    FlowsheetReview {
        /// One free-text value per line.
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REVIEW_WORDS)]
        review_words: usize,
    },
    /// Compare two run manifests; exits 3 when they diverge.
    Verify { left: PathBuf, right: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML); relative paths resolve against its directory
    #[arg(long)]
    config: PathBuf,
    /// Override `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Override `style` (surrogate or placeholder)
    #[arg(long)]
    style: Option<Style>,
    /// Override `workers`
    #[arg(long)]
    workers: Option<usize>,
    /// Override `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(style) = self.style {
            cfg.style = style;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn load_findings(path: &Path) -> Result<BTreeMap<String, Vec<MergedFinding>>> {
    let rows: Vec<(usize, NoteFindings)> = jsonl::read_file(path)?;
    Ok(rows.into_iter().map(|(_, r)| (r.note_id, r.findings)).collect())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::BuildSurrogateDb {
            names,
            addresses,
            providers,
            output,
        } => {
            let db = SurrogateDatabase::build(&names, &addresses, &providers)?;
            write_output(&output, db.to_json().as_bytes())?;
            eprintln!(
                "surrogate db {}: {} female, {} male, {} surnames, {} providers, {} addresses",
                db.version,
                db.female_given.len(),
                db.male_given.len(),
                db.surnames.len(),
                db.provider_surnames.len(),
                db.addresses.len()
            );
        }
        Command::BuildTermIndex {
            vocabulary,
            ambiguous,
            output,
        } => {
            let index = TermIndex::build_from_files(&vocabulary, ambiguous.as_deref())?;
            write_output(&output, index.to_json().as_bytes())?;
            eprintln!("{}", serde_json::to_string(index.report())?);
        }
        Command::Deid(args) => {
            let cfg = args.config()?;
            let run = pipeline::run_deid(&cfg)?;
            eprintln!(
                "deid run {}: {} notes, {} findings, outputs in {}",
                run.manifest.run_id,
                run.notes.len(),
                run.stats.findings_total,
                cfg.output_dir().display()
            );
        }
        Command::Annotate(args) => {
            let cfg = args.config()?;
            let run = pipeline::run_annotate(&cfg)?;
            eprintln!(
                "annotate run {}: {} mentions, outputs in {}",
                run.manifest.run_id,
                run.records.len(),
                cfg.output_dir().display()
            );
        }
        Command::Stats {
            notes,
            findings,
            output,
        } => {
            let notes = load_notes(&notes)?;
            let report = qc::compute_phi_stats(&notes, &load_findings(&findings)?);
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match output {
                Some(p) => write_output(&p, json.as_bytes())?,
                None => stdout.write_all(json.as_bytes())?,
            }
        }
        Command::QcSample {
            notes,
            findings,
            seed,
            top_types,
            pool,
            review,
        } => {
            let notes = load_notes(&notes)?;
            let findings = load_findings(&findings)?;
            for id in qc::sample_notes_for_review(&notes, &findings, seed, top_types, pool, review) {
                writeln!(stdout, "{id}")?;
            }
        }
        Command::FlowsheetReview { rows, review_words } => {
            let text = std::fs::read_to_string(&rows).map_err(|e| Error::Io { path: rows.clone(), source: e })?;
            let lines: Vec<&str> = text.lines().collect();
            for w in qc::flowsheet_low_frequency_review(&lines, review_words) {
                writeln!(stdout, "{}\t{}", w.word, w.count)?;
            }
        }
        Command::Verify { left, right } => {
            let report = pipeline::verify(&ProvenanceManifest::load(&left)?, &ProvenanceManifest::load(&right)?);
            writeln!(stdout, "{report}")?;
            if !report.is_identical() {
                return Ok(ExitCode::from(EXIT_GATE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Io { .. } => EXIT_IO,
            Error::GateFailed(_) => EXIT_GATE,
            _ => EXIT_VALIDATION,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(exit_code(&err))
        }
    }
}
