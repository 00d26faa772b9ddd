use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{char_len, tokenize, Token};

/// Vocabulary terms shorter than this (normalized) are never indexed.
pub const MIN_TERM_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermIndexEntry {
    /// Normalized: case-folded tokens joined by single spaces.
    pub term: String,
    pub sui: String,
    pub cui: String,
    pub concept_id: i64,
    pub vocabulary_id: String,
    pub domain_id: String,
}

/// The standard concept a retained entry resolves to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConceptRef {
    pub concept_id: i64,
    pub vocabulary_id: String,
    pub domain_id: String,
}

pub fn map_to_concept(entry: &TermIndexEntry) -> ConceptRef {
    ConceptRef {
        concept_id: entry.concept_id,
        vocabulary_id: entry.vocabulary_id.clone(),
        domain_id: entry.domain_id.clone(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub input_rows: usize,
    pub retained: usize,
    pub dropped_short: usize,
    pub dropped_ambiguous_list: usize,
    /// Rows whose SUI still maps to several CUIs after the other rules.
    pub dropped_ambiguous_sui: usize,
    /// Rows whose normalized term maps to several concepts.
    pub dropped_ambiguous_term: usize,
    pub dropped_duplicate: usize,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<String, usize>,
    entry: Option<usize>,
}

/// Pruned vocabulary keyed by normalized token sequence.
#[derive(Debug, Clone)]
pub struct TermIndex {
    entries: Vec<TermIndexEntry>,
    nodes: Vec<TrieNode>,
    report: PruneReport,
}

pub fn normalize_term(term: &str) -> String {
    tokenize(term).iter().map(Token::normalized).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    entries: Vec<TermIndexEntry>,
    report: PruneReport,
}

impl TermIndex {
    fn from_entries(entries: Vec<TermIndexEntry>, report: PruneReport) -> TermIndex {
        let mut nodes = vec![TrieNode::default()];
        for (idx, e) in entries.iter().enumerate() {
            let mut node = 0;
            for tok in e.term.split(' ') {
                node = match nodes[node].children.get(tok) {
                    Some(&n) => n,
                    None => {
                        nodes.push(TrieNode::default());
                        let n = nodes.len() - 1;
                        nodes[node].children.insert(tok.to_string(), n);
                        n
                    }
                };
            }
            nodes[node].entry = Some(idx);
        }
        TermIndex { entries, nodes, report }
    }

    /// Prune raw vocabulary rows: drop short terms, listed ambiguous terms,
    /// SUIs mapping to more than one CUI, and terms mapping to more than one concept.
    pub fn build(rows: Vec<TermIndexEntry>, ambiguous: &[String]) -> TermIndex {
        let mut report = PruneReport {
            input_rows: rows.len(),
            ..Default::default()
        };
        let ambiguous: HashSet<String> = ambiguous.iter().map(|a| normalize_term(a)).collect();
        let mut kept: Vec<TermIndexEntry> = Vec::new();
        for mut row in rows {
            row.term = normalize_term(&row.term);
            if char_len(&row.term) < MIN_TERM_LEN {
                report.dropped_short += 1;
            } else if ambiguous.contains(&row.term) {
                report.dropped_ambiguous_list += 1;
            } else {
                kept.push(row);
            }
        }

        let mut sui_cuis: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for r in &kept {
            sui_cuis.entry(&r.sui).or_default().insert(&r.cui);
        }
        let ambiguous_suis: HashSet<String> = sui_cuis
            .into_iter()
            .filter(|(_, cuis)| cuis.len() > 1)
            .map(|(s, _)| s.to_string())
            .collect();
        let before = kept.len();
        kept.retain(|r| !ambiguous_suis.contains(&r.sui));
        report.dropped_ambiguous_sui = before - kept.len();

        let mut term_concepts: HashMap<&str, BTreeSet<i64>> = HashMap::new();
        for r in &kept {
            term_concepts.entry(&r.term).or_default().insert(r.concept_id);
        }
        let ambiguous_terms: HashSet<String> = term_concepts
            .into_iter()
            .filter(|(_, c)| c.len() > 1)
            .map(|(t, _)| t.to_string())
            .collect();
        let before = kept.len();
        kept.retain(|r| !ambiguous_terms.contains(&r.term));
        report.dropped_ambiguous_term = before - kept.len();

        let mut seen = HashSet::new();
        let before = kept.len();
        kept.retain(|r| seen.insert(r.term.clone()));
        report.dropped_duplicate = before - kept.len();
        report.retained = kept.len();
        TermIndex::from_entries(kept, report)
    }

    /// Read a vocabulary TSV with a header naming `term`, `sui`, `cui`,
    /// `concept_id`, `vocabulary_id` and `domain_id` (any order, extra columns ignored).
    pub fn read_vocabulary(text: &str, source_name: &str) -> Result<Vec<TermIndexEntry>> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(Error::parse(source_name, 1, "empty vocabulary file"));
        };
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
        let col = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::parse(source_name, 1, format!("missing column '{name}'")))
        };
        let idx = [col("term")?, col("sui")?, col("cui")?, col("concept_id")?, col("vocabulary_id")?, col("domain_id")?];
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let get = |k: usize| {
                fields
                    .get(idx[k])
                    .map(|s| s.trim())
                    .ok_or_else(|| Error::parse(source_name, i + 1, format!("missing field '{}'", cols[idx[k]])))
            };
            let concept_id = get(3)?
                .parse::<i64>()
                .map_err(|e| Error::parse(source_name, i + 1, format!("concept_id: {e}")))?;
            rows.push(TermIndexEntry {
                term: get(0)?.to_string(),
                sui: get(1)?.to_string(),
                cui: get(2)?.to_string(),
                concept_id,
                vocabulary_id: get(4)?.to_string(),
                domain_id: get(5)?.to_string(),
            });
        }
        Ok(rows)
    }

    pub fn build_from_files(vocab_path: &Path, ambiguous_path: Option<&Path>) -> Result<TermIndex> {
        let vocab = std::fs::read_to_string(vocab_path).map_err(|e| Error::io(vocab_path, e))?;
        let rows = TermIndex::read_vocabulary(&vocab, &vocab_path.display().to_string())?;
        let ambiguous = match ambiguous_path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::io(p, e))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect(),
            None => Vec::new(),
        };
        Ok(TermIndex::build(rows, &ambiguous))
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            entries: self.entries.clone(),
            report: self.report.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("serializable");
        s.push('\n');
        s
    }

    /// Load a compiled index written by [`TermIndex::to_json`].
    pub fn load(path: &Path) -> Result<TermIndex> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: IndexFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        Ok(TermIndex::from_entries(file.entries, file.report))
    }

    pub fn entries(&self) -> &[TermIndexEntry] {
        &self.entries
    }

    pub fn report(&self) -> &PruneReport {
        &self.report
    }

    pub fn get(&self, normalized_term: &str) -> Option<&TermIndexEntry> {
        let mut node = 0;
        for tok in normalized_term.split(' ') {
            node = *self.nodes[node].children.get(tok)?;
        }
        self.nodes[node].entry.map(|i| &self.entries[i])
    }

    /// Longest entry starting at `tokens[0]`: (token count, entry).
    pub fn longest_prefix<'a, S: AsRef<str>>(&'a self, tokens: &[S]) -> Option<(usize, &'a TermIndexEntry)> {
        let mut node = 0;
        let mut best = None;
        for (i, tok) in tokens.iter().enumerate() {
            match self.nodes[node].children.get(tok.as_ref()) {
                Some(&n) => node = n,
                None => break,
            }
            if let Some(e) = self.nodes[node].entry {
                best = Some((i + 1, &self.entries[e]));
            }
        }
        best
    }

    /// Retained entry counts per vocabulary.
    pub fn vocabulary_sizes(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.vocabulary_id.as_str()).or_default() += 1;
        }
        m
    }
}
