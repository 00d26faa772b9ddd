//! Consolidation of findings from all detectors into disjoint redaction regions.
//!
//! Overlapping findings (of any category) collapse into one region spanning
//! their union. The region's category and method come from the winning
//! finding: Lookup beats Pattern beats NER, then the longer span, then the
//! earlier start, then [`PhiCategory`] declaration order.

use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::corpus::PhiCategory;
use crate::detect::{DetectionMethod, PhiFinding, Span};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedFinding {
    pub span: Span,
    pub category: PhiCategory,
    pub winning_method: DetectionMethod,
    /// Distinct (method, category) pairs absorbed into this region, sorted.
    pub contributors: Vec<(DetectionMethod, PhiCategory)>,
}

fn precedence_key(f: &PhiFinding) -> (u8, Reverse<usize>, usize, PhiCategory) {
    (f.method.precedence(), Reverse(f.span.len()), f.span.start, f.category)
}

pub fn merge_findings(findings: &[PhiFinding]) -> Result<Vec<MergedFinding>> {
    if let Some(bad) = findings.iter().find(|f| f.span.is_empty()) {
        return Err(Error::Contract(format!(
            "finding in note '{}' has empty or inverted span {:?}",
            bad.note_id, bad.span
        )));
    }
    if let Some(first) = findings.first() {
        if let Some(other) = findings.iter().find(|f| f.note_id != first.note_id) {
            return Err(Error::Contract(format!(
                "cannot merge findings across notes '{}' and '{}'",
                first.note_id, other.note_id
            )));
        }
    }

    let mut order: Vec<&PhiFinding> = findings.iter().collect();
    order.sort_by_key(|f| (f.span.start, f.span.end));

    let mut merged = Vec::new();
    let mut cluster: Vec<&PhiFinding> = Vec::new();
    let mut cluster_end = 0;
    for f in order {
        if !cluster.is_empty() && f.span.start >= cluster_end {
            merged.push(close_cluster(&cluster, cluster_end));
            cluster.clear();
        }
        cluster_end = if cluster.is_empty() { f.span.end } else { cluster_end.max(f.span.end) };
        cluster.push(f);
    }
    if !cluster.is_empty() {
        merged.push(close_cluster(&cluster, cluster_end));
    }
    Ok(merged)
}

fn close_cluster(cluster: &[&PhiFinding], end: usize) -> MergedFinding {
    let winner = cluster
        .iter()
        .min_by_key(|f| precedence_key(f))
        .expect("cluster is non-empty");
    let mut contributors: Vec<(DetectionMethod, PhiCategory)> = cluster.iter().map(|f| (f.method, f.category)).collect();
    contributors.sort();
    contributors.dedup();
    MergedFinding {
        span: Span::new(cluster[0].span.start, end),
        category: winner.category,
        winning_method: winner.method,
        contributors,
    }
}

impl MergedFinding {
    /// View this region as a finding again, for re-merging or export.
    pub fn as_finding(&self, note_id: &str, text: &str) -> PhiFinding {
        let map = crate::text::CharMap::new(text);
        PhiFinding {
            note_id: note_id.to_string(),
            span: self.span,
            category: self.category,
            method: self.winning_method,
            matched_text: map.slice(text, self.span.start.min(map.char_count()), self.span.end.min(map.char_count())).to_string(),
            source_value: String::new(),
            date: None,
        }
    }
}

/// One line of the merged-findings dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteFindings {
    pub note_id: String,
    pub findings: Vec<MergedFinding>,
}
