//! PHI and word-count statistics plus the manual-review sampling protocols.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Note, PhiCategory};
use crate::detect::{DetectionMethod, Span};
use crate::merge::MergedFinding;
use crate::text::tokenize;

/// Inclusive lower bounds of the findings-per-note histogram buckets.
pub const HISTOGRAM_BOUNDS: [usize; 7] = [0, 1, 11, 26, 51, 101, 501];

pub const DEFAULT_TOP_TYPES: usize = 200;
pub const DEFAULT_POOL: usize = 1000;
pub const DEFAULT_REVIEW: usize = 100;
pub const DEFAULT_REVIEW_WORDS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub min: usize,
    /// Inclusive; `None` for the open last bucket.
    pub max: Option<usize>,
    pub notes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCountSummary {
    pub median: f64,
    pub fraction_over_1000: f64,
    pub fraction_over_5000: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiStatsReport {
    pub notes_total: usize,
    pub notes_zero_phi: usize,
    pub notes_over_100_phi: usize,
    pub findings_total: usize,
    pub words_total: u64,
    pub phi_words_total: u64,
    pub phi_word_fraction: f64,
    pub findings_histogram: Vec<HistogramBucket>,
    /// category -> winning method -> count
    pub category_method: BTreeMap<String, BTreeMap<String, usize>>,
    pub word_counts: WordCountSummary,
}

impl PhiStatsReport {
    pub fn histogram_total(&self) -> usize {
        self.findings_histogram.iter().map(|b| b.notes).sum()
    }

    pub fn matrix_total(&self) -> usize {
        self.category_method.values().flat_map(|row| row.values()).sum()
    }
}

fn bucket_of(count: usize) -> usize {
    HISTOGRAM_BOUNDS.iter().rposition(|&lo| count >= lo).unwrap_or(0)
}

/// Number of tokens overlapped by at least one span. `spans` must be sorted.
pub fn overlapped_tokens(text: &str, spans: &[Span]) -> usize {
    let tokens = tokenize(text);
    let mut j = 0;
    let mut n = 0;
    for t in &tokens {
        let tok = Span::new(t.start, t.end);
        while j < spans.len() && spans[j].end <= tok.start {
            j += 1;
        }
        if spans[j..].iter().take_while(|s| s.start < tok.end).any(|s| s.overlaps(&tok)) {
            n += 1;
        }
    }
    n
}

#[derive(Default)]
struct Tally {
    notes: usize,
    zero: usize,
    over_100: usize,
    findings: usize,
    words: u64,
    phi_words: u64,
    histogram: [usize; HISTOGRAM_BOUNDS.len()],
    matrix: BTreeMap<(PhiCategory, DetectionMethod), usize>,
    word_counts: Vec<usize>,
}

impl Tally {
    fn add(mut self, note: &Note, findings: &[MergedFinding]) -> Tally {
        let words = tokenize(&note.text).len();
        let mut spans: Vec<Span> = findings.iter().map(|f| f.span).collect();
        spans.sort();
        self.notes += 1;
        self.zero += usize::from(findings.is_empty());
        self.over_100 += usize::from(findings.len() > 100);
        self.findings += findings.len();
        self.words += words as u64;
        self.phi_words += overlapped_tokens(&note.text, &spans) as u64;
        self.histogram[bucket_of(findings.len())] += 1;
        for f in findings {
            *self.matrix.entry((f.category, f.winning_method)).or_default() += 1;
        }
        self.word_counts.push(words);
        self
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.notes += other.notes;
        self.zero += other.zero;
        self.over_100 += other.over_100;
        self.findings += other.findings;
        self.words += other.words;
        self.phi_words += other.phi_words;
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        for (k, v) in other.matrix {
            *self.matrix.entry(k).or_default() += v;
        }
        self.word_counts.extend(other.word_counts);
        self
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn median(sorted: &[usize]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

/// Aggregate statistics over `notes`. Notes absent from `findings` have none;
/// findings for note ids outside `notes` are ignored.
pub fn compute_phi_stats(notes: &[Note], findings: &BTreeMap<String, Vec<MergedFinding>>) -> PhiStatsReport {
    let tally = notes
        .par_iter()
        .fold(Tally::default, |t, note| {
            let f = findings.get(&note.note_id).map(Vec::as_slice).unwrap_or(&[]);
            t.add(note, f)
        })
        .reduce(Tally::default, Tally::merge);

    let mut word_counts = tally.word_counts;
    word_counts.sort_unstable();
    let over = |limit: usize| ratio(word_counts.iter().filter(|&&w| w > limit).count() as u64, tally.notes as u64);
    let word_summary = WordCountSummary {
        median: median(&word_counts),
        fraction_over_1000: over(1000),
        fraction_over_5000: over(5000),
    };

    let findings_histogram = HISTOGRAM_BOUNDS
        .iter()
        .enumerate()
        .map(|(i, &min)| HistogramBucket {
            min,
            max: HISTOGRAM_BOUNDS.get(i + 1).map(|next| next - 1),
            notes: tally.histogram[i],
        })
        .collect();

    let mut category_method: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for ((category, method), n) in tally.matrix {
        *category_method
            .entry(category.as_str().to_string())
            .or_default()
            .entry(method.as_str().to_string())
            .or_default() += n;
    }

    PhiStatsReport {
        notes_total: tally.notes,
        notes_zero_phi: tally.zero,
        notes_over_100_phi: tally.over_100,
        findings_total: tally.findings,
        words_total: tally.words,
        phi_words_total: tally.phi_words,
        phi_word_fraction: ratio(tally.phi_words, tally.words),
        findings_histogram,
        category_method,
        word_counts: word_summary,
    }
}

/// Two-step review sample: restrict to the most frequent note types, draw a
/// uniform pool, then keep the notes with the most findings (ties: more
/// words, then note_id).
pub fn sample_notes_for_review(
    notes: &[Note],
    findings: &BTreeMap<String, Vec<MergedFinding>>,
    seed: u64,
    top_types: usize,
    pool: usize,
    review: usize,
) -> Vec<String> {
    let mut type_counts: HashMap<&str, usize> = HashMap::new();
    for n in notes {
        *type_counts.entry(n.note_type.as_str()).or_default() += 1;
    }
    let mut types: Vec<(&str, usize)> = type_counts.into_iter().collect();
    types.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let eligible_types: BTreeSet<&str> = types.into_iter().take(top_types).map(|(t, _)| t).collect();

    let mut eligible: Vec<&Note> = notes.iter().filter(|n| eligible_types.contains(n.note_type.as_str())).collect();
    eligible.sort_by(|a, b| a.note_id.cmp(&b.note_id));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn: Vec<usize> = sample(&mut rng, eligible.len(), pool.min(eligible.len())).into_vec();
    drawn.sort_unstable();

    let mut ranked: Vec<(usize, usize, &str)> = drawn
        .into_iter()
        .map(|i| {
            let n = eligible[i];
            let count = findings.get(&n.note_id).map_or(0, Vec::len);
            (count, tokenize(&n.text).len(), n.note_id.as_str())
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(b.2)));
    ranked.into_iter().take(review).map(|(_, _, id)| id.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFrequency {
    pub word: String,
    pub count: usize,
}

/// The `review_words` rarest case-folded words across all rows, rarest first, ties alphabetical.
pub fn flowsheet_low_frequency_review<S: AsRef<str>>(rows: &[S], review_words: usize) -> Vec<WordFrequency> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for row in rows {
        for t in tokenize(row.as_ref()) {
            *counts.entry(t.normalized()).or_default() += 1;
        }
    }
    let mut words: Vec<WordFrequency> = counts.into_iter().map(|(word, count)| WordFrequency { word, count }).collect();
    words.sort_by(|a, b| a.count.cmp(&b.count).then_with(|| a.word.cmp(&b.word)));
    words.truncate(review_words);
    words
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finding(start: usize, end: usize, category: PhiCategory, method: DetectionMethod) -> MergedFinding {
        MergedFinding {
            span: Span::new(start, end),
            category,
            winning_method: method,
            contributors: vec![(method, category)],
        }
    }

    fn typed(id: &str, note_type: &str, text: &str) -> Note {
        let mut n = Note::new(id, "p", text);
        n.note_type = note_type.into();
        n
    }

    #[test]
    fn no_findings_means_all_zero_phi() {
        let notes: Vec<Note> = (0..3).map(|i| Note::new(format!("n{i}"), "p", "some words here")).collect();
        let r = compute_phi_stats(&notes, &BTreeMap::new());
        assert_eq!((r.notes_total, r.notes_zero_phi, r.histogram_total()), (3, 3, 3));
        assert_eq!(r.phi_word_fraction, 0.0);
    }

    #[test]
    fn two_of_ten_words() {
        let text = "Seen by John Smith today for a routine annual checkup";
        let notes = vec![Note::new("n", "p", text)];
        let findings = BTreeMap::from([("n".to_string(), vec![finding(8, 18, PhiCategory::PatientName, DetectionMethod::Lookup)])]);
        let r = compute_phi_stats(&notes, &findings);
        assert_eq!((r.words_total, r.phi_words_total), (10, 2));
        assert_eq!(r.phi_word_fraction, 0.2);
        assert_eq!(r.category_method["PatientName"]["Lookup"], 1);
    }

    #[test]
    fn partial_token_overlap_counts_once() {
        assert_eq!(overlapped_tokens("alpha beta gamma", &[Span::new(3, 7), Span::new(8, 9)]), 2);
        assert_eq!(overlapped_tokens("alpha beta", &[Span::new(5, 6)]), 0);
    }

    #[test]
    fn histogram_buckets() {
        assert_eq!(bucket_of(0), 0);
        assert_eq!(bucket_of(1), 1);
        assert_eq!(bucket_of(10), 1);
        assert_eq!(bucket_of(100), 4);
        assert_eq!(bucket_of(101), 5);
        assert_eq!(bucket_of(10_000), 6);
    }

    #[test]
    fn median_and_fractions() {
        let long = "w ".repeat(1001);
        let notes = vec![Note::new("a", "p", "one two"), Note::new("b", "p", "one two three four"), Note::new("c", "p", &long)];
        let r = compute_phi_stats(&notes, &BTreeMap::new());
        assert_eq!(r.word_counts.median, 4.0);
        assert!((r.word_counts.fraction_over_1000 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.word_counts.fraction_over_5000, 0.0);
    }

    #[test]
    fn sampling_clamps_and_is_deterministic() {
        let notes: Vec<Note> = (0..40).map(|i| typed(&format!("n{i:02}"), ["a", "b", "c", "d", "e"][i % 5], "x y")).collect();
        let s1 = sample_notes_for_review(&notes, &BTreeMap::new(), 9, 200, 1000, 100);
        assert_eq!(s1.len(), 40);
        let s2 = sample_notes_for_review(&notes, &BTreeMap::new(), 9, 200, 10, 5);
        assert_eq!(s2, sample_notes_for_review(&notes, &BTreeMap::new(), 9, 200, 10, 5));
        assert_eq!(s2.len(), 5);
    }

    #[test]
    fn sampling_restricts_types_and_ranks_by_findings() {
        let mut notes: Vec<Note> = (0..6).map(|i| typed(&format!("common{i}"), "progress", "a b c")).collect();
        notes.push(typed("rare", "letter", "a"));
        let findings = BTreeMap::from([
            ("common3".to_string(), vec![finding(0, 1, PhiCategory::Date, DetectionMethod::Pattern); 2]),
            ("common1".to_string(), vec![finding(0, 1, PhiCategory::Date, DetectionMethod::Pattern)]),
        ]);
        let s = sample_notes_for_review(&notes, &findings, 1, 1, 100, 3);
        assert_eq!(s, ["common3", "common1", "common0"]);
    }

    #[test]
    fn flowsheet_examples() {
        let words: Vec<String> = flowsheet_low_frequency_review(&["bp 120", "bp 130"], 10).into_iter().map(|w| w.word).collect();
        assert_eq!(words, ["120", "130", "bp"]);
        assert_eq!(flowsheet_low_frequency_review(&["a b c"], 2).len(), 2);
        assert!(flowsheet_low_frequency_review::<&str>(&[], 5).is_empty());
    }

    proptest! {
        #[test]
        fn report_invariants(counts in proptest::collection::vec((0usize..4, 0usize..130), 0..20)) {
            let mut notes = Vec::new();
            let mut findings = BTreeMap::new();
            for (i, (words, n)) in counts.iter().enumerate() {
                let id = format!("n{i}");
                notes.push(Note::new(&id, "p", "w ".repeat(*words)));
                let fs: Vec<MergedFinding> = (0..*n)
                    .map(|k| finding(k, k + 1, PhiCategory::ALL[k % 13], DetectionMethod::ALL[k % 3]))
                    .collect();
                findings.insert(id, fs);
            }
            let r = compute_phi_stats(&notes, &findings);
            prop_assert_eq!(r.histogram_total(), r.notes_total);
            prop_assert_eq!(r.matrix_total(), r.findings_total);
            prop_assert_eq!(r.findings_total, counts.iter().map(|c| c.1).sum::<usize>());
            prop_assert!((0.0..=1.0).contains(&r.phi_word_fraction));
            prop_assert!((0.0..=1.0).contains(&r.word_counts.fraction_over_1000));
        }

        #[test]
        fn flowsheet_sorted(rows in proptest::collection::vec("[a-c ]{0,12}", 0..10)) {
            let out = flowsheet_low_frequency_review(&rows, 100);
            for w in out.windows(2) {
                prop_assert!((w[0].count, &w[0].word) < (w[1].count, &w[1].word));
            }
        }
    }
}
