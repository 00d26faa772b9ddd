//! Negation, history and experiencer modifiers from trigger-phrase windows.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Token;

use super::index::normalize_term;
use super::segment::Sentence;

pub const DEFAULT_WINDOW_TOKENS: usize = 6;

const DEFAULT_NEGATION_PRE: &str = include_str!("../../data/lexicons/negation_pre.txt");
const DEFAULT_NEGATION_TERMINATORS: &str = include_str!("../../data/lexicons/negation_terminators.txt");
const DEFAULT_HISTORY: &str = include_str!("../../data/lexicons/history.txt");
const DEFAULT_EXPERIENCER: &str = include_str!("../../data/lexicons/experiencer.txt");

/// The three NOTE_NLP term modifiers, in their serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modifier {
    ExperiencerOther,
    HistoryOfPast,
    PolarityNegated,
}

impl Modifier {
    pub const ALL: [Modifier; 3] = [Modifier::ExperiencerOther, Modifier::HistoryOfPast, Modifier::PolarityNegated];

    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::ExperiencerOther => "experiencer_other",
            Modifier::HistoryOfPast => "history_of_past",
            Modifier::PolarityNegated => "polarity_negated",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModifierSet {
    pub experiencer_other: bool,
    pub history_of_past: bool,
    pub polarity_negated: bool,
}

impl ModifierSet {
    pub fn contains(&self, m: Modifier) -> bool {
        match m {
            Modifier::ExperiencerOther => self.experiencer_other,
            Modifier::HistoryOfPast => self.history_of_past,
            Modifier::PolarityNegated => self.polarity_negated,
        }
    }

    pub fn insert(&mut self, m: Modifier) {
        match m {
            Modifier::ExperiencerOther => self.experiencer_other = true,
            Modifier::HistoryOfPast => self.history_of_past = true,
            Modifier::PolarityNegated => self.polarity_negated = true,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.experiencer_other || self.history_of_past || self.polarity_negated)
    }

    pub fn iter(&self) -> impl Iterator<Item = Modifier> + '_ {
        Modifier::ALL.into_iter().filter(|m| self.contains(*m))
    }
}

impl FromIterator<Modifier> for ModifierSet {
    fn from_iter<I: IntoIterator<Item = Modifier>>(iter: I) -> Self {
        let mut set = ModifierSet::default();
        for m in iter {
            set.insert(m);
        }
        set
    }
}

/// Comma-joined in fixed order; empty when no modifier applies.
impl fmt::Display for ModifierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.iter().map(Modifier::as_str).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ModifierSet {
    type Err = String;

    /// Accepts exactly what `Display` produces.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(ModifierSet::default());
        }
        let mut set = ModifierSet::default();
        let mut last: Option<Modifier> = None;
        for part in s.split(',') {
            let m = Modifier::ALL
                .into_iter()
                .find(|m| m.as_str() == part)
                .ok_or_else(|| format!("unknown term modifier '{part}'"))?;
            if last.is_some_and(|l| l >= m) {
                return Err(format!("term modifiers out of order or repeated in '{s}'"));
            }
            set.insert(m);
            last = Some(m);
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum TriggerKind {
    Negation,
    Terminator,
    History,
    Experiencer,
}

#[derive(Debug, Clone)]
pub struct ContextLexicons {
    pub negation_pre: Vec<String>,
    pub negation_terminators: Vec<String>,
    pub history_triggers: Vec<String>,
    pub experiencer_triggers: Vec<String>,
    pub window_tokens: usize,
}

fn phrases(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(normalize_term)
        .filter(|p| !p.is_empty())
        .collect()
}

impl Default for ContextLexicons {
    fn default() -> Self {
        ContextLexicons {
            negation_pre: phrases(DEFAULT_NEGATION_PRE),
            negation_terminators: phrases(DEFAULT_NEGATION_TERMINATORS),
            history_triggers: phrases(DEFAULT_HISTORY),
            experiencer_triggers: phrases(DEFAULT_EXPERIENCER),
            window_tokens: DEFAULT_WINDOW_TOKENS,
        }
    }
}

impl ContextLexicons {
    /// Load `negation_pre.txt`, `negation_terminators.txt`, `history.txt` and
    /// `experiencer.txt` from `dir`; any file that is absent keeps its default.
    pub fn load_dir(dir: &Path, window_tokens: usize) -> Result<ContextLexicons> {
        if window_tokens == 0 {
            return Err(Error::Validation("window_tokens must be at least 1".into()));
        }
        let mut lex = ContextLexicons {
            window_tokens,
            ..ContextLexicons::default()
        };
        for (file, slot) in [
            ("negation_pre.txt", &mut lex.negation_pre),
            ("negation_terminators.txt", &mut lex.negation_terminators),
            ("history.txt", &mut lex.history_triggers),
            ("experiencer.txt", &mut lex.experiencer_triggers),
        ] {
            let path = dir.join(file);
            if path.exists() {
                *slot = phrases(&std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?);
            }
        }
        Ok(lex)
    }

    pub fn matcher(&self) -> TriggerMatcher {
        let mut phrases: HashMap<String, Vec<TriggerKind>> = HashMap::new();
        let mut max_len = 0;
        for (list, kind) in [
            (&self.negation_pre, TriggerKind::Negation),
            (&self.negation_terminators, TriggerKind::Terminator),
            (&self.history_triggers, TriggerKind::History),
            (&self.experiencer_triggers, TriggerKind::Experiencer),
        ] {
            for p in list {
                max_len = max_len.max(p.split(' ').count());
                let kinds = phrases.entry(p.clone()).or_default();
                if !kinds.contains(&kind) {
                    kinds.push(kind);
                }
            }
        }
        TriggerMatcher {
            phrases,
            max_len,
            window: self.window_tokens,
        }
    }
}

/// Precompiled trigger phrases from all four lexicons.
#[derive(Debug, Clone)]
pub struct TriggerMatcher {
    phrases: HashMap<String, Vec<TriggerKind>>,
    max_len: usize,
    window: usize,
}

#[derive(Debug, Clone)]
struct TriggerHit {
    first: usize,
    last: usize,
    kinds: Vec<TriggerKind>,
}

impl TriggerMatcher {
    /// Longest-match trigger scan over `tokens[range]`.
    fn scan(&self, tokens: &[String], from: usize, to: usize, out: &mut Vec<TriggerHit>) {
        let mut i = from;
        while i < to {
            let mut best: Option<(usize, &Vec<TriggerKind>)> = None;
            let mut key = String::new();
            for j in i..to.min(i + self.max_len) {
                if j > i {
                    key.push(' ');
                }
                key.push_str(&tokens[j]);
                if let Some(kinds) = self.phrases.get(&key) {
                    best = Some((j, kinds));
                }
            }
            match best {
                Some((j, kinds)) => {
                    out.push(TriggerHit {
                        first: i,
                        last: j,
                        kinds: kinds.clone(),
                    });
                    i = j + 1;
                }
                None => i += 1,
            }
        }
    }

    /// Modifiers for the mention covering sentence tokens `[first, end)`.
    ///
    /// Negated: a negation trigger ends at most `window` tokens before the
    /// mention with no terminator in between. History: a history trigger
    /// anywhere earlier in the sentence. Experiencer: an experiencer trigger
    /// within `window` tokens on either side. Triggers are matched longest
    /// first, so "family history of" counts only as an experiencer cue.
    pub fn modifiers(&self, sentence_tokens: &[Token], first: usize, end: usize) -> ModifierSet {
        let norm: Vec<String> = sentence_tokens.iter().map(Token::normalized).collect();
        let mut hits = Vec::new();
        self.scan(&norm, 0, first, &mut hits);
        self.scan(&norm, end, norm.len(), &mut hits);

        let mut set = ModifierSet::default();
        let has = |h: &TriggerHit, k: TriggerKind| h.kinds.contains(&k);
        for h in &hits {
            if h.last < first {
                let gap = first - h.last - 1;
                if has(h, TriggerKind::Negation) && gap <= self.window {
                    let terminated = hits
                        .iter()
                        .any(|t| has(t, TriggerKind::Terminator) && t.first > h.last && t.last < first);
                    if !terminated {
                        set.polarity_negated = true;
                    }
                }
                if has(h, TriggerKind::History) {
                    set.history_of_past = true;
                }
                if has(h, TriggerKind::Experiencer) && gap <= self.window {
                    set.experiencer_other = true;
                }
            } else if h.first >= end && has(h, TriggerKind::Experiencer) && h.first - end <= self.window {
                set.experiencer_other = true;
            }
        }
        set
    }
}

/// Modifiers for a mention over sentence tokens `[first, end)`.
pub fn detect_modifiers(sentence: &Sentence, first: usize, end: usize, lexicons: &ContextLexicons) -> ModifierSet {
    lexicons.matcher().modifiers(&sentence.tokens, first, end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::segment::segment;

    fn mods(sentence: &str, mention: &str) -> ModifierSet {
        let s = &segment(sentence)[0];
        let words: Vec<String> = mention.split(' ').map(str::to_lowercase).collect();
        let toks: Vec<String> = s.tokens.iter().map(Token::normalized).collect();
        let first = (0..toks.len())
            .find(|&i| toks[i..].starts_with(&words))
            .expect("mention present");
        detect_modifiers(s, first, first + words.len(), &ContextLexicons::default())
    }

    fn set(ms: &[Modifier]) -> ModifierSet {
        ms.iter().copied().collect()
    }

    use Modifier::*;

    #[test]
    fn experiencer() {
        assert_eq!(mods("Coronary artery disease in father", "coronary artery disease"), set(&[ExperiencerOther]));
        assert_eq!(mods("The patient has coronary artery disease", "coronary artery disease"), set(&[]));
        assert_eq!(mods("Family history of diabetes", "diabetes"), set(&[ExperiencerOther]));
    }

    #[test]
    fn negation() {
        assert_eq!(
            mods("the patient does not have any neurologic deficits", "neurologic deficits"),
            set(&[PolarityNegated])
        );
        assert_eq!(mods("she is being dialyzed", "dialyzed"), set(&[]));
        assert_eq!(mods("no fever but cough", "cough"), set(&[]));
        assert_eq!(mods("no a b c d e f g fever", "fever"), set(&[]));
        assert_eq!(mods("no a b c d e f fever", "fever"), set(&[PolarityNegated]));
    }

    #[test]
    fn history_and_future() {
        assert_eq!(mods("She had hyperlipidemia", "hyperlipidemia"), set(&[HistoryOfPast]));
        assert_eq!(mods("she has chest pain", "chest pain"), set(&[]));
        assert_eq!(mods("Will schedule screening mammogram at next visit", "screening mammogram"), set(&[]));
        assert_eq!(mods("history of stroke with no residual deficits", "stroke"), set(&[HistoryOfPast]));
    }

    #[test]
    fn modifier_strings() {
        let all = set(&[PolarityNegated, ExperiencerOther, HistoryOfPast]);
        assert_eq!(all.to_string(), "experiencer_other,history_of_past,polarity_negated");
        assert_eq!(ModifierSet::default().to_string(), "");
        for s in ["", "history_of_past", "experiencer_other,polarity_negated", "experiencer_other,history_of_past,polarity_negated"] {
            assert_eq!(s.parse::<ModifierSet>().unwrap().to_string(), s);
        }
        assert!("polarity_negated,experiencer_other".parse::<ModifierSet>().is_err());
        assert!("negated".parse::<ModifierSet>().is_err());
        assert!("history_of_past,history_of_past".parse::<ModifierSet>().is_err());
    }
}
