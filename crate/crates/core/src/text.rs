//! Character-offset utilities shared by every stage.
//!
//! All spans in this crate are half-open ranges over Unicode scalar values,
//! never bytes. [`CharMap`] converts between the two; [`NormalizedText`]
//! keeps a case-folded, whitespace-collapsed view of a string together with
//! the original character offset of each normalized character.

use caseless::Caseless;

/// Case-fold and collapse internal whitespace runs to one space; trims the ends.
pub fn normalize(s: &str) -> String {
    NormalizedText::new(s).text
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte/char offset conversion for one string.
#[derive(Debug, Clone)]
pub struct CharMap {
    // byte offset of each char start, plus a trailing entry for the string length
    starts: Vec<usize>,
}

impl CharMap {
    pub fn new(text: &str) -> Self {
        let mut starts: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        starts.push(text.len());
        CharMap { starts }
    }

    pub fn char_count(&self) -> usize {
        self.starts.len() - 1
    }

    /// Char index of a byte offset that lies on a char boundary.
    pub fn to_char(&self, byte: usize) -> usize {
        match self.starts.binary_search(&byte) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn to_byte(&self, ch: usize) -> usize {
        self.starts[ch.min(self.char_count())]
    }

    pub fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> &'a str {
        &text[self.to_byte(start)..self.to_byte(end)]
    }
}

/// Slice `text` by char offsets. Allocates a [`CharMap`]; use one directly in loops.
pub fn slice_chars(text: &str, start: usize, end: usize) -> &str {
    CharMap::new(text).slice(text, start, end)
}

/// A normalized view of some text with a back-mapping to original char offsets.
#[derive(Debug, Clone)]
pub struct NormalizedText {
    text: String,
    chars: Vec<char>,
    origin: Vec<usize>,
}

impl NormalizedText {
    pub fn new(original: &str) -> Self {
        let mut chars = Vec::with_capacity(original.len());
        let mut origin = Vec::with_capacity(original.len());
        let mut pending_space: Option<usize> = None;
        for (i, c) in original.chars().enumerate() {
            if c.is_whitespace() {
                if !chars.is_empty() && pending_space.is_none() {
                    pending_space = Some(i);
                }
                continue;
            }
            if let Some(at) = pending_space.take() {
                chars.push(' ');
                origin.push(at);
            }
            for folded in std::iter::once(c).default_case_fold() {
                chars.push(folded);
                origin.push(i);
            }
        }
        NormalizedText {
            text: chars.iter().collect(),
            chars,
            origin,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Every whole-word occurrence of an already-normalized needle, as
    /// original-text char spans. Occurrences may overlap.
    ///
    /// A boundary is only required on a side where the needle itself starts or
    /// ends with a letter or digit.
    pub fn find_all(&self, needle: &str) -> Vec<(usize, usize)> {
        let needle: Vec<char> = needle.chars().collect();
        let n = needle.len();
        let mut out = Vec::new();
        if n == 0 || n > self.chars.len() {
            return out;
        }
        let check_left = is_word_char(needle[0]);
        let check_right = is_word_char(needle[n - 1]);
        for s in 0..=(self.chars.len() - n) {
            if self.chars[s..s + n] != needle[..] {
                continue;
            }
            if check_left && s > 0 && is_word_char(self.chars[s - 1]) {
                continue;
            }
            let e = s + n;
            if check_right && e < self.chars.len() && is_word_char(self.chars[e]) {
                continue;
            }
            out.push((self.origin[s], self.origin[e - 1] + 1));
        }
        out
    }

    pub fn contains_word(&self, needle: &str) -> bool {
        !self.find_all(needle).is_empty()
    }
}

/// A word token with its char offsets in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Token {
    /// Case-folded, with typographic apostrophes mapped to `'`.
    pub fn normalized(&self) -> String {
        self.text
            .chars()
            .map(|c| if c == '\u{2019}' { '\'' } else { c })
            .default_case_fold()
            .collect()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Maximal runs of letters, digits and apostrophes. Apostrophes at either
/// end of a run are not part of the token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Vec<(usize, char)> = Vec::new();
    let mut flush = |run: &mut Vec<(usize, char)>| {
        let first = run.iter().position(|(_, c)| !is_apostrophe(*c));
        let last = run.iter().rposition(|(_, c)| !is_apostrophe(*c));
        if let (Some(a), Some(b)) = (first, last) {
            tokens.push(Token {
                start: run[a].0,
                end: run[b].0 + 1,
                text: run[a..=b].iter().map(|(_, c)| *c).collect(),
            });
        }
        run.clear();
    };
    for (i, c) in text.chars().enumerate() {
        if c.is_alphanumeric() || is_apostrophe(c) {
            run.push((i, c));
        } else if !run.is_empty() {
            flush(&mut run);
        }
    }
    if !run.is_empty() {
        flush(&mut run);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_folds_and_collapses() {
        assert_eq!(normalize("  Jonathan \n\t SMITH "), "jonathan smith");
        assert_eq!(normalize("Straße"), "strasse");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn find_all_maps_back_to_original_offsets() {
        let text = "Call JONATHAN\n  Smith today";
        let norm = NormalizedText::new(text);
        let hits = norm.find_all("jonathan smith");
        assert_eq!(hits, vec![(5, 21)]);
        assert_eq!(slice_chars(text, 5, 21), "JONATHAN\n  Smith");
    }

    #[test]
    fn find_all_respects_word_boundaries() {
        let norm = NormalizedText::new("Smithfield Smith smith.");
        assert_eq!(norm.find_all("smith"), vec![(11, 16), (17, 22)]);
        // punctuation-edged needles skip the boundary test on that side
        let norm = NormalizedText::new("x(650)555");
        assert_eq!(norm.find_all("(650)"), vec![(1, 6)]);
    }

    #[test]
    fn char_map_handles_multibyte() {
        let text = "é1ü2";
        let map = CharMap::new(text);
        assert_eq!(map.char_count(), 4);
        assert_eq!(map.to_char(2), 1);
        assert_eq!(map.slice(text, 1, 3), "1ü");
    }

    #[test]
    fn tokenize_runs() {
        let toks = tokenize("Dr. O'Neil's 'fever' 37.5");
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["Dr", "O'Neil's", "fever", "37", "5"]);
        assert_eq!((toks[2].start, toks[2].end), (14, 19));
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ' ").is_empty());
    }
}
