use crate::text::{tokenize, CharMap, Token};

/// Lower-cased words that end with a period without ending the sentence.
const ABBREVIATIONS: &[&str] = &[
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "vs", "etc", "approx", "pt", "hx", "dx", "tx", "rx", "fig",
    "inc", "co", "mt", "ft", "lt", "col", "gen", "rev", "sgt", "capt", "dept", "univ", "ave", "blvd",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// Char span of the sentence in the source text, whitespace-trimmed.
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        CharMap::new(source).slice(source, self.start, self.end)
    }
}

fn is_boundary(chars: &[char], i: usize) -> bool {
    match chars[i] {
        '\n' | '!' | '?' | ';' => true,
        '.' => {
            if chars.get(i + 1).is_some_and(|c| c.is_alphanumeric()) {
                return false;
            }
            let word_start = chars[..i]
                .iter()
                .rposition(|c| !c.is_alphabetic())
                .map_or(0, |p| p + 1);
            let word: String = chars[word_start..i].iter().collect::<String>().to_lowercase();
            let len = word.chars().count();
            !(len == 1 || ABBREVIATIONS.contains(&word.as_str()))
        }
        _ => false,
    }
}

/// Split into sentences at `. ! ? ;` and newlines. A period after a known
/// abbreviation or a single letter, or directly followed by a letter or
/// digit, does not end a sentence. Sentences without tokens are dropped.
pub fn segment(text: &str) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let tokens = tokenize(text);
    let mut bounds = Vec::new();
    let mut start = 0;
    for i in 0..chars.len() {
        if is_boundary(&chars, i) {
            let end = if chars[i] == '\n' { i } else { i + 1 };
            bounds.push((start, end));
            start = i + 1;
        }
    }
    bounds.push((start, chars.len()));

    let mut sentences = Vec::new();
    let mut tok_iter = tokens.into_iter().peekable();
    for (s, e) in bounds {
        let mut sentence_tokens = Vec::new();
        while let Some(t) = tok_iter.peek() {
            if t.start >= e {
                break;
            }
            sentence_tokens.push(tok_iter.next().expect("peeked"));
        }
        if sentence_tokens.is_empty() {
            continue;
        }
        let mut s = s;
        let mut e = e;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        sentences.push(Sentence {
            start: s,
            end: e,
            tokens: sentence_tokens,
        });
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str) -> Vec<String> {
        segment(text).iter().map(|s| s.text(text).to_string()).collect()
    }

    #[test]
    fn two_sentences() {
        assert_eq!(texts("She had hyperlipidemia. No fever."), ["She had hyperlipidemia.", "No fever."]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(texts("Dr. Howe arrived"), ["Dr. Howe arrived"]);
        assert_eq!(texts("Temp 37.5 today, e.g. mild. Next"), ["Temp 37.5 today, e.g. mild.", "Next"]);
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert!(segment("").is_empty());
        assert!(segment(" ;\n. ").is_empty());
    }

    #[test]
    fn newline_and_semicolon_split() {
        assert_eq!(texts("HPI: cough; no fever\nPlan: rest"), ["HPI: cough;", "no fever", "Plan: rest"]);
    }

    #[test]
    fn tokens_keep_offsets() {
        let text = "Ok. Chest pain!";
        let s = segment(text);
        assert_eq!(s[1].tokens[0].start, 4);
        assert_eq!(s[1].tokens[1].text, "pain");
    }
}
