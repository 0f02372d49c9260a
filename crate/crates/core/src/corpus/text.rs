//! Transcript normalization: lexicon substitution, number expansion,
//! lowercasing and charset filtering.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use log::warn;
use regex::Regex;

use super::numbers::{cardinal_de, MAX_CARDINAL};
use super::CorpusError;

/// The set of characters a transcript may contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset(BTreeSet<char>);

impl Charset {
    /// Lowercase German letters, space and `. , ! ? ; : - '`.
    pub fn german() -> Self {
        let mut set: BTreeSet<char> = ('a'..='z').collect();
        set.extend(['ä', 'ö', 'ü', 'ß', ' ']);
        set.extend(['.', ',', '!', '?', ';', ':', '-', '\'']);
        Charset(set)
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    /// True when every character of `text` is in the set.
    pub fn admits(&self, text: &str) -> bool {
        text.chars().all(|c| self.contains(c))
    }
}

impl Default for Charset {
    fn default() -> Self {
        Self::german()
    }
}

/// Normalizes raw transcripts for TTS training.
#[derive(Debug, Clone, Default)]
pub struct TextNormalizer {
    // Longest keys first so "z.B." wins over "z".
    lexicon: Vec<(String, String)>,
    charset: Charset,
}

impl TextNormalizer {
    pub fn new<I, K, V>(lexicon: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut lexicon: Vec<(String, String)> = lexicon
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .filter(|(k, _)| !k.is_empty())
            .collect();
        lexicon.sort_by(|a, b| {
            b.0.chars()
                .count()
                .cmp(&a.0.chars().count())
                .then_with(|| a.0.cmp(&b.0))
        });
        Self {
            lexicon,
            charset: Charset::german(),
        }
    }

    /// Parses a `from,to` CSV lexicon (header required).
    pub fn from_lexicon_csv(data: &[u8]) -> Result<Self, CorpusError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(data);
        let mut pairs = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CorpusError::Csv(e.to_string()))?;
            if record.len() != 2 {
                return Err(CorpusError::Csv(format!(
                    "lexicon row has {} fields, expected 2",
                    record.len()
                )));
            }
            pairs.push((record[0].to_string(), record[1].to_string()));
        }
        Ok(Self::new(pairs))
    }

    pub fn charset(&self) -> &Charset {
        &self.charset
    }

    pub fn normalize(&self, text: &str) -> Result<String, CorpusError> {
        // Deleting characters can join fragments into a lexicon key, so the
        // cleaning pass runs a second time over its own output.
        let once = self.clean(text)?;
        self.clean(&once)
    }

    fn clean(&self, text: &str) -> Result<String, CorpusError> {
        let replaced = self.apply_lexicon(text);
        let expanded = expand_numbers(&replaced)?;
        let mut out = String::with_capacity(expanded.len());
        let mut pending_space = false;
        for c in expanded.chars().flat_map(char::to_lowercase) {
            if c.is_whitespace() {
                pending_space = !out.is_empty();
                continue;
            }
            if !self.charset.contains(c) {
                continue;
            }
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
        Ok(out)
    }

    fn apply_lexicon(&self, text: &str) -> String {
        if self.lexicon.is_empty() {
            return text.to_string();
        }
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        'scan: while i < chars.len() {
            let at_word_start = i == 0 || !chars[i - 1].is_alphanumeric();
            if at_word_start {
                for (key, replacement) in &self.lexicon {
                    if let Some(len) = match_ignore_case(&chars[i..], key) {
                        let end = i + len;
                        if end == chars.len() || !chars[end].is_alphanumeric() {
                            out.push_str(replacement);
                            i = end;
                            continue 'scan;
                        }
                    }
                }
            }
            out.push(chars[i]);
            i += 1;
        }
        out
    }
}

/// Length in chars of `key` matched case-insensitively at the head of `text`.
fn match_ignore_case(text: &[char], key: &str) -> Option<usize> {
    let mut len = 0;
    for k in key.chars() {
        let t = *text.get(len)?;
        if t != k && !t.to_lowercase().eq(k.to_lowercase()) {
            return None;
        }
        len += 1;
    }
    Some(len)
}

fn number_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"\d+(?:[.,]\d+)*").expect("valid regex"))
}

fn grouped_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"^\d{1,3}(?:\.\d{3})+$").expect("valid regex"))
}

/// Expands cardinals (optionally with `.` thousands groups); drops decimals
/// and ordinals (`3.` followed by more text) with a warning.
fn expand_numbers(text: &str) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in number_pattern().find_iter(text) {
        out.push_str(&text[last..m.start()]);
        last = m.end();
        let token = m.as_str();
        let tail = &text[m.end()..];

        let digits = if token.bytes().all(|b| b.is_ascii_digit()) {
            token.to_string()
        } else if grouped_pattern().is_match(token) {
            token.replace('.', "")
        } else {
            warn!("dropping decimal number {token:?} from transcript");
            continue;
        };

        if is_ordinal_tail(tail) {
            warn!("dropping ordinal {token:?}. from transcript");
            last = m.end() + 1;
            continue;
        }

        let value: u64 = digits
            .parse()
            .map_err(|_| CorpusError::NumberOutOfRange(token.to_string()))?;
        if value > MAX_CARDINAL {
            return Err(CorpusError::NumberOutOfRange(token.to_string()));
        }
        out.push_str(&cardinal_de(value).expect("value within range"));
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// A number is read as an ordinal when a period follows it and the sentence
/// continues after whitespace ("am 3. oktober").
fn is_ordinal_tail(tail: &str) -> bool {
    let Some(rest) = tail.strip_prefix('.') else {
        return false;
    };
    let trimmed = rest.trim_start();
    trimmed.len() < rest.len() && !trimmed.is_empty()
}
