//! Bundled word lists, parsed once on first use.
//!
//! All files are UTF-8 with one entry per line and `#` comments:
//!
//! * `pronunciations.tsv`: `word<TAB>syl-la-bles<TAB>stress digits`, one digit
//!   per syllable (1 primary, 2 secondary, 0 unstressed).
//! * `sentiment.tsv`: `word<TAB>valence`, integer valence in -5..=5.
//! * `function_words.txt`: whitespace-separated closed-class words.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pronunciation {
    pub syllables: Vec<String>,
    pub stress: Vec<u8>,
}

static PRONUNCIATIONS: LazyLock<HashMap<String, Pronunciation>> =
    LazyLock::new(|| parse_pronunciations(include_str!("../data/pronunciations.tsv")));

static SENTIMENT: LazyLock<HashMap<String, i8>> =
    LazyLock::new(|| parse_sentiment(include_str!("../data/sentiment.tsv")));

static FUNCTION_WORDS: LazyLock<HashSet<String>> =
    LazyLock::new(|| parse_word_list(include_str!("../data/function_words.txt")));

pub fn pronunciation(word: &str) -> Option<&'static Pronunciation> {
    PRONUNCIATIONS.get(word)
}

pub fn valence(word: &str) -> Option<i8> {
    SENTIMENT.get(word).copied()
}

pub fn is_function_word(word: &str) -> bool {
    FUNCTION_WORDS.contains(word)
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_pronunciations(text: &str) -> HashMap<String, Pronunciation> {
    let mut map = HashMap::new();
    for line in data_lines(text) {
        let mut fields = line.split('\t');
        let (Some(word), Some(split), Some(digits)) = (fields.next(), fields.next(), fields.next()) else {
            continue;
        };
        let syllables: Vec<String> = split.split('-').map(str::to_string).collect();
        let stress: Vec<u8> = digits.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
        if syllables.is_empty() || syllables.len() != stress.len() {
            continue;
        }
        map.insert(word.to_string(), Pronunciation { syllables, stress });
    }
    map
}

pub(crate) fn parse_sentiment(text: &str) -> HashMap<String, i8> {
    data_lines(text)
        .filter_map(|line| {
            let (word, score) = line.split_once('\t')?;
            Some((word.to_string(), score.trim().parse().ok()?))
        })
        .collect()
}

fn parse_word_list(text: &str) -> HashSet<String> {
    data_lines(text).flat_map(str::split_whitespace).map(str::to_string).collect()
}
