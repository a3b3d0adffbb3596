//! Lyric text to phrases, syllables, stress, keywords and sentiment.
//!
//! Tokens are runs of Unicode letters and apostrophes; everything else is a
//! delimiter. Phrases break at `. ! ? , ; :` and at line breaks. Syllables
//! come from the bundled pronunciation lexicon when the word is listed and
//! from orthographic rules otherwise.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon;

/// Lyrics split into phrases of lowercase word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseList {
    pub phrases: Vec<Vec<String>>,
}

impl PhraseList {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.phrases.iter().flatten().map(String::as_str)
    }

    pub fn word_count(&self) -> usize {
        self.phrases.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stress {
    Stressed,
    Unstressed,
}

impl Stress {
    pub fn is_stressed(self) -> bool {
        self == Stress::Stressed
    }
}

/// Per-word record consumed by measure counting and rhythm construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEntry {
    pub word: String,
    pub is_keyword: bool,
    pub syllables: Vec<String>,
    pub stress: Vec<Stress>,
}

impl WordEntry {
    /// Indices of syllables that should land on strong beats.
    pub fn anchor_syllables(&self) -> impl Iterator<Item = usize> + '_ {
        self.stress
            .iter()
            .enumerate()
            .filter(move |(_, s)| self.is_keyword && s.is_stressed())
            .map(|(i, _)| i)
    }
}

pub type WordDictionary = BTreeMap<String, WordEntry>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
    Neutral,
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
        })
    }
}

/// Dead zone around zero valence that counts as neutral.
pub const SENTIMENT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub valence: f64,
    pub label: SentimentLabel,
}

impl SentimentScore {
    pub fn from_valence(valence: f64) -> Self {
        let label = if valence > SENTIMENT_THRESHOLD {
            SentimentLabel::Positive
        } else if valence < -SENTIMENT_THRESHOLD {
            SentimentLabel::Negative
        } else {
            SentimentLabel::Neutral
        };
        SentimentScore { valence, label }
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’' || c == 'ʼ'
}

fn is_phrase_break(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ',' | ';' | ':' | '\n' | '\r' | '…')
}

fn normalize_token(raw: &str) -> Option<String> {
    let token: String = raw
        .chars()
        .map(|c| if is_apostrophe(c) { '\'' } else { c })
        .collect::<String>()
        .trim_matches('\'')
        .to_lowercase();
    token.chars().any(char::is_alphabetic).then_some(token)
}

/// Lowercase word tokens of `text` in order, ignoring phrase structure.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphabetic() || is_apostrophe(c)))
        .filter_map(normalize_token)
        .collect()
}

pub fn segment_phrases(text: &str) -> Result<PhraseList> {
    let phrases: Vec<Vec<String>> = text
        .split(is_phrase_break)
        .map(tokenize)
        .filter(|p| !p.is_empty())
        .collect();
    if phrases.is_empty() {
        return Err(Error::EmptyLyrics);
    }
    Ok(PhraseList { phrases })
}

/// Lexical syllables and stress of a single word.
///
/// Monosyllables come back stressed; whether a function word keeps that stress
/// is decided in [`build_word_dictionary`].
pub fn syllabify(word: &str) -> (Vec<String>, Vec<Stress>) {
    let word = word.to_lowercase();
    if let Some(entry) = lexicon::pronunciation(&word) {
        let mut stress: Vec<Stress> = entry
            .stress
            .iter()
            .map(|d| if *d == 1 { Stress::Stressed } else { Stress::Unstressed })
            .collect();
        if !stress.iter().any(|s| s.is_stressed()) {
            let idx = entry.stress.iter().position(|d| *d == 2).unwrap_or(0);
            stress[idx] = Stress::Stressed;
        }
        return (entry.syllables.clone(), stress);
    }
    let syllables = orthographic_syllables(&word);
    let stress = fallback_stress(&word, syllables.len());
    (syllables, stress)
}

fn fallback_stress(word: &str, count: usize) -> Vec<Stress> {
    let mut stress = vec![Stress::Unstressed; count];
    let penultimate_suffixes = ["tion", "sion", "cian", "ic", "ity"];
    let idx = if count >= 2 && penultimate_suffixes.iter().any(|s| word.ends_with(s)) {
        if word.ends_with("ity") { count.saturating_sub(3) } else { count - 2 }
    } else {
        0
    };
    stress[idx] = Stress::Stressed;
    stress
}

fn is_vowel_at(chars: &[char], i: usize) -> bool {
    match chars[i] {
        'a' | 'e' | 'i' | 'o' | 'u' | 'à' | 'á' | 'â' | 'ä' | 'è' | 'é' | 'ê' | 'ë' | 'ì' | 'í' | 'î' | 'ï'
        | 'ò' | 'ó' | 'ô' | 'ö' | 'ù' | 'ú' | 'û' | 'ü' => true,
        // y is a consonant word-initially and before another vowel.
        'y' => i > 0 && !chars.get(i + 1).is_some_and(|c| "aeiou".contains(*c)),
        _ => false,
    }
}

const DIGRAPHS: [&str; 5] = ["th", "sh", "ch", "ph", "wh"];
const ONSET_BLENDS: [&str; 21] = [
    "bl", "br", "cl", "cr", "dr", "fl", "fr", "gl", "gr", "pl", "pr", "sc", "sk", "sl", "sm", "sn", "sp", "st",
    "sw", "tr", "tw",
];

/// Rule-based split used for words missing from the lexicon: vowel groups,
/// silent final `e`/`-es`/`-ed`, consonant clusters divided VC-CV.
pub fn orthographic_syllables(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_alphabetic()).collect();
    if letters.is_empty() {
        return vec![word.to_string()];
    }
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if is_vowel_at(&chars, i) {
            let start = i;
            while i < chars.len() && is_vowel_at(&chars, i) {
                i += 1;
            }
            groups.push((start, i));
        } else {
            i += 1;
        }
    }
    if groups.len() > 1 && is_silent_ending(&chars, groups[groups.len() - 1]) {
        groups.pop();
    }
    if groups.len() <= 1 {
        return vec![word.to_string()];
    }
    let mut cuts = Vec::with_capacity(groups.len() - 1);
    for (idx, pair) in groups.windows(2).enumerate() {
        let (gap_start, gap_end) = (pair[0].1, pair[1].0);
        let cluster: String = chars[gap_start..gap_end].iter().collect();
        let last_is_le = idx + 2 == groups.len() && is_final_le(&chars, pair[1]);
        let cut = match cluster.chars().count() {
            0 => gap_start,
            1 => gap_start,
            2 if last_is_le => gap_start + 1,
            2 if DIGRAPHS.contains(&cluster.as_str()) => gap_start,
            2 if cluster == "ck" || cluster == "ng" => gap_end,
            2 => gap_start + 1,
            n if last_is_le => gap_start + n - 2,
            n => {
                let tail: String = chars[gap_end - 2..gap_end].iter().collect();
                if ONSET_BLENDS.contains(&tail.as_str()) || DIGRAPHS.contains(&tail.as_str()) {
                    gap_start + n - 2
                } else {
                    gap_start + n - 1
                }
            }
        };
        cuts.push(cut);
    }
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for cut in cuts {
        if cut > prev {
            pieces.push(chars[prev..cut].iter().collect::<String>());
            prev = cut;
        }
    }
    pieces.push(chars[prev..].iter().collect());
    pieces
}

fn is_final_le(chars: &[char], group: (usize, usize)) -> bool {
    group.1 == chars.len() && group.1 - group.0 == 1 && chars[group.0] == 'e' && group.0 >= 2 && chars[group.0 - 1] == 'l' && !"aeiouy".contains(chars[group.0 - 2])
}

fn is_silent_ending(chars: &[char], group: (usize, usize)) -> bool {
    let n = chars.len();
    if group.1 - group.0 != 1 || chars[group.0] != 'e' {
        return false;
    }
    if group.1 == n {
        // final e, except consonant + "le"
        return !is_final_le(chars, group);
    }
    if group.1 + 1 == n && group.0 >= 1 {
        let prev = chars[group.0 - 1];
        return match chars[n - 1] {
            'd' => prev != 't' && prev != 'd',
            's' => {
                let prev2 = if group.0 >= 2 { chars[group.0 - 2] } else { ' ' };
                !matches!(prev, 's' | 'x' | 'z') && !(matches!(prev, 'h') && matches!(prev2, 'c' | 's'))
                    && !matches!(prev, 'c' | 'g')
            }
            _ => false,
        };
    }
    false
}

/// Coarse part-of-speech classes used to separate content from function words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartOfSpeech {
    Function,
    Noun,
    Verb,
    Adjective,
    Adverb,
}

const DETERMINERS: [&str; 14] =
    ["the", "a", "an", "my", "your", "his", "her", "its", "our", "their", "this", "that", "each", "every"];
const CONTEXTUAL_MODALS: [&str; 5] = ["can", "will", "may", "might", "must"];

/// Guess the part of speech of `words[index]` from a closed function-word list,
/// the preceding token, and suffixes.
pub fn part_of_speech(words: &[String], index: usize) -> PartOfSpeech {
    let word = words[index].as_str();
    let prev = index.checked_sub(1).map(|i| words[i].as_str());
    if CONTEXTUAL_MODALS.contains(&word) {
        // "the can", "my will": a noun after a determiner.
        return if prev.is_some_and(|p| DETERMINERS.contains(&p)) { PartOfSpeech::Noun } else { PartOfSpeech::Function };
    }
    if lexicon::is_function_word(word) {
        return PartOfSpeech::Function;
    }
    if word.chars().filter(|c| c.is_alphabetic()).count() == 1 {
        return PartOfSpeech::Function;
    }
    let ends = |suffixes: &[&str]| suffixes.iter().any(|s| word.len() > s.len() + 1 && word.ends_with(s));
    if ends(&["ly"]) {
        PartOfSpeech::Adverb
    } else if ends(&["ful", "less", "ous", "ive", "able", "ible", "ish", "ic", "al"]) {
        PartOfSpeech::Adjective
    } else if ends(&["ing", "ed", "ize", "ise", "ify", "ate", "en"])
        || prev.is_some_and(|p| p == "to" || CONTEXTUAL_MODALS.contains(&p))
    {
        PartOfSpeech::Verb
    } else {
        PartOfSpeech::Noun
    }
}

/// Content words are keywords; `context` is the phrase holding the word.
pub fn detect_keyword(context: &[String], index: usize) -> bool {
    part_of_speech(context, index) != PartOfSpeech::Function
}

/// Mean lexicon valence over content words, each scaled into [-1, 1].
pub fn analyze_sentiment(text: &str) -> SentimentScore {
    let Ok(phrases) = segment_phrases(text) else {
        return SentimentScore::from_valence(0.0);
    };
    let mut total = 0.0;
    let mut content = 0usize;
    for phrase in &phrases.phrases {
        for idx in 0..phrase.len() {
            if !detect_keyword(phrase, idx) {
                continue;
            }
            content += 1;
            total += lexicon::valence(&phrase[idx]).map_or(0.0, |v| f64::from(v) / 5.0);
        }
    }
    let valence = if content == 0 { 0.0 } else { total / content as f64 };
    SentimentScore::from_valence(valence.clamp(-1.0, 1.0))
}

/// One entry per distinct token, decided at its first occurrence.
pub fn build_word_dictionary(lp: &PhraseList) -> WordDictionary {
    build_word_dictionary_with(lp, |_| None)
}

/// Dictionary where `known` may supply syllable splits (e.g. from a reference
/// score's lyrics); stress is still taken from the lexicon when the syllable
/// counts agree.
pub fn build_word_dictionary_with<F>(lp: &PhraseList, known: F) -> WordDictionary
where
    F: Fn(&str) -> Option<Vec<String>>,
{
    let mut dictionary = WordDictionary::new();
    for phrase in &lp.phrases {
        for (idx, word) in phrase.iter().enumerate() {
            if dictionary.contains_key(word) {
                continue;
            }
            let is_keyword = detect_keyword(phrase, idx);
            let (lexical, lexical_stress) = syllabify(word);
            let (syllables, mut stress) = match known(word) {
                Some(split) if !split.is_empty() && split.len() == lexical.len() => (split, lexical_stress),
                Some(split) if !split.is_empty() => {
                    let stress = fallback_stress(word, split.len());
                    (split, stress)
                }
                _ => (lexical, lexical_stress),
            };
            if syllables.len() == 1 {
                stress[0] = if is_keyword { Stress::Stressed } else { Stress::Unstressed };
            } else if is_keyword && !stress.iter().any(|s| s.is_stressed()) {
                stress[0] = Stress::Stressed;
            }
            dictionary.insert(word.clone(), WordEntry { word: word.clone(), is_keyword, syllables, stress });
        }
    }
    dictionary
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrases(text: &str) -> Vec<Vec<String>> {
        segment_phrases(text).unwrap().phrases
    }

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn segments_on_punctuation_and_newlines() {
        assert_eq!(phrases("Birds are flying, in the sky."), vec![words(&["birds", "are", "flying"]), words(&["in", "the", "sky"])]);
        assert_eq!(phrases("Hello"), vec![words(&["hello"])]);
        assert_eq!(phrases("Go!\nStop."), vec![words(&["go"]), words(&["stop"])]);
        assert_eq!(phrases("well-known; rock'n'roll: don’t"), vec![words(&["well", "known"]), words(&["rock'n'roll"]), words(&["don't"])]);
    }

    #[test]
    fn empty_lyrics_rejected() {
        assert!(matches!(segment_phrases(""), Err(Error::EmptyLyrics)));
        assert!(matches!(segment_phrases("  ...\n, 123 !"), Err(Error::EmptyLyrics)));
    }

    #[test]
    fn syllabify_reference_words() {
        assert_eq!(syllabify("cat"), (words(&["cat"]), vec![Stress::Stressed]));
        assert_eq!(syllabify("flying"), (words(&["fly", "ing"]), vec![Stress::Stressed, Stress::Unstressed]));
        assert_eq!(
            syllabify("beautiful"),
            (words(&["beau", "ti", "ful"]), vec![Stress::Stressed, Stress::Unstressed, Stress::Unstressed])
        );
    }

    #[test]
    fn orthographic_fallback() {
        assert_eq!(orthographic_syllables("lake"), words(&["lake"]));
        assert_eq!(orthographic_syllables("jumped"), words(&["jumped"]));
        assert_eq!(orthographic_syllables("wanted"), words(&["wan", "ted"]));
        assert_eq!(orthographic_syllables("zibble"), words(&["zib", "ble"]));
        assert_eq!(orthographic_syllables("boxes"), words(&["bo", "xes"]));
        assert_eq!(orthographic_syllables("glimmering"), words(&["glim", "me", "ring"]));
        assert_eq!(orthographic_syllables("yelp"), words(&["yelp"]));
        assert_eq!(orthographic_syllables("brr"), words(&["brr"]));
        assert_eq!(orthographic_syllables("mother"), words(&["mo", "ther"]));
        assert_eq!(orthographic_syllables("picket"), words(&["pick", "et"]));
    }

    #[test]
    fn fallback_stress_rules() {
        assert_eq!(fallback_stress("zorbing", 2), vec![Stress::Stressed, Stress::Unstressed]);
        assert_eq!(fallback_stress("florbation", 3), vec![Stress::Unstressed, Stress::Stressed, Stress::Unstressed]);
    }

    #[test]
    fn keyword_detection() {
        let p = words(&["the", "birds", "are", "flying"]);
        assert!(!detect_keyword(&p, 0));
        assert!(detect_keyword(&p, 1));
        assert!(!detect_keyword(&p, 2));
        assert!(detect_keyword(&p, 3));
        assert!(detect_keyword(&words(&["go"]), 0));
        let can = words(&["we", "can", "kick", "the", "can"]);
        assert!(!detect_keyword(&can, 1));
        assert!(detect_keyword(&can, 4));
    }

    #[test]
    fn sentiment_labels() {
        assert_eq!(analyze_sentiment("happy sunny joy").label, SentimentLabel::Positive);
        assert_eq!(analyze_sentiment("sad lonely tears").label, SentimentLabel::Negative);
        let neutral = analyze_sentiment("the and of");
        assert_eq!(neutral.valence, 0.0);
        assert_eq!(neutral.label, SentimentLabel::Neutral);
        assert_eq!(analyze_sentiment("").label, SentimentLabel::Neutral);
    }

    #[test]
    fn sentiment_label_threshold() {
        assert_eq!(SentimentScore::from_valence(0.05).label, SentimentLabel::Neutral);
        assert_eq!(SentimentScore::from_valence(0.0501).label, SentimentLabel::Positive);
        assert_eq!(SentimentScore::from_valence(-0.0501).label, SentimentLabel::Negative);
    }

    #[test]
    fn dictionary_entries() {
        let dw = build_word_dictionary(&PhraseList { phrases: vec![words(&["the", "sky"])] });
        assert!(!dw["the"].is_keyword);
        assert_eq!(dw["the"].syllables.len(), 1);
        assert_eq!(dw["the"].stress, vec![Stress::Unstressed]);
        assert!(dw["sky"].is_keyword);
        assert_eq!(dw["sky"].stress, vec![Stress::Stressed]);

        let dw = build_word_dictionary(&PhraseList { phrases: vec![words(&["go"])] });
        assert_eq!(dw["go"], WordEntry { word: "go".into(), is_keyword: true, syllables: words(&["go"]), stress: vec![Stress::Stressed] });

        let dw = build_word_dictionary(&PhraseList { phrases: vec![words(&["the", "the"])] });
        assert_eq!(dw.len(), 1);
    }

    #[test]
    fn known_syllables_override_split() {
        let lp = PhraseList { phrases: vec![words(&["flying", "zebra"])] };
        let dw = build_word_dictionary_with(&lp, |w| match w {
            "flying" => Some(words(&["fl", "ying"])),
            "zebra" => Some(words(&["ze", "b", "ra"])),
            _ => None,
        });
        assert_eq!(dw["flying"].syllables, words(&["fl", "ying"]));
        assert_eq!(dw["flying"].stress, vec![Stress::Stressed, Stress::Unstressed]);
        assert_eq!(dw["zebra"].syllables.len(), 3);
        assert_eq!(dw["zebra"].stress.iter().filter(|s| s.is_stressed()).count(), 1);
    }
}
