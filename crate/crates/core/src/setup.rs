//! Score setup: time signature, key signature and measure count.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyrics::{self, PhraseList, SentimentLabel, SentimentScore, WordDictionary};
use crate::rhythm;
use crate::seed;
use crate::theory::{KeySignature, Mode, TimeSignature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePlan {
    pub ts: TimeSignature,
    pub ks: KeySignature,
    pub measure_count: usize,
    pub phrase_measure_spans: Vec<usize>,
    pub sentiment: SentimentScore,
}

/// Flattened lexical stress of every syllable in lyric order.
pub fn stress_sequence(lp: &PhraseList, dw: &WordDictionary) -> Vec<bool> {
    lp.words()
        .filter_map(|w| dw.get(w))
        .flat_map(|entry| entry.stress.iter().map(|s| s.is_stressed()))
        .collect()
}

/// Best contrast between stress density on and off a periodic grid, over
/// all phases of the grid.
pub fn grid_alignment(stresses: &[bool], period: usize) -> f64 {
    (0..period)
        .map(|phase| {
            let (mut on, mut on_n, mut off, mut off_n) = (0usize, 0usize, 0usize, 0usize);
            for (i, stressed) in stresses.iter().enumerate() {
                if i % period == phase {
                    on_n += 1;
                    on += usize::from(*stressed);
                } else {
                    off_n += 1;
                    off += usize::from(*stressed);
                }
            }
            let rate = |hits: usize, n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            rate(on, on_n) - rate(off, off_n)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// 4/4 when stresses fit a duple grid at least as well as a triple one.
pub fn determine_time_signature(lp: &PhraseList, dw: &WordDictionary) -> TimeSignature {
    let stresses = stress_sequence(lp, dw);
    if stresses.len() <= 2 {
        return TimeSignature::FOUR_FOUR;
    }
    if grid_alignment(&stresses, 2) >= grid_alignment(&stresses, 3) {
        TimeSignature::FOUR_FOUR
    } else {
        TimeSignature::THREE_FOUR
    }
}

pub fn mode_for(sentiment: &SentimentScore) -> Mode {
    match sentiment.label {
        SentimentLabel::Negative => Mode::Minor,
        SentimentLabel::Positive | SentimentLabel::Neutral => Mode::Major,
    }
}

/// The user's key when given (must be a catalog key), otherwise a seeded draw
/// from the catalog keys of the sentiment's mode.
pub fn determine_key_signature(
    sentiment: &SentimentScore,
    user_choice: Option<KeySignature>,
    rng_seed: u64,
) -> Result<KeySignature> {
    if let Some(key) = user_choice {
        return if key.in_catalog() { Ok(key) } else { Err(Error::UnknownKey(key.to_string())) };
    }
    let candidates = KeySignature::catalog_for(mode_for(sentiment));
    let mut rng = seed::rng(seed::sub_seed(rng_seed, seed::KEY_STREAM));
    Ok(*candidates.choose(&mut rng).expect("catalog has keys of both modes"))
}

/// `count` distinct catalog keys of the sentiment's mode, in sampled order.
pub fn sample_key_candidates(sentiment: &SentimentScore, count: usize, rng_seed: u64) -> Vec<KeySignature> {
    let mut candidates = KeySignature::catalog_for(mode_for(sentiment));
    let mut rng = seed::rng(seed::sub_seed(rng_seed, seed::KEY_STREAM));
    candidates.shuffle(&mut rng);
    candidates.truncate(count.max(1));
    candidates
}

/// Per-phrase measure spans: enough measures for the phrase's keywords at the
/// meter's accent count, raised until every syllable fits the beat grid with
/// keyword stresses on strong beats.
pub fn determine_measure_count(dw: &WordDictionary, lp: &PhraseList, ts: TimeSignature) -> Result<(usize, Vec<usize>)> {
    let accents = ts.accents_per_measure as usize;
    let mut spans = Vec::with_capacity(lp.len());
    for (index, phrase) in lp.phrases.iter().enumerate() {
        let keywords = phrase.iter().filter(|w| dw.get(*w).is_some_and(|e| e.is_keyword)).count();
        let by_keywords = keywords.div_ceil(accents).max(1);
        let queue = rhythm::phrase_queue(phrase, dw, index)?;
        let by_capacity = rhythm::measures_needed(&queue, ts)?;
        spans.push(by_keywords.max(by_capacity));
    }
    Ok((spans.iter().sum(), spans))
}

/// Knobs for [`setup_score_with`]; the defaults reproduce [`setup_score`].
#[derive(Debug, Clone, Default)]
pub struct SetupOptions {
    pub user_key: Option<KeySignature>,
    /// Skip the stress-grid analysis and use this meter.
    pub time_signature: Option<TimeSignature>,
    /// Let keys outside the catalog through (used when matching a reference score).
    pub allow_any_key: bool,
    /// Syllable splits supplied by the caller, keyed by word.
    pub known_syllables: Option<std::collections::HashMap<String, Vec<String>>>,
}

pub fn setup_score(
    text: &str,
    user_key: Option<KeySignature>,
    rng_seed: u64,
) -> Result<(ScorePlan, PhraseList, WordDictionary)> {
    setup_score_with(text, &SetupOptions { user_key, ..Default::default() }, rng_seed)
}

pub fn setup_score_with(
    text: &str,
    options: &SetupOptions,
    rng_seed: u64,
) -> Result<(ScorePlan, PhraseList, WordDictionary)> {
    let lp = lyrics::segment_phrases(text)?;
    let dw = match &options.known_syllables {
        Some(known) => lyrics::build_word_dictionary_with(&lp, |w| known.get(w).cloned()),
        None => lyrics::build_word_dictionary(&lp),
    };
    let sentiment = lyrics::analyze_sentiment(text);
    let ts = match options.time_signature {
        Some(ts) if ts.is_generated() => ts,
        Some(ts) => return Err(Error::UnsupportedMeter(ts.to_string())),
        None => determine_time_signature(&lp, &dw),
    };
    let ks = match options.user_key {
        Some(key) if options.allow_any_key => key,
        user => determine_key_signature(&sentiment, user, rng_seed)?,
    };
    let (measure_count, phrase_measure_spans) = determine_measure_count(&dw, &lp, ts)?;
    let plan = ScorePlan { ts, ks, measure_count, phrase_measure_spans, sentiment };
    Ok((plan, lp, dw))
}
