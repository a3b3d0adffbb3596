//! Helpers shared by the integration tests: a seeded random-lyric generator
//! and structural checks on composed songs.
#![allow(dead_code)]

pub mod oracle;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use versetune::rhythm::BeatStrength;
use versetune::{Composition, SamplerConfig};

/// Content words, function words, long words and words missing from the lexicon.
const VOCABULARY: &[&str] = &[
    "sun", "moon", "river", "garden", "window", "morning", "rabbit", "mountain", "yellow", "happy", "lonely", "singing",
    "running", "dancing", "whisper", "tomorrow", "butterfly", "beautiful", "everybody", "umbrella", "carry", "follow", "shine",
    "dream", "sleep", "fly", "rain", "snow", "light", "home", "heart", "slowly", "gently", "never", "always", "broken", "golden",
    "quiet", "the", "a", "and", "of", "in", "on", "to", "with", "my", "your", "is", "are", "we", "you", "I", "it", "so", "but",
    "little", "over", "under", "away", "together", "remember", "wonderful", "zorblet", "flimmering", "quandle", "bright", "cold",
    "hello", "goodbye", "I'll", "don't", "children", "tree", "ocean", "star", "apple", "sad", "cry", "laugh", "forever",
];

const BREAKS: &[&str] = &[",", ".", "!", "?", "\n", ";"];

/// A lyric of 1-6 phrases with 1-7 words each, fully determined by `seed`.
pub fn random_lyric(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phrases = rng.gen_range(1..=6);
    let mut text = String::new();
    for _ in 0..phrases {
        let words = rng.gen_range(1..=7);
        let phrase: Vec<&str> = (0..words).map(|_| *VOCABULARY.choose(&mut rng).unwrap()).collect();
        text.push_str(&phrase.join(" "));
        text.push_str(BREAKS.choose(&mut rng).unwrap());
        text.push(' ');
    }
    text
}

/// Every failed structural invariant of a composed song, as messages.
pub fn structural_violations(song: &Composition, sampler: &SamplerConfig) -> Vec<String> {
    let mut out = Vec::new();
    let score = &song.score;
    let bar = score.time_signature.measure_quarters();
    for (i, m) in score.measures.iter().enumerate() {
        if m.duration() != bar {
            out.push(format!("measure {} lasts {} quarters, not {bar}", i + 1, m.duration()));
        }
    }
    let scale = score.key.scale();
    for p in score.pitches() {
        if !scale.contains(p) {
            out.push(format!("pitch {} is not in {}", p.0, score.key));
        }
        if !sampler.range.contains(p) {
            out.push(format!("pitch {} is outside the range", p.0));
        }
    }
    match score.pitches().last() {
        Some(last) if last.pitch_class() == score.key.tonic => {}
        Some(last) => out.push(format!("final pitch class {} is not the tonic {}", last.pitch_class(), score.key.tonic)),
        None => out.push("no pitches".into()),
    }
    let expected: Vec<String> =
        song.phrases.words().flat_map(|w| song.dictionary[w].syllables.iter().cloned()).collect();
    let sung: Vec<String> = score.notes().filter_map(|n| n.lyric.as_ref().map(|l| l.text.clone())).collect();
    if sung != expected {
        out.push(format!("syllables {sung:?} differ from the lyric's {expected:?}"));
    }
    out
}

/// (keyword-stressed syllables on strong beats, keyword-stressed syllables).
pub fn keyword_alignment(song: &Composition) -> (usize, usize) {
    let keyed: Vec<_> = song.rhythm.events().filter(|e| e.is_keyword_stress).collect();
    let strong = keyed.iter().filter(|e| e.strength == BeatStrength::Strong).count();
    (strong, keyed.len())
}
