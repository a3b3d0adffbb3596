//! Lyrics in, finished song out.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_score, EvaluationReport};
use crate::lyrics::{PhraseList, WordDictionary};
use crate::pitch::{assign_pitches, select_key, MelodyLine, SamplerConfig};
use crate::rhythm::{construct_rhythmic_score, RhythmicScore};
use crate::score::{finalize_score, Score, DEFAULT_INSTRUMENT};
use crate::setup::{sample_key_candidates, setup_score_with, ScorePlan, SetupOptions};
use crate::theory::{KeySignature, TimeSignature};
use crate::{midi, musicxml, seed};

/// Number of candidate keys tried for [`KeyChoice::Random`].
pub const DEFAULT_CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeyChoice {
    /// Sample candidate keys of the lyric's mode and keep the best-fitting melody.
    #[default]
    Random,
    Fixed(KeySignature),
}

impl FromStr for KeyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("random") {
            Ok(KeyChoice::Random)
        } else {
            Ok(KeyChoice::Fixed(KeySignature::parse_catalog(s)?))
        }
    }
}

impl fmt::Display for KeyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyChoice::Random => f.write_str("random"),
            KeyChoice::Fixed(k) => k.fmt(f),
        }
    }
}

/// Lyrical song or instrumental melody.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    #[default]
    Song,
    Music,
}

impl FromStr for OutputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "song" => Ok(OutputKind::Song),
            "music" => Ok(OutputKind::Music),
            other => Err(Error::InvalidRequest(format!("output must be song or music, not {other:?}"))),
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputKind::Song => "song",
            OutputKind::Music => "music",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ComposeOptions {
    pub key: KeyChoice,
    pub seed: u64,
    pub output: OutputKind,
    /// General MIDI program, 0-based.
    pub instrument: u8,
    /// Defaults to the opening words of the lyric.
    pub title: Option<String>,
    pub sampler: SamplerConfig,
    /// Force a meter instead of inferring one from the stress pattern.
    pub time_signature: Option<TimeSignature>,
    pub candidates: usize,
    /// Syllable splits to use instead of the built-in syllabifier.
    pub known_syllables: Option<HashMap<String, Vec<String>>>,
    /// Accept fixed keys outside the catalog.
    pub allow_any_key: bool,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        ComposeOptions {
            key: KeyChoice::Random,
            seed: 0,
            output: OutputKind::Song,
            instrument: DEFAULT_INSTRUMENT,
            title: None,
            sampler: SamplerConfig::default(),
            time_signature: None,
            candidates: DEFAULT_CANDIDATES,
            known_syllables: None,
            allow_any_key: false,
        }
    }
}

/// Every intermediate product of one composition run.
#[derive(Debug, Clone)]
pub struct Composition {
    pub plan: ScorePlan,
    pub phrases: PhraseList,
    pub dictionary: WordDictionary,
    pub rhythm: RhythmicScore,
    pub melody: MelodyLine,
    pub score: Score,
    /// `None` when the melody cannot be scored, e.g. it uses a single pitch class.
    pub report: Option<EvaluationReport>,
    pub seed: u64,
}

impl Composition {
    pub fn musicxml(&self) -> String {
        musicxml::to_musicxml(&self.score)
    }

    pub fn midi(&self, tempo_bpm: u32) -> Result<Vec<u8>> {
        midi::to_midi(&self.score, tempo_bpm)
    }

    /// `<title-slug>-<key-slug>-<seed>`, for output file names.
    pub fn file_stem(&self) -> String {
        format!("{}-{}-{}", slug(&self.score.title), self.score.key.slug(), self.seed)
    }
}

/// Lowercase ASCII words joined by dashes, at most 40 characters.
pub fn slug(text: &str) -> String {
    let mut out = String::new();
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()).filter(|w| !w.is_empty()) {
        if out.len() + word.len() + 1 > 40 {
            break;
        }
        if !out.is_empty() {
            out.push('-');
        }
        out.push_str(&word.to_ascii_lowercase());
    }
    if out.is_empty() {
        "song".into()
    } else {
        out
    }
}

/// Opening phrase, capitalized, at most six words.
pub fn default_title(lp: &PhraseList) -> String {
    let words: Vec<&str> = lp.phrases.first().map(|p| p.iter().take(6).map(String::as_str).collect()).unwrap_or_default();
    let text = words.join(" ");
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => "Untitled".into(),
    }
}

/// Runs setup, rhythm, pitch and scoring. The same text and options always
/// produce the same score.
pub fn compose(text: &str, opts: &ComposeOptions) -> Result<Composition> {
    let setup = SetupOptions {
        user_key: match opts.key {
            KeyChoice::Fixed(k) => Some(k),
            KeyChoice::Random => None,
        },
        time_signature: opts.time_signature,
        allow_any_key: opts.allow_any_key,
        known_syllables: opts.known_syllables.clone(),
    };
    let (mut plan, phrases, dictionary) = setup_score_with(text, &setup, opts.seed)?;
    let mut rhythm = construct_rhythmic_score(&plan, &phrases, &dictionary)?;
    let (key, melody) = match opts.key {
        KeyChoice::Fixed(_) => (plan.ks, assign_pitches(&rhythm, plan.ks, seed::sub_seed(opts.seed, 0), &opts.sampler)?),
        KeyChoice::Random => {
            let candidates = sample_key_candidates(&plan.sentiment, opts.candidates, opts.seed);
            select_key(&rhythm, &candidates, opts.seed, &opts.sampler)?
        }
    };
    plan.ks = key;
    rhythm.plan.ks = key;
    let title = opts.title.clone().unwrap_or_else(|| default_title(&phrases));
    let score = finalize_score(&rhythm, &melody, &title, opts.instrument, opts.output == OutputKind::Song)?;
    let report = match evaluate_score(&score, None) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("generated score could not be evaluated: {e}");
            None
        }
    };
    Ok(Composition { plan, phrases, dictionary, rhythm, melody, score, report, seed: opts.seed })
}
