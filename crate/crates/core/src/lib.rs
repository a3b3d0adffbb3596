//! versetune composes a single-voice melody from lyrics without any training
//! data, writes it as MusicXML and MIDI, and scores melodies with
//! music-theory metrics (Krumhansl-Schmuckler key confidence, interval
//! smoothness, lyric/beat rhythm matching).
//!
//! The pipeline runs in four stages:
//!
//! 1. [`setup`]: phrases, syllables, keywords and sentiment decide the time
//!    signature, the key and how many measures each phrase gets.
//! 2. [`rhythm`]: syllables are laid out against the beat grid with keyword
//!    stresses anchored on strong beats.
//! 3. [`pitch`]: seeded diatonic pitches are generated, inserted and smoothed
//!    phrase by phrase.
//! 4. [`score`], [`musicxml`], [`midi`]: the finished score and its encodings.
//!
//! ```
//! use versetune::{compose, ComposeOptions, KeyChoice};
//!
//! let opts = ComposeOptions { key: KeyChoice::Fixed("D major".parse()?), seed: 7, ..Default::default() };
//! let song = compose("Birds are flying, in the sky.", &opts)?;
//! assert_eq!(song.score.key.to_string(), "D major");
//! let xml = versetune::musicxml::to_musicxml(&song.score);
//! assert!(xml.starts_with("<?xml"));
//! # Ok::<(), versetune::Error>(())
//! ```

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod image;
pub mod lexicon;
pub mod lyrics;
pub mod midi;
pub mod musicxml;
pub mod pipeline;
pub mod pitch;
pub mod rhythm;
pub mod score;
pub mod seed;
pub mod setup;
pub mod theory;

/// Exact durations and offsets measured in quarter notes.
pub type Quarters = num_rational::Ratio<i64>;

pub use error::{Error, Result};
pub use eval::{evaluate_score, EvaluationReport};
pub use lyrics::{PhraseList, SentimentLabel, SentimentScore, Stress, WordDictionary, WordEntry};
pub use pipeline::{compose, Composition, ComposeOptions, KeyChoice, OutputKind};
pub use pitch::SamplerConfig;
pub use score::{Note, Score};
pub use setup::ScorePlan;
pub use theory::{KeySignature, Mode, Pitch, PitchRange, Scale, TimeSignature, KEY_CATALOG};
