//! The generation request shared by the HTTP route and the CLI.

use rand::RngCore;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;
use versetune::config::Config;
use versetune::image::{request_lyrics, LengthPreference, LyricsProvider, LyricsRequest};
use versetune::{compose, ComposeOptions, Error, KeyChoice, OutputKind, Result};

use crate::store::{InputKind, SongRecord};

#[derive(Debug, Clone)]
pub enum Source {
    Lyrics(String),
    Image { bytes: Vec<u8>, length: LengthPreference, style_hint: Option<String> },
}

#[derive(Debug, Clone)]
pub struct GenerateInput {
    pub source: Source,
    pub key: KeyChoice,
    pub output: OutputKind,
    pub instrument: u8,
    pub seed: Option<u64>,
    pub title: Option<String>,
}

/// A seed from the operating system, kept below 2^53 so JSON clients read it exactly.
pub fn fresh_seed() -> u64 {
    rand::rngs::OsRng.next_u64() >> 11
}

/// Turns an image into lyrics when needed, composes, renders both encodings
/// and evaluates. Only the image branch touches `provider`.
pub fn generate(input: GenerateInput, provider: Option<&dyn LyricsProvider>, config: &Config) -> Result<SongRecord> {
    let (input_kind, lyrics) = match input.source {
        Source::Lyrics(text) => (InputKind::Lyrics, text),
        Source::Image { bytes, length, style_hint } => {
            let provider = provider.ok_or_else(|| Error::ProviderUnavailable("no lyrics provider is configured".into()))?;
            let request = LyricsRequest::new(bytes, length, style_hint)?;
            (InputKind::Image, request_lyrics(&request, provider)?.lyrics)
        }
    };
    let seed = input.seed.unwrap_or_else(fresh_seed);
    let opts = ComposeOptions {
        key: input.key,
        seed,
        output: input.output,
        instrument: input.instrument,
        title: input.title,
        sampler: config.sampler,
        ..Default::default()
    };
    let song = compose(&lyrics, &opts)?;
    let midi = song.midi(config.tempo_bpm)?;
    Ok(SongRecord {
        id: uuid::Uuid::new_v4().to_string(),
        created_at: OffsetDateTime::now_utc().format(&Rfc3339).expect("UTC timestamps format"),
        input_kind,
        lyrics,
        title: song.score.title.clone(),
        key: song.score.key,
        time_signature: song.score.time_signature,
        seed,
        output: input.output,
        instrument: input.instrument,
        report: song.report.clone(),
        rating: None,
        musicxml: song.musicxml().into_bytes(),
        midi,
    })
}

/// `<title-slug>-<key-slug>-<seed>` for a record's output files.
pub fn file_stem(record: &SongRecord) -> String {
    format!("{}-{}-{}", versetune::pipeline::slug(&record.title), record.key.slug(), record.seed)
}
