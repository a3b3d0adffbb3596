//! Image to lyrics to song. Uses the offline stub unless a provider endpoint
//! and credential are configured and `VERSETUNE_LLM_STUB` is unset.
//!
//! ```text
//! cargo run -p versetune --example image_lyrics_stub -- picture.png
//! ```

use versetune::image::{provider_from_env, request_lyrics, LengthPreference, LyricsProvider, LyricsRequest, StubProvider};
use versetune::{compose, ComposeOptions};

// Smallest valid PNG: one transparent pixel.
const PIXEL: &[u8] = &[
    0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x01,
    0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00, 0x00, 0x1F, 0x15, 0xC4, 0x89, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x44, 0x41,
    0x54, 0x78, 0x9C, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0D, 0x0A, 0x2D, 0xB4, 0x00, 0x00, 0x00, 0x00, 0x49,
    0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82,
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let image = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => PIXEL.to_vec(),
    };
    let provider: Box<dyn LyricsProvider> = provider_from_env().unwrap_or_else(|_| Box::new(StubProvider));
    let request = LyricsRequest::new(image, LengthPreference::Short, Some("gentle lullaby".into()))?;
    let lyrics = request_lyrics(&request, provider.as_ref())?;
    println!("{}\n({})", lyrics.lyrics, lyrics.provider_metadata);
    let song = compose(&lyrics.lyrics, &ComposeOptions { seed: 1, ..Default::default() })?;
    println!("{} in {}, {} notes", song.score.key, song.score.time_signature, song.score.pitches().len());
    Ok(())
}
