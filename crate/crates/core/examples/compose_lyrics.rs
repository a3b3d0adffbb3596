//! Composes a lyric passed on the command line (or a default) and prints the
//! plan, the melody and the MusicXML.
//!
//! ```text
//! cargo run -p versetune --example compose_lyrics -- "Birds are flying, in the sky." 7
//! ```

use versetune::{compose, ComposeOptions};

fn main() -> Result<(), versetune::Error> {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "Birds are flying, in the sky.".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let song = compose(&text, &ComposeOptions { seed, ..Default::default() })?;
    println!("key {} in {}, {} measures", song.score.key, song.score.time_signature, song.plan.measure_count);
    for event in song.rhythm.events() {
        print!("{}@{} ", event.syllable, event.onset);
    }
    println!();
    let names: Vec<String> = song.score.pitches().iter().map(|p| p.0.to_string()).collect();
    println!("pitches {}", names.join(" "));
    println!("{}", song.musicxml());
    Ok(())
}
