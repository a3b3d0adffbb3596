//! Composes every lyric in a directory in three keys and prints corpus statistics.
//!
//! ```text
//! cargo run -p versetune --example desk_corpus -- crates/core/tests/fixtures/desk_corpus
//! ```

use std::path::PathBuf;

use versetune::corpus::{compose_in_keys, load_lyrics};
use versetune::eval::CorpusStats;
use versetune::SamplerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/tests/fixtures/desk_corpus"));
    let songs = compose_in_keys(&load_lyrics(&dir)?, 3, 0, &SamplerConfig::default());
    let mut reports = Vec::new();
    for song in &songs {
        let composition = song.result.as_ref().map_err(|e| format!("{}: {e}", song.name))?;
        let report = composition.report.as_ref().ok_or("unscorable melody")?;
        println!("{}\t{}\t{}\tr={:.3}", song.name, song.key, composition.score.time_signature, report.key_confidence);
        reports.push((composition.score.time_signature, report));
    }
    print!("{}", CorpusStats::from_reports(reports).plot_table());
    Ok(())
}
