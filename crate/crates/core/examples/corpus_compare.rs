//! Regenerates each original in a MusicXML directory in three keys and prints
//! per-variant metrics and the violin-plot quantiles.
//!
//! ```text
//! cargo run -p versetune --example corpus_compare -- crates/core/tests/fixtures/originals
//! ```

use std::path::PathBuf;

use versetune::corpus::{compare, load_corpus};
use versetune::SamplerConfig;

fn main() -> Result<(), versetune::Error> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/tests/fixtures/originals"));
    let originals: Vec<_> = load_corpus(&dir)?.into_iter().map(|(_, score)| score).collect();
    let comparison = compare(&originals, 3, 0, &SamplerConfig::default());
    print!("{}\n{}", comparison.variant_table(), comparison.plot_table());
    Ok(())
}
