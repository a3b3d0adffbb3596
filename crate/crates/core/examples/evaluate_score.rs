//! Prints the metric report of a MusicXML file, optionally against a reference.
//!
//! ```text
//! cargo run -p versetune --example evaluate_score -- crates/core/tests/fixtures/originals/lantern-light.musicxml
//! ```

use versetune::evaluate_score;
use versetune::musicxml::parse_musicxml;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "crates/core/tests/fixtures/originals/lantern-light.musicxml".into());
    let score = parse_musicxml(&std::fs::read_to_string(&path)?)?;
    let reference = match args.next() {
        Some(r) => Some(parse_musicxml(&std::fs::read_to_string(r)?)?),
        None => None,
    };
    print!("{}", evaluate_score(&score, reference.as_ref())?.to_key_values());
    Ok(())
}
