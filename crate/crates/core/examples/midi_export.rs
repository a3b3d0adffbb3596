//! Writes a composed song as a Standard MIDI File and reads it back.
//!
//! ```text
//! cargo run -p versetune --example midi_export -- out.mid
//! ```

use versetune::midi::{read_midi, to_midi};
use versetune::{compose, ComposeOptions, KeyChoice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "song.mid".into());
    let opts = ComposeOptions { key: KeyChoice::Fixed("G major".parse()?), seed: 3, instrument: 24, ..Default::default() };
    let song = compose("Row along the river, sing a happy song.", &opts)?;
    let bytes = to_midi(&song.score, 96)?;
    std::fs::write(&path, &bytes)?;
    let summary = read_midi(&bytes)?;
    println!("{path}: {} bytes, {} notes, {} ticks, program {:?}", bytes.len(), summary.notes.len(), summary.total_ticks, summary.program);
    for n in summary.notes.iter().take(8) {
        println!("  key {} vel {} ticks {}..{}", n.key, n.velocity, n.start, n.end);
    }
    Ok(())
}
