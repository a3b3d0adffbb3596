//! Key estimation on a hand-written melody: the 24 correlations, best first.

use versetune::eval::{correlation, distribution_of};
use versetune::{KeySignature, Pitch, Quarters};

fn main() -> Result<(), versetune::Error> {
    // Opening of a D major tune: D E F# G A B A F# D, quarters with a half at the end.
    let notes = [62, 64, 66, 67, 69, 71, 69, 66, 62];
    let x = distribution_of(notes.iter().enumerate().map(|(i, m)| {
        (Pitch(*m), if i == notes.len() - 1 { Quarters::from(2) } else { Quarters::from(1) })
    }))?;
    let mut ranked: Vec<(KeySignature, f64)> = KeySignature::all().map(|k| Ok((k, correlation(&x, k)?))).collect::<Result<_, versetune::Error>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (key, r) in ranked.iter().take(6) {
        println!("{key:<10} r={r:+.4}");
    }
    Ok(())
}
