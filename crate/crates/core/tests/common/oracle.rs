//! Brute-force key finding with its own copy of the probe-tone profiles, so
//! it shares no code or data with the library.

use versetune::score::{Measure, Note, Tie};
use versetune::{KeySignature, Pitch, Quarters, Score, TimeSignature};

pub const MAJOR: [f64; 12] = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
pub const MINOR: [f64; 12] = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

pub fn melody_score(notes: &[(u8, i64)]) -> Score {
    Score {
        title: "oracle".into(),
        time_signature: TimeSignature::FOUR_FOUR,
        key: KeySignature::major(0),
        measures: vec![Measure {
            notes: notes
                .iter()
                .map(|&(m, halves)| Note { pitch: Some(Pitch(m)), duration: Quarters::new(halves, 2), lyric: None, tie: Tie::None })
                .collect(),
        }],
        instrument: 0,
    }
}

/// Pearson r between the duration-weighted pitch-class vector and the
/// profile rotated to `tonic`, by the textbook two-pass formula.
pub fn oracle_r(notes: &[(u8, i64)], tonic: usize, minor: bool) -> f64 {
    let mut x = [0.0f64; 12];
    for &(m, halves) in notes {
        x[usize::from(m) % 12] += halves as f64 / 2.0;
    }
    let profile = if minor { MINOR } else { MAJOR };
    let y: Vec<f64> = (0..12).map(|i| profile[(i + 12 - tonic) % 12]).collect();
    let mx = x.iter().sum::<f64>() / 12.0;
    let my = y.iter().sum::<f64>() / 12.0;
    let sxy: f64 = (0..12).map(|i| (x[i] - mx) * (y[i] - my)).sum();
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Argmax over the 24 keys, tonic ascending and major before minor, first maximum kept.
pub fn oracle_best(notes: &[(u8, i64)]) -> (KeySignature, f64) {
    let mut best = (KeySignature::major(0), f64::NEG_INFINITY);
    for tonic in 0..12u8 {
        for minor in [false, true] {
            let r = oracle_r(notes, usize::from(tonic), minor);
            if r > best.1 {
                best = (if minor { KeySignature::minor(tonic) } else { KeySignature::major(tonic) }, r);
            }
        }
    }
    best
}
