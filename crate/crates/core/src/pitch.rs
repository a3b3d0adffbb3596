//! Pitch construction: seeded diatonic pitches generated note by note,
//! smoothed phrase by phrase, and closed with a tonal cadence.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::rhythm::RhythmicScore;
use crate::seed;
use crate::theory::{KeySignature, Pitch, PitchRange, Scale};

/// Sampling weight by absolute interval from the previous pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalWeights {
    /// 0 semitones.
    pub unison: f64,
    /// 1-2 semitones.
    pub step: f64,
    /// 3-4 semitones.
    pub third: f64,
    /// 5-7 semitones.
    pub fourth_fifth: f64,
    /// 8-9 semitones.
    pub sixth: f64,
}

impl Default for IntervalWeights {
    fn default() -> Self {
        IntervalWeights { unison: 1.0, step: 6.0, third: 3.0, fourth_fifth: 1.5, sixth: 0.5 }
    }
}

impl IntervalWeights {
    /// Weight of an interval; anything wider than 9 semitones is never drawn.
    pub fn weight(&self, semitones: u32) -> f64 {
        match semitones {
            0 => self.unison,
            1..=2 => self.step,
            3..=4 => self.third,
            5..=7 => self.fourth_fifth,
            8..=9 => self.sixth,
            _ => 0.0,
        }
    }
}

/// Tunable constants of the pitch stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub range: PitchRange,
    pub weights: IntervalWeights,
    /// Largest interval allowed after adjustment, in semitones.
    pub leap_threshold: u8,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { range: PitchRange::default(), weights: IntervalWeights::default(), leap_threshold: 7 }
    }
}

impl SamplerConfig {
    /// The range must span an octave so every key has a tonic and at least
    /// seven scale tones in it; the step weight must be positive so a
    /// stepwise continuation always exists.
    pub fn validate(&self) -> Result<()> {
        if self.range.high.0 < self.range.low.0 + 12 {
            return Err(Error::Config(format!(
                "pitch range {}..{} is narrower than an octave",
                self.range.low.0, self.range.high.0
            )));
        }
        let w = &self.weights;
        let all = [w.unison, w.step, w.third, w.fourth_fifth, w.sixth];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) || w.step <= 0.0 {
            return Err(Error::Config("interval weights must be finite, non-negative, with a positive step weight".into()));
        }
        if !(2..=12).contains(&self.leap_threshold) {
            return Err(Error::Config(format!("leap threshold {} is outside 2..=12", self.leap_threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhrasePosition {
    /// A segment with no cadence at its end.
    Internal,
    FinalPhrase,
    FinalSong,
}

/// A pitch for one rhythmic event, by its index in the flattened score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MelodyNote {
    pub pitch: Pitch,
    pub event: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MelodyLine {
    pub notes: Vec<MelodyNote>,
}

impl MelodyLine {
    pub fn pitches(&self) -> Vec<Pitch> {
        self.notes.iter().map(|n| n.pitch).collect()
    }
}

pub fn build_scale(ks: KeySignature) -> Scale {
    ks.scale()
}

fn distance(a: Pitch, b: Pitch) -> u32 {
    a.0.abs_diff(b.0).into()
}

fn is_triad_tone(scale: &Scale, p: Pitch) -> bool {
    let pc = p.pitch_class();
    pc == scale.tonic() || pc == scale.mediant() || pc == scale.dominant()
}

/// Draws the next pitch. The first note of a song is a tonic-triad tone near
/// the middle of the range; later notes are scale tones weighted by their
/// distance from `prev`.
pub fn generate_pitch<R: Rng + ?Sized>(prev: Option<Pitch>, scale: &Scale, config: &SamplerConfig, rng: &mut R) -> Pitch {
    let tones = scale.tones_in(config.range);
    match prev {
        None => {
            let mid = config.range.midpoint();
            let central: Vec<Pitch> =
                tones.iter().copied().filter(|p| is_triad_tone(scale, *p) && (f64::from(p.0) - mid).abs() <= 6.0).collect();
            let pool = if central.is_empty() {
                tones.iter().copied().filter(|p| is_triad_tone(scale, *p)).collect()
            } else {
                central
            };
            *pool.choose(rng).expect("an octave-wide range holds a tonic")
        }
        Some(prev) => {
            let weights: Vec<f64> = tones.iter().map(|t| config.weights.weight(distance(*t, prev))).collect();
            match WeightedIndex::new(&weights) {
                Ok(dist) => tones[dist.sample(rng)],
                Err(_) => nearest(&tones, prev, |_| true).unwrap_or(prev),
            }
        }
    }
}

/// The tone in `tones` closest to `target` among those passing `keep`; ties
/// go to the lower tone.
fn nearest(tones: &[Pitch], target: Pitch, keep: impl Fn(Pitch) -> bool) -> Option<Pitch> {
    tones.iter().copied().filter(|t| keep(*t)).min_by_key(|t| (distance(*t, target), t.0))
}

/// Brings `note` within `threshold` of `pred`, first by octave folding and
/// otherwise by taking the nearest scale tone that is close enough.
fn fold_leap(note: Pitch, pred: Pitch, tones: &[Pitch], threshold: u32) -> Pitch {
    if distance(note, pred) <= threshold {
        return note;
    }
    let mut folded = i32::from(note.0);
    let target = i32::from(pred.0);
    while folded.abs_diff(target) > threshold {
        folded += if folded > target { -12 } else { 12 };
    }
    let folded = Pitch(folded as u8);
    if tones.contains(&folded) {
        return folded;
    }
    nearest(tones, note, |t| distance(t, pred) <= threshold).unwrap_or(pred)
}

/// Applies the per-phrase smoothing rules to `segment`, which follows
/// `before` (the last pitch of the previous phrase, if any):
///
/// 1. leaps wider than the threshold are folded toward the previous note;
/// 2. after two leaps of a third or more in one direction the next note moves
///    one scale step the other way;
/// 3. a phrase-final note moves to the nearest tonic-triad tone and the
///    song-final note to the nearest tonic, staying within the threshold of
///    its predecessor when such a tone exists.
pub fn adjust_phrase(
    segment: &[Pitch],
    before: Option<Pitch>,
    scale: &Scale,
    config: &SamplerConfig,
    position: PhrasePosition,
) -> Vec<Pitch> {
    let tones = scale.tones_in(config.range);
    let threshold = u32::from(config.leap_threshold);
    let offset = usize::from(before.is_some());
    let mut line: Vec<Pitch> = before.into_iter().chain(segment.iter().copied()).collect();

    for i in offset.max(1)..line.len() {
        line[i] = fold_leap(line[i], line[i - 1], &tones, threshold);
    }

    for i in offset.max(3)..line.len() {
        let d1 = i32::from(line[i - 2].0) - i32::from(line[i - 3].0);
        let d2 = i32::from(line[i - 1].0) - i32::from(line[i - 2].0);
        if d1.abs() < 3 || d2.abs() < 3 || d1.signum() != d2.signum() {
            continue;
        }
        let d3 = i32::from(line[i].0) - i32::from(line[i - 1].0);
        if d3.signum() == -d2.signum() && (1..=2).contains(&d3.abs()) {
            continue;
        }
        let from = line[i - 1];
        let step = if d2 > 0 {
            tones.iter().rev().copied().find(|t| *t < from)
        } else {
            tones.iter().copied().find(|t| *t > from)
        };
        if let Some(step) = step {
            line[i] = step;
        }
    }

    if let (Some(last), false) = (line.len().checked_sub(1), position == PhrasePosition::Internal) {
        if last >= offset {
            let cadence = |p: Pitch| match position {
                PhrasePosition::FinalSong => p.pitch_class() == scale.tonic(),
                _ => is_triad_tone(scale, p),
            };
            let original = line[last];
            let snapped = match last.checked_sub(1).map(|i| line[i]) {
                Some(pred) => nearest(&tones, original, |t| cadence(t) && distance(t, pred) <= threshold),
                None => None,
            };
            line[last] = snapped.or_else(|| nearest(&tones, original, cadence)).unwrap_or(original);
        }
    }
    line.split_off(offset)
}

/// Walks backward from the end so every interval is within the threshold,
/// moving earlier notes and never the last one.
pub fn repair_leaps(pitches: &mut [Pitch], scale: &Scale, config: &SamplerConfig) {
    let tones = scale.tones_in(config.range);
    let threshold = u32::from(config.leap_threshold);
    for i in (0..pitches.len().saturating_sub(1)).rev() {
        let next = pitches[i + 1];
        if distance(pitches[i], next) > threshold {
            pitches[i] = nearest(&tones, pitches[i], |t| distance(t, next) <= threshold).unwrap_or(next);
        }
    }
}

/// Generates one pitch per rhythmic event, smoothing each phrase as soon as
/// it is complete so the next phrase continues from the adjusted line.
pub fn assign_pitches(rs: &RhythmicScore, ks: KeySignature, rng_seed: u64, config: &SamplerConfig) -> Result<MelodyLine> {
    config.validate()?;
    let scale = build_scale(ks);
    let mut rng = seed::rng(rng_seed);
    let events: Vec<usize> = rs.events().map(|e| e.phrase_index).collect();
    let mut pitches: Vec<Pitch> = Vec::with_capacity(events.len());
    let mut start = 0;
    while start < events.len() {
        let end = start + events[start..].iter().take_while(|p| **p == events[start]).count();
        let before = pitches.last().copied();
        let mut prev = before;
        let segment: Vec<Pitch> = (start..end)
            .map(|_| {
                let p = generate_pitch(prev, &scale, config, &mut rng);
                prev = Some(p);
                p
            })
            .collect();
        let position = if end == events.len() { PhrasePosition::FinalSong } else { PhrasePosition::FinalPhrase };
        pitches.extend(adjust_phrase(&segment, before, &scale, config, position));
        start = end;
    }
    repair_leaps(&mut pitches, &scale, config);
    Ok(MelodyLine { notes: pitches.into_iter().enumerate().map(|(event, pitch)| MelodyNote { pitch, event }).collect() })
}

/// Key confidence of `ml` in `key`, weighting pitch classes by the rhythm's durations.
pub fn melody_key_confidence(rs: &RhythmicScore, ml: &MelodyLine, key: KeySignature) -> Result<f64> {
    let x = eval::distribution_of(rs.events().zip(&ml.notes).map(|(e, n)| (n.pitch, e.duration)))?;
    eval::correlation(&x, key)
}

/// One melody per candidate key (candidate `i` seeded with
/// `sub_seed(seed, i)`); returns the one whose melody fits its own key best.
/// Ties keep the earlier candidate.
pub fn select_key(
    rs: &RhythmicScore,
    candidates: &[KeySignature],
    rng_seed: u64,
    config: &SamplerConfig,
) -> Result<(KeySignature, MelodyLine)> {
    let mut best: Option<(f64, KeySignature, MelodyLine)> = None;
    for (i, key) in candidates.iter().enumerate() {
        let ml = assign_pitches(rs, *key, seed::sub_seed(rng_seed, i as u64), config)?;
        let r = melody_key_confidence(rs, &ml, *key).unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(b, _, _)| r > *b) {
            best = Some((r, *key, ml));
        }
    }
    best.map(|(_, k, ml)| (k, ml)).ok_or_else(|| Error::InvalidRequest("select_key needs at least one candidate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhythm::construct_rhythmic_score;
    use crate::setup::setup_score;

    fn c_major() -> Scale {
        build_scale(KeySignature::major(0))
    }

    fn p(list: &[u8]) -> Vec<Pitch> {
        list.iter().copied().map(Pitch).collect()
    }

    #[test]
    fn scales() {
        assert_eq!(build_scale(KeySignature::major(0)).pitch_classes, [0, 2, 4, 5, 7, 9, 11]);
        assert_eq!(build_scale(KeySignature::minor(9)).pitch_classes, [9, 11, 0, 2, 4, 5, 7]);
        assert_eq!(build_scale(KeySignature::major(2)).pitch_classes, [2, 4, 6, 7, 9, 11, 1]);
    }

    #[test]
    fn opening_note_is_a_triad_tone() {
        let config = SamplerConfig::default();
        for s in 0..200 {
            let note = generate_pitch(None, &c_major(), &config, &mut seed::rng(s));
            assert!([0, 4, 7].contains(&note.pitch_class()), "{note:?}");
        }
    }

    #[test]
    fn sampler_respects_cap_and_scale() {
        let config = SamplerConfig::default();
        let scale = c_major();
        let mut rng = seed::rng(9);
        for prev in scale.tones_in(config.range) {
            for _ in 0..50 {
                let next = generate_pitch(Some(prev), &scale, &config, &mut rng);
                assert!(distance(next, prev) <= 9);
                assert!(scale.contains(next) && config.range.contains(next));
            }
        }
        let a = generate_pitch(Some(Pitch(64)), &scale, &config, &mut seed::rng(5));
        let b = generate_pitch(Some(Pitch(64)), &scale, &config, &mut seed::rng(5));
        assert_eq!(a, b);
    }

    #[test]
    fn song_final_snaps_to_tonic() {
        let out = adjust_phrase(&p(&[67, 69, 71]), None, &c_major(), &SamplerConfig::default(), PhrasePosition::FinalSong);
        assert_eq!(out, p(&[67, 69, 72]));
    }

    #[test]
    fn octave_leap_is_folded() {
        let out = adjust_phrase(&p(&[60, 72]), None, &c_major(), &SamplerConfig::default(), PhrasePosition::Internal);
        assert!(distance(out[0], out[1]) <= 7);
        assert_eq!(out, p(&[60, 60]));
    }

    #[test]
    fn smooth_internal_segment_is_untouched() {
        let seg = p(&[60, 62, 64, 62]);
        assert_eq!(adjust_phrase(&seg, None, &c_major(), &SamplerConfig::default(), PhrasePosition::Internal), seg);
    }

    #[test]
    fn two_leaps_are_recovered_by_contrary_step() {
        // 60 -> 64 -> 67 climbs by two thirds; the next note must step down from 67.
        let out = adjust_phrase(&p(&[60, 64, 67, 71]), None, &c_major(), &SamplerConfig::default(), PhrasePosition::Internal);
        assert_eq!(out, p(&[60, 64, 67, 65]));
    }

    #[test]
    fn phrase_final_uses_triad_within_reach() {
        // B4 after A4 resolves to the nearest triad tone, C5.
        let out = adjust_phrase(&p(&[69, 71]), Some(Pitch(67)), &c_major(), &SamplerConfig::default(), PhrasePosition::FinalPhrase);
        assert_eq!(out, p(&[69, 72]));
    }

    #[test]
    fn repair_closes_wide_gap_before_a_fixed_ending() {
        // F# minor within C4..E5 has its only tonic at F#4; a line sitting at
        // the top of the range has to come down to it.
        let scale = build_scale(KeySignature::minor(6));
        let config = SamplerConfig::default();
        let mut line = p(&[76, 76, 66]);
        repair_leaps(&mut line, &scale, &config);
        assert!(line.windows(2).all(|w| distance(w[0], w[1]) <= 7));
        assert_eq!(line[2], Pitch(66));
    }

    fn rhythm(text: &str, key: KeySignature) -> RhythmicScore {
        let (plan, lp, dw) = setup_score(text, Some(key), 0).unwrap();
        construct_rhythmic_score(&plan, &lp, &dw).unwrap()
    }

    #[test]
    fn assigned_melodies_hold_invariants() {
        let config = SamplerConfig::default();
        let key = KeySignature::minor(6);
        let rs = rhythm("Stars are shining over the quiet harbor, boats are sleeping, night is falling slowly.", key);
        let scale = build_scale(key);
        for s in 0..100 {
            let ml = assign_pitches(&rs, key, s, &config).unwrap();
            let pitches = ml.pitches();
            assert_eq!(pitches.len(), rs.event_count());
            assert!(pitches.iter().all(|x| scale.contains(*x) && config.range.contains(*x)));
            assert!(pitches.windows(2).all(|w| distance(w[0], w[1]) <= 7));
            assert_eq!(pitches.last().unwrap().pitch_class(), 6);
            assert_eq!(ml, assign_pitches(&rs, key, s, &config).unwrap());
        }
    }

    #[test]
    fn seeds_vary_melodies() {
        let config = SamplerConfig::default();
        let key = KeySignature::major(0);
        let rs = rhythm("the little boat is sailing on the water under golden morning light, and every sleepy harbor's waking to the tide", key);
        assert!(rs.event_count() >= 20);
        for s in 0..100u64 {
            let a = assign_pitches(&rs, key, 2 * s, &config).unwrap();
            let b = assign_pitches(&rs, key, 2 * s + 1, &config).unwrap();
            assert_ne!(a, b);
        }
    }

    #[test]
    fn select_key_takes_highest_confidence() {
        let config = SamplerConfig::default();
        let rs = rhythm("happy birds are singing in the morning sun", KeySignature::major(0));
        let candidates = [KeySignature::major(0), KeySignature::major(7), KeySignature::major(5)];
        let (key, ml) = select_key(&rs, &candidates, 11, &config).unwrap();
        let scores: Vec<f64> = candidates
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let ml = assign_pitches(&rs, *k, seed::sub_seed(11, i as u64), &config).unwrap();
                melody_key_confidence(&rs, &ml, *k).unwrap()
            })
            .collect();
        let best = (0..3).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        assert_eq!(key, candidates[best]);
        assert_eq!(ml, assign_pitches(&rs, key, seed::sub_seed(11, best as u64), &config).unwrap());

        let (single, single_ml) = select_key(&rs, &candidates[1..2], 11, &config).unwrap();
        assert_eq!(single, candidates[1]);
        assert_eq!(single_ml, assign_pitches(&rs, candidates[1], seed::sub_seed(11, 0), &config).unwrap());
        assert!(select_key(&rs, &[], 0, &config).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let narrow = SamplerConfig { range: PitchRange::new(60, 70).unwrap(), ..Default::default() };
        assert!(narrow.validate().is_err());
        let no_steps = SamplerConfig { weights: IntervalWeights { step: 0.0, ..Default::default() }, ..Default::default() };
        assert!(no_steps.validate().is_err());
    }
}
