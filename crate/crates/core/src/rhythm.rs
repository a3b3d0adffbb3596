//! Rhythm construction: lays each phrase's syllables onto an eighth-note beat
//! grid so that keyword stresses fall on strong beats.
//!
//! Placement is a greedy pass over a syllable queue. The next anchor (a
//! stressed syllable of a keyword) goes to the earliest strong slot that still
//! leaves room for the syllables queued before it. Those syllables take the
//! even (on-beat) slots closest to the anchor, so they read as a pickup into
//! it. When no strong slot is left in the measure the pending syllables become
//! a pickup at the end of the bar and the anchor moves to the next downbeat.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyrics::{PhraseList, WordDictionary};
use crate::setup::ScorePlan;
use crate::theory::TimeSignature;
use crate::Quarters;

/// Slots per quarter note.
const SLOTS_PER_QUARTER: i64 = 2;
/// Longest note the extend-to-next-onset rule may produce, in slots.
const MAX_EXTENSION: usize = 4;
/// Allowed note and rest lengths in slots: eighth, quarter, half, dotted half, whole.
pub const DURATION_SLOTS: [usize; 5] = [8, 6, 4, 2, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeatStrength {
    Strong,
    Weak,
    Off,
}

/// Position of a syllable within its word, as MusicXML's `syllabic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Syllabic {
    Single,
    Begin,
    Middle,
    End,
}

impl Syllabic {
    pub fn for_position(index: usize, count: usize) -> Self {
        match (index, count) {
            (_, 1) => Syllabic::Single,
            (0, _) => Syllabic::Begin,
            (i, n) if i + 1 == n => Syllabic::End,
            _ => Syllabic::Middle,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Syllabic::Single => "single",
            Syllabic::Begin => "begin",
            Syllabic::Middle => "middle",
            Syllabic::End => "end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSlot {
    pub onset: Quarters,
    pub strength: BeatStrength,
}

/// Eighth-note slots of one measure with their metric strength.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatGrid {
    pub ts: TimeSignature,
    pub slots: Vec<GridSlot>,
}

impl BeatGrid {
    pub fn new(ts: TimeSignature) -> Result<Self> {
        if !ts.is_generated() {
            return Err(Error::UnsupportedMeter(ts.to_string()));
        }
        let count = (ts.measure_quarters() * SLOTS_PER_QUARTER).to_integer() as usize;
        let slots = (0..count)
            .map(|i| {
                let onset = slot_onset(i);
                GridSlot { onset, strength: beat_strength(ts, onset) }
            })
            .collect();
        Ok(BeatGrid { ts, slots })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    fn strong_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots_with(BeatStrength::Strong)
    }

    fn slots_with(&self, strength: BeatStrength) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().enumerate().filter(move |(_, s)| s.strength == strength).map(|(i, _)| i)
    }
}

fn slot_onset(slot: usize) -> Quarters {
    Quarters::new(slot as i64, SLOTS_PER_QUARTER)
}

/// Strong-beat onsets (in quarters from the barline) of a generated meter.
pub fn strong_beat_positions(ts: TimeSignature) -> Result<Vec<Quarters>> {
    let grid = BeatGrid::new(ts)?;
    Ok(grid.strong_slots().map(slot_onset).collect())
}

/// Metric strength of an onset in any meter. The downbeat is strong, as is the
/// half-bar in 4/4 (and the half-bar of 12/8); other beats are weak and
/// everything between beats is off. Compound meters (6/8, 9/8, 12/8) count
/// dotted-quarter beats.
pub fn beat_strength(ts: TimeSignature, onset: Quarters) -> BeatStrength {
    let measure = ts.measure_quarters();
    let position = onset - (onset / measure).floor() * measure;
    let compound = ts.beat_unit == 8 && ts.beats_per_measure.is_multiple_of(3) && ts.beats_per_measure > 3;
    let (beat, beats) = if compound {
        (Quarters::new(3, 2), ts.beats_per_measure / 3)
    } else {
        (Quarters::new(4, i64::from(ts.beat_unit)), ts.beats_per_measure)
    };
    if position == Quarters::from(0) {
        return BeatStrength::Strong;
    }
    let in_beats = position / beat;
    if !in_beats.is_integer() {
        return BeatStrength::Off;
    }
    if beats == 4 && in_beats.to_integer() == 2 {
        BeatStrength::Strong
    } else {
        BeatStrength::Weak
    }
}

/// One syllable waiting to be placed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedSyllable {
    pub syllable: String,
    pub word: String,
    pub syllabic: Syllabic,
    pub stressed: bool,
    pub is_keyword_stress: bool,
    pub phrase_index: usize,
}

/// A timed lyric syllable inside one measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhythmicEvent {
    pub onset: Quarters,
    pub duration: Quarters,
    pub syllable: String,
    pub word: String,
    pub syllabic: Syllabic,
    pub is_keyword_stress: bool,
    pub strength: BeatStrength,
    pub phrase_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhythmicMeasure {
    pub phrase_index: usize,
    pub events: Vec<RhythmicEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmicScore {
    pub measures: Vec<RhythmicMeasure>,
    pub plan: ScorePlan,
}

impl RhythmicScore {
    pub fn events(&self) -> impl Iterator<Item = &RhythmicEvent> {
        self.measures.iter().flat_map(|m| m.events.iter())
    }

    pub fn event_count(&self) -> usize {
        self.measures.iter().map(|m| m.events.len()).sum()
    }
}

/// The syllables of one phrase in lyric order.
pub fn phrase_queue(phrase: &[String], dw: &WordDictionary, phrase_index: usize) -> Result<VecDeque<QueuedSyllable>> {
    let mut queue = VecDeque::new();
    for word in phrase {
        let entry = dw
            .get(word)
            .ok_or_else(|| Error::InvalidRequest(format!("word {word:?} missing from the dictionary")))?;
        let count = entry.syllables.len();
        for (i, (syllable, stress)) in entry.syllables.iter().zip(&entry.stress).enumerate() {
            queue.push_back(QueuedSyllable {
                syllable: syllable.clone(),
                word: word.clone(),
                syllabic: Syllabic::for_position(i, count),
                stressed: stress.is_stressed(),
                is_keyword_stress: entry.is_keyword && stress.is_stressed(),
                phrase_index,
            });
        }
    }
    Ok(queue)
}

/// `k` slots from the half-open range `lo..hi`, preferring even slots close to
/// `hi`; odd slots closest to `hi` make up any shortfall.
fn slots_before(lo: usize, hi: usize, k: usize) -> Vec<usize> {
    let evens: Vec<usize> = (lo..hi).filter(|s| s % 2 == 0).collect();
    let mut chosen: Vec<usize> = if k <= evens.len() {
        evens[evens.len() - k..].to_vec()
    } else {
        let odds = (lo..hi).rev().filter(|s| s % 2 == 1).take(k - evens.len());
        evens.iter().copied().chain(odds).collect()
    };
    chosen.sort_unstable();
    chosen
}

/// `k` slots from `lo..hi` preferring the earliest even slots, then the
/// earliest odd ones.
fn slots_after(lo: usize, hi: usize, k: usize) -> Vec<usize> {
    let evens = (lo..hi).filter(|s| s % 2 == 0);
    let odds = (lo..hi).filter(|s| s % 2 == 1);
    let mut chosen: Vec<usize> = evens.chain(odds).take(k).collect();
    chosen.sort_unstable();
    chosen
}

/// Longest vocabulary length that fits in `slots`.
fn snap_down(slots: usize) -> usize {
    DURATION_SLOTS.iter().copied().find(|d| *d <= slots).unwrap_or(0)
}

/// Splits a rest of `slots` into vocabulary lengths, longest first.
pub fn decompose_rest(mut slots: usize) -> Vec<usize> {
    let mut parts = Vec::new();
    while slots > 0 {
        let part = snap_down(slots);
        parts.push(part);
        slots -= part;
    }
    parts
}

/// Fills one measure from the front of `queue`. Slots left empty are rests.
///
/// In a phrase-final measure an anchor that finds no strong slot falls back to
/// a weak one; it is never put on an off-beat. Outside the final measure the
/// leftover syllables carry over to the next measure instead.
pub fn build_measure_rhythm(
    queue: &mut VecDeque<QueuedSyllable>,
    grid: &BeatGrid,
    is_phrase_final_measure: bool,
) -> Result<Vec<RhythmicEvent>> {
    let cap = grid.capacity();
    let mut placed: Vec<(usize, QueuedSyllable)> = Vec::new();
    let mut cursor = 0;
    let take = |queue: &mut VecDeque<QueuedSyllable>, slots: Vec<usize>, placed: &mut Vec<(usize, QueuedSyllable)>| {
        for slot in slots {
            placed.push((slot, queue.pop_front().expect("slot count never exceeds the queue")));
        }
    };

    while !queue.is_empty() {
        let anchor = queue.iter().position(|q| q.is_keyword_stress);
        let Some(pending) = anchor else {
            // Only syllables after the last anchor remain.
            let k = queue.len();
            if k > cap - cursor {
                if !is_phrase_final_measure {
                    take(queue, (cursor..cap).collect(), &mut placed);
                    break;
                }
                return Err(Error::CapacityExceeded(format!("{k} syllables for {} free slots", cap - cursor)));
            }
            take(queue, slots_after(cursor, cap, k), &mut placed);
            break;
        };
        let target = grid.strong_slots().find(|s| *s >= cursor + pending).or_else(|| {
            is_phrase_final_measure.then(|| grid.slots_with(BeatStrength::Weak).find(|s| *s >= cursor + pending)).flatten()
        });
        match target {
            Some(slot) => {
                take(queue, slots_before(cursor, slot, pending), &mut placed);
                take(queue, vec![slot], &mut placed);
                cursor = slot + 1;
            }
            None if !is_phrase_final_measure => {
                let room = cap - cursor;
                if pending <= room {
                    take(queue, slots_before(cursor, cap, pending), &mut placed);
                } else {
                    take(queue, (cursor..cap).collect(), &mut placed);
                }
                break;
            }
            None => {
                return Err(Error::CapacityExceeded(format!(
                    "no strong or weak slot left for {:?} after {pending} syllables",
                    queue[pending].syllable
                )))
            }
        }
    }

    let phrase_done = queue.is_empty();
    let count = placed.len();
    let events = placed
        .iter()
        .enumerate()
        .map(|(i, (slot, q))| {
            let next = placed.get(i + 1).map_or(cap, |(s, _)| *s);
            let room = next - slot;
            let span = if i + 1 == count && phrase_done { room } else { room.min(MAX_EXTENSION) };
            let onset = slot_onset(*slot);
            RhythmicEvent {
                onset,
                duration: Quarters::new(snap_down(span) as i64, SLOTS_PER_QUARTER),
                syllable: q.syllable.clone(),
                word: q.word.clone(),
                syllabic: q.syllabic,
                is_keyword_stress: q.is_keyword_stress,
                strength: grid.slots[*slot].strength,
                phrase_index: q.phrase_index,
            }
        })
        .collect();
    Ok(events)
}

/// Measures the greedy needs to place `queue` when no measure is treated as
/// phrase-final, so every anchor reaches a strong beat.
pub fn measures_needed(queue: &VecDeque<QueuedSyllable>, ts: TimeSignature) -> Result<usize> {
    let grid = BeatGrid::new(ts)?;
    let mut queue = queue.clone();
    let mut measures = 1;
    build_measure_rhythm(&mut queue, &grid, false)?;
    while !queue.is_empty() {
        build_measure_rhythm(&mut queue, &grid, false)?;
        measures += 1;
    }
    Ok(measures)
}

/// Lays every phrase into its planned span of measures.
pub fn construct_rhythmic_score(plan: &ScorePlan, lp: &PhraseList, dw: &WordDictionary) -> Result<RhythmicScore> {
    if plan.phrase_measure_spans.len() != lp.len() {
        return Err(Error::InvalidRequest(format!(
            "plan has {} phrase spans for {} phrases",
            plan.phrase_measure_spans.len(),
            lp.len()
        )));
    }
    let grid = BeatGrid::new(plan.ts)?;
    let mut measures = Vec::with_capacity(plan.measure_count);
    for (index, (phrase, span)) in lp.phrases.iter().zip(&plan.phrase_measure_spans).enumerate() {
        let mut queue = phrase_queue(phrase, dw, index)?;
        for m in 0..*span {
            let events = build_measure_rhythm(&mut queue, &grid, m + 1 == *span)?;
            measures.push(RhythmicMeasure { phrase_index: index, events });
        }
        if !queue.is_empty() {
            return Err(Error::CapacityExceeded(format!("phrase {index} overflows its {span} measures")));
        }
    }
    Ok(RhythmicScore { measures, plan: plan.clone() })
}
