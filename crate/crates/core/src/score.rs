//! The finished melody: pitched, timed, lyric-aligned notes grouped in measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitch::MelodyLine;
use crate::rhythm::{self, RhythmicScore, Syllabic};
use crate::theory::{KeySignature, Pitch, TimeSignature};
use crate::Quarters;

/// General MIDI program used when none is requested (acoustic grand piano).
pub const DEFAULT_INSTRUMENT: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tie {
    #[default]
    None,
    Start,
    Stop,
    /// Continues a tie into the next note (a note tied on both sides).
    StopStart,
}

impl Tie {
    pub fn continues_previous(self) -> bool {
        matches!(self, Tie::Stop | Tie::StopStart)
    }

    pub fn continues_next(self) -> bool {
        matches!(self, Tie::Start | Tie::StopStart)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lyric {
    pub text: String,
    pub syllabic: Syllabic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    /// `None` is a rest.
    pub pitch: Option<Pitch>,
    pub duration: Quarters,
    pub lyric: Option<Lyric>,
    pub tie: Tie,
}

impl Note {
    pub fn rest(duration: Quarters) -> Self {
        Note { pitch: None, duration, lyric: None, tie: Tie::None }
    }

    pub fn is_rest(&self) -> bool {
        self.pitch.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Measure {
    pub notes: Vec<Note>,
}

impl Measure {
    pub fn duration(&self) -> Quarters {
        self.notes.iter().map(|n| n.duration).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub title: String,
    pub time_signature: TimeSignature,
    pub key: KeySignature,
    pub measures: Vec<Measure>,
    /// General MIDI program number (0-127).
    pub instrument: u8,
}

/// A pitched note after merging ties, positioned on the score timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundingNote {
    pub pitch: Pitch,
    /// Offset from the start of the score in quarters.
    pub start: Quarters,
    /// Offset from the start of its first measure.
    pub measure_offset: Quarters,
    pub duration: Quarters,
    pub lyric: Option<Lyric>,
}

impl Score {
    pub fn notes(&self) -> impl Iterator<Item = &Note> {
        self.measures.iter().flat_map(|m| m.notes.iter())
    }

    pub fn total_duration(&self) -> Quarters {
        self.measures.iter().map(Measure::duration).sum()
    }

    /// Checks that every measure is exactly full. Parsed scores with pickup
    /// bars fail this; generated scores never do.
    pub fn validate(&self) -> Result<()> {
        let expected = self.time_signature.measure_quarters();
        for (i, m) in self.measures.iter().enumerate() {
            if m.duration() != expected {
                return Err(Error::MalformedScore(format!(
                    "measure {} lasts {} quarters, expected {expected}",
                    i + 1,
                    m.duration()
                )));
            }
            if let Some(n) = m.notes.iter().find(|n| n.duration <= Quarters::from(0)) {
                return Err(Error::MalformedScore(format!("measure {} has a note of length {}", i + 1, n.duration)));
            }
        }
        Ok(())
    }

    /// Where each measure starts, in quarters from the top of the score, and
    /// the offset of its first note within a full bar. A short first measure is
    /// read as a pickup that ends on the barline.
    fn measure_starts(&self) -> Vec<(Quarters, Quarters)> {
        let full = self.time_signature.measure_quarters();
        let mut start = Quarters::from(0);
        self.measures
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let length = m.duration();
                let lead = if i == 0 && length < full && self.measures.len() > 1 { full - length } else { Quarters::from(0) };
                let entry = (start, lead);
                start += length;
                entry
            })
            .collect()
    }

    /// Pitched notes with ties merged into single sounding events.
    pub fn sounding_notes(&self) -> Vec<SoundingNote> {
        let mut out: Vec<SoundingNote> = Vec::new();
        let mut open = false;
        for (m, (start, lead)) in self.measures.iter().zip(self.measure_starts()) {
            let mut offset = Quarters::from(0);
            for note in &m.notes {
                if let Some(pitch) = note.pitch {
                    let extend = open && note.tie.continues_previous() && out.last().is_some_and(|last| last.pitch == pitch);
                    if extend {
                        out.last_mut().expect("checked above").duration += note.duration;
                    } else {
                        out.push(SoundingNote {
                            pitch,
                            start: start + offset,
                            measure_offset: lead + offset,
                            duration: note.duration,
                            lyric: note.lyric.clone(),
                        });
                    }
                    open = note.tie.continues_next();
                } else {
                    open = false;
                }
                offset += note.duration;
            }
        }
        out
    }

    /// Pitch sequence of the melody, one entry per sounding note.
    pub fn pitches(&self) -> Vec<Pitch> {
        self.sounding_notes().iter().map(|n| n.pitch).collect()
    }

    /// Copy with every pitch shifted by `semitones` and the key moved with it.
    pub fn transposed(&self, semitones: i32) -> Option<Score> {
        let mut out = self.clone();
        for note in out.measures.iter_mut().flat_map(|m| m.notes.iter_mut()) {
            if let Some(p) = note.pitch {
                note.pitch = Some(p.transpose(semitones)?);
            }
        }
        out.key.tonic = (i32::from(self.key.tonic) + semitones).rem_euclid(12) as u8;
        Some(out)
    }

    /// Copy with all lyrics removed.
    pub fn without_lyrics(&self) -> Score {
        let mut out = self.clone();
        for note in out.measures.iter_mut().flat_map(|m| m.notes.iter_mut()) {
            note.lyric = None;
        }
        out
    }
}

/// A word rebuilt from the syllables of a score's lyric line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LyricWord {
    pub text: String,
    pub syllables: Vec<String>,
    /// The word closes a phrase: its text ends in punctuation, a rest follows
    /// it, or it is the last word of the score.
    pub phrase_end: bool,
}

/// Lowercase letters and apostrophes of a lyric syllable.
pub fn normalize_syllable(text: &str) -> String {
    text.chars()
        .filter(|c| c.is_alphabetic() || *c == '\'' || *c == '’')
        .map(|c| if c == '’' { '\'' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

impl Score {
    /// The lyric line regrouped into words using the `syllabic` markers.
    pub fn lyric_words(&self) -> Vec<LyricWord> {
        let mut words: Vec<LyricWord> = Vec::new();
        let mut open = false;
        let mut rest_since_last = false;
        for note in self.notes() {
            let Some(lyric) = note.lyric.as_ref().filter(|_| note.pitch.is_some()) else {
                if note.is_rest() {
                    rest_since_last = true;
                }
                continue;
            };
            if rest_since_last {
                if let Some(last) = words.last_mut() {
                    last.phrase_end = true;
                }
            }
            rest_since_last = false;
            let syllable = normalize_syllable(&lyric.text);
            if syllable.is_empty() {
                continue;
            }
            let starts_word = !open || matches!(lyric.syllabic, Syllabic::Single | Syllabic::Begin);
            if starts_word {
                words.push(LyricWord { text: String::new(), syllables: Vec::new(), phrase_end: false });
            }
            let word = words.last_mut().expect("pushed above");
            word.text.push_str(&syllable);
            word.syllables.push(syllable);
            word.phrase_end = lyric.text.trim_end().ends_with(['.', ',', ';', ':', '!', '?']);
            open = matches!(lyric.syllabic, Syllabic::Begin | Syllabic::Middle);
        }
        if let Some(last) = words.last_mut() {
            last.phrase_end = true;
        }
        words
    }

    /// Normalized lyric syllables in order, one per lyric-bearing note.
    pub fn lyric_syllables(&self) -> Vec<String> {
        self.lyric_words().into_iter().flat_map(|w| w.syllables).collect()
    }

    /// Lyric text with one phrase per line, suitable for recomposition.
    pub fn lyric_text(&self) -> String {
        let mut text = String::new();
        for word in self.lyric_words() {
            text.push_str(&word.text);
            text.push(if word.phrase_end { '\n' } else { ' ' });
        }
        text.trim_end().to_string()
    }
}

fn slots_to_quarters(slots: usize) -> Quarters {
    Quarters::new(slots as i64, 2)
}

fn rests_between(from: Quarters, to: Quarters) -> Vec<Note> {
    let slots = ((to - from) * 2).to_integer() as usize;
    rhythm::decompose_rest(slots).into_iter().map(|s| Note::rest(slots_to_quarters(s))).collect()
}

/// Merges rhythm, pitches and lyrics into a score. Gaps between events become
/// rests; `with_lyrics = false` produces the instrumental variant.
pub fn finalize_score(
    rs: &RhythmicScore,
    ml: &MelodyLine,
    title: &str,
    instrument: u8,
    with_lyrics: bool,
) -> Result<Score> {
    let events = rs.event_count();
    if ml.notes.len() != events {
        return Err(Error::AlignmentMismatch { melody: ml.notes.len(), events });
    }
    if instrument > 127 {
        return Err(Error::InvalidRequest(format!("instrument {instrument} is not a General MIDI program")));
    }
    let bar = rs.plan.ts.measure_quarters();
    let mut pitches = ml.notes.iter().map(|n| n.pitch);
    let measures = rs
        .measures
        .iter()
        .map(|m| {
            let mut notes = Vec::new();
            let mut cursor = Quarters::from(0);
            for event in &m.events {
                notes.extend(rests_between(cursor, event.onset));
                let lyric = with_lyrics.then(|| Lyric { text: event.syllable.clone(), syllabic: event.syllabic });
                notes.push(Note { pitch: pitches.next(), duration: event.duration, lyric, tie: Tie::None });
                cursor = event.onset + event.duration;
            }
            notes.extend(rests_between(cursor, bar));
            Measure { notes }
        })
        .collect();
    Ok(Score {
        title: title.to_string(),
        time_signature: rs.plan.ts,
        key: rs.plan.ks,
        measures,
        instrument,
    })
}
