//! Pitches, keys, scales and meters shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A MIDI note number (60 = middle C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pitch(pub u8);

impl Pitch {
    pub fn midi(self) -> u8 {
        self.0
    }

    pub fn pitch_class(self) -> u8 {
        self.0 % 12
    }

    pub fn octave(self) -> i32 {
        i32::from(self.0) / 12 - 1
    }

    pub fn transpose(self, semitones: i32) -> Option<Pitch> {
        let value = i32::from(self.0) + semitones;
        u8::try_from(value).ok().filter(|v| *v <= 127).map(Pitch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    /// Scale degrees in semitones above the tonic (Ionian / Aeolian).
    pub fn intervals(self) -> [u8; 7] {
        match self {
            Mode::Major => [0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => [0, 2, 3, 5, 7, 8, 10],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        }
    }
}

/// Tonic pitch class plus mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeySignature {
    pub tonic: u8,
    pub mode: Mode,
}

/// The 17 keys generation draws from. The list itself is an assumption: nine
/// major keys with at most four accidentals, the eight most common minor keys.
pub const KEY_CATALOG: [KeySignature; 17] = [
    KeySignature::major(0),
    KeySignature::major(7),
    KeySignature::major(2),
    KeySignature::major(9),
    KeySignature::major(4),
    KeySignature::major(5),
    KeySignature::major(10),
    KeySignature::major(3),
    KeySignature::major(8),
    KeySignature::minor(9),
    KeySignature::minor(4),
    KeySignature::minor(11),
    KeySignature::minor(2),
    KeySignature::minor(7),
    KeySignature::minor(0),
    KeySignature::minor(5),
    KeySignature::minor(6),
];

const MAJOR_NAMES: [&str; 12] = ["C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"];
const MINOR_NAMES: [&str; 12] = ["C", "C#", "D", "Eb", "E", "F", "F#", "G", "G#", "A", "Bb", "B"];

impl KeySignature {
    pub const fn major(tonic: u8) -> Self {
        KeySignature { tonic, mode: Mode::Major }
    }

    pub const fn minor(tonic: u8) -> Self {
        KeySignature { tonic, mode: Mode::Minor }
    }

    /// All 24 major and minor keys ordered by tonic, major before minor.
    pub fn all() -> impl Iterator<Item = KeySignature> {
        (0..12u8).flat_map(|t| [KeySignature::major(t), KeySignature::minor(t)])
    }

    pub fn in_catalog(&self) -> bool {
        KEY_CATALOG.contains(self)
    }

    pub fn catalog_for(mode: Mode) -> Vec<KeySignature> {
        KEY_CATALOG.iter().copied().filter(|k| k.mode == mode).collect()
    }

    /// Parse a key name and require it to be one of the catalog keys.
    pub fn parse_catalog(name: &str) -> Result<Self> {
        let key: KeySignature = name.parse()?;
        if key.in_catalog() {
            Ok(key)
        } else {
            Err(Error::UnknownKey(name.to_string()))
        }
    }

    /// Circle-of-fifths position of the key signature (negative = flats).
    pub fn fifths(&self) -> i32 {
        let major_tonic = match self.mode {
            Mode::Major => self.tonic,
            Mode::Minor => (self.tonic + 3) % 12,
        };
        // 7 is its own inverse mod 12: fifths = 7 * tonic mod 12, folded into -5..=6.
        let f = (i32::from(major_tonic) * 7).rem_euclid(12);
        if f > 6 {
            f - 12
        } else {
            f
        }
    }

    pub fn prefers_flats(&self) -> bool {
        self.fifths() < 0
    }

    pub fn tonic_name(&self) -> &'static str {
        match self.mode {
            Mode::Major => MAJOR_NAMES[usize::from(self.tonic % 12)],
            Mode::Minor => MINOR_NAMES[usize::from(self.tonic % 12)],
        }
    }

    /// Filename-friendly form, e.g. `f-sharp-minor`.
    pub fn slug(&self) -> String {
        let name = self.tonic_name();
        let letter = name[..1].to_lowercase();
        let accidental = match &name[1..] {
            "#" => "-sharp",
            "b" => "-flat",
            _ => "",
        };
        format!("{letter}{accidental}-{}", self.mode.name())
    }

    pub fn scale(&self) -> Scale {
        Scale::new(*self)
    }
}

impl fmt::Display for KeySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tonic_name(), self.mode.name())
    }
}

impl FromStr for KeySignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownKey(s.to_string());
        let text = s.trim();
        let mut chars = text.chars();
        let letter = chars.next().ok_or_else(unknown)?;
        let natural: i32 = match letter.to_ascii_uppercase() {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return Err(unknown()),
        };
        let rest: String = chars.collect();
        let (alter, rest) = match rest.chars().next() {
            Some('#') | Some('♯') => (1, &rest[rest.chars().next().unwrap().len_utf8()..]),
            Some('b') | Some('♭') => (-1, &rest[rest.chars().next().unwrap().len_utf8()..]),
            _ => (0, rest.as_str()),
        };
        let mode = match rest.trim().to_lowercase().as_str() {
            "" | "major" | "maj" | "ionian" => Mode::Major,
            "minor" | "min" | "m" | "aeolian" => Mode::Minor,
            _ => return Err(unknown()),
        };
        let tonic = (natural + alter).rem_euclid(12) as u8;
        Ok(KeySignature { tonic, mode })
    }
}

impl Serialize for KeySignature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KeySignature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Seven ordered pitch classes of a key, starting at the tonic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scale {
    pub key: KeySignature,
    pub pitch_classes: [u8; 7],
}

impl Scale {
    pub fn new(key: KeySignature) -> Self {
        let pitch_classes = key.mode.intervals().map(|i| (key.tonic + i) % 12);
        Scale { key, pitch_classes }
    }

    pub fn contains(&self, pitch: Pitch) -> bool {
        self.pitch_classes.contains(&pitch.pitch_class())
    }

    pub fn tonic(&self) -> u8 {
        self.pitch_classes[0]
    }

    pub fn mediant(&self) -> u8 {
        self.pitch_classes[2]
    }

    pub fn dominant(&self) -> u8 {
        self.pitch_classes[4]
    }

    /// Scale tones inside `range`, ascending.
    pub fn tones_in(&self, range: PitchRange) -> Vec<Pitch> {
        (range.low.0..=range.high.0).map(Pitch).filter(|p| self.contains(*p)).collect()
    }
}

/// Inclusive singing range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchRange {
    pub low: Pitch,
    pub high: Pitch,
}

impl PitchRange {
    pub fn new(low: u8, high: u8) -> Result<Self> {
        if low >= high || high > 127 {
            return Err(Error::Config(format!("invalid pitch range {low}..{high}")));
        }
        Ok(PitchRange { low: Pitch(low), high: Pitch(high) })
    }

    pub fn contains(&self, pitch: Pitch) -> bool {
        pitch >= self.low && pitch <= self.high
    }

    pub fn midpoint(&self) -> f64 {
        (f64::from(self.low.0) + f64::from(self.high.0)) / 2.0
    }
}

impl Default for PitchRange {
    /// C4 to E5.
    fn default() -> Self {
        PitchRange { low: Pitch(60), high: Pitch(76) }
    }
}

/// A simple (non-compound) time signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub beats_per_measure: u32,
    pub beat_unit: u32,
    pub accents_per_measure: u32,
}

impl TimeSignature {
    pub const FOUR_FOUR: TimeSignature = TimeSignature { beats_per_measure: 4, beat_unit: 4, accents_per_measure: 2 };
    pub const THREE_FOUR: TimeSignature = TimeSignature { beats_per_measure: 3, beat_unit: 4, accents_per_measure: 1 };

    /// Build a time signature from its numerator and denominator. Accent counts
    /// are derived for meters the generator does not produce.
    pub fn new(beats_per_measure: u32, beat_unit: u32) -> Result<Self> {
        if beats_per_measure == 0 || !matches!(beat_unit, 1 | 2 | 4 | 8 | 16) {
            return Err(Error::UnsupportedMeter(format!("{beats_per_measure}/{beat_unit}")));
        }
        let accents_per_measure = if beats_per_measure.is_multiple_of(2) && beats_per_measure >= 4 { 2 } else { 1 };
        Ok(TimeSignature { beats_per_measure, beat_unit, accents_per_measure })
    }

    /// True for the meters the composer can generate (4/4 and 3/4).
    pub fn is_generated(&self) -> bool {
        *self == Self::FOUR_FOUR || *self == Self::THREE_FOUR
    }

    /// Measure length in quarter notes.
    pub fn measure_quarters(&self) -> crate::Quarters {
        crate::Quarters::new(i64::from(self.beats_per_measure) * 4, i64::from(self.beat_unit))
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.beats_per_measure, self.beat_unit)
    }
}

impl FromStr for TimeSignature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (num, den) = s.trim().split_once('/').ok_or_else(|| Error::UnsupportedMeter(s.to_string()))?;
        let num = num.trim().parse().map_err(|_| Error::UnsupportedMeter(s.to_string()))?;
        let den = den.trim().parse().map_err(|_| Error::UnsupportedMeter(s.to_string()))?;
        TimeSignature::new(num, den)
    }
}

impl Serialize for TimeSignature {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeSignature {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Spell a pitch as (step letter, alter) using sharps or flats.
pub fn spell(pitch: Pitch, flats: bool) -> (char, i8) {
    const SHARPS: [(char, i8); 12] = [
        ('C', 0), ('C', 1), ('D', 0), ('D', 1), ('E', 0), ('F', 0),
        ('F', 1), ('G', 0), ('G', 1), ('A', 0), ('A', 1), ('B', 0),
    ];
    const FLATS: [(char, i8); 12] = [
        ('C', 0), ('D', -1), ('D', 0), ('E', -1), ('E', 0), ('F', 0),
        ('G', -1), ('G', 0), ('A', -1), ('A', 0), ('B', -1), ('B', 0),
    ];
    let table = if flats { &FLATS } else { &SHARPS };
    table[usize::from(pitch.pitch_class())]
}

/// Inverse of [`spell`]: step letter, alter and octave to a MIDI number.
pub fn unspell(step: char, alter: i32, octave: i32) -> Option<Pitch> {
    let natural = match step.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let midi = (octave + 1) * 12 + natural + alter;
    u8::try_from(midi).ok().filter(|m| *m <= 127).map(Pitch)
}
