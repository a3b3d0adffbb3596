//! Standard MIDI File (format 0) export.

use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

use crate::error::{Error, Result};
use crate::rhythm::{beat_strength, BeatStrength};
use crate::score::Score;
use crate::Quarters;

pub const MEDIA_TYPE: &str = "audio/midi";
pub const TICKS_PER_QUARTER: u16 = 480;
pub const DEFAULT_TEMPO_BPM: u32 = 100;
pub const STRONG_VELOCITY: u8 = 96;
pub const DEFAULT_VELOCITY: u8 = 80;

const CHANNEL: u8 = 0;

/// Quarter-note position to ticks, rounding anything finer than a tick.
pub fn to_ticks(quarters: Quarters) -> u32 {
    let ticks = quarters * i64::from(TICKS_PER_QUARTER);
    ticks.round().to_integer().max(0) as u32
}

/// Encodes the score as a single-track file: tempo, meter, program change,
/// then one note-on/off pair per sounding note. Tied notes sound once; rests
/// are silence. The end-of-track event sits at the score's full length.
pub fn to_midi(score: &Score, tempo_bpm: u32) -> Result<Vec<u8>> {
    if tempo_bpm == 0 {
        return Err(Error::InvalidRequest("tempo must be positive".into()));
    }
    let channel = u4::new(CHANNEL);
    // (tick, order, event): note-offs sort before note-ons at the same tick.
    let mut timed: Vec<(u32, u8, TrackEventKind<'static>)> = Vec::new();
    let micros = 60_000_000 / tempo_bpm;
    timed.push((0, 0, TrackEventKind::Meta(MetaMessage::Tempo(u24::new(micros.min(0xFF_FFFF))))));
    let denominator_power = score.time_signature.beat_unit.trailing_zeros() as u8;
    timed.push((
        0,
        0,
        TrackEventKind::Meta(MetaMessage::TimeSignature(score.time_signature.beats_per_measure as u8, denominator_power, 24, 8)),
    ));
    timed.push((0, 0, TrackEventKind::Midi { channel, message: MidiMessage::ProgramChange { program: u7::new(score.instrument & 0x7F) } }));
    for note in score.sounding_notes() {
        let start = to_ticks(note.start);
        let end = to_ticks(note.start + note.duration);
        let velocity = if beat_strength(score.time_signature, note.measure_offset) == BeatStrength::Strong {
            STRONG_VELOCITY
        } else {
            DEFAULT_VELOCITY
        };
        let key = u7::new(note.pitch.0 & 0x7F);
        timed.push((start, 2, TrackEventKind::Midi { channel, message: MidiMessage::NoteOn { key, vel: u7::new(velocity) } }));
        timed.push((end, 1, TrackEventKind::Midi { channel, message: MidiMessage::NoteOff { key, vel: u7::new(0) } }));
    }
    timed.sort_by_key(|(tick, order, _)| (*tick, *order));
    let total = to_ticks(score.total_duration());

    let mut track = Vec::with_capacity(timed.len() + 1);
    let mut now = 0;
    for (tick, _, kind) in timed {
        track.push(TrackEvent { delta: u28::new(tick - now), kind });
        now = tick;
    }
    track.push(TrackEvent { delta: u28::new(total.saturating_sub(now)), kind: TrackEventKind::Meta(MetaMessage::EndOfTrack) });

    let smf = Smf {
        header: Header::new(Format::SingleTrack, Timing::Metrical(u15::new(TICKS_PER_QUARTER))),
        tracks: vec![track],
    };
    let mut bytes = Vec::new();
    smf.write_std(&mut bytes).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(bytes)
}

/// A decoded note with absolute tick positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidiNote {
    pub key: u8,
    pub velocity: u8,
    pub start: u32,
    pub end: u32,
}

/// Summary of a decoded file, for checks and tooling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiSummary {
    pub ticks_per_quarter: u16,
    pub total_ticks: u32,
    pub program: Option<u8>,
    pub notes: Vec<MidiNote>,
}

/// Decodes a file written by [`to_midi`] (or any format-0/1 metrical file,
/// reading its first track).
pub fn read_midi(bytes: &[u8]) -> Result<MidiSummary> {
    let smf = Smf::parse(bytes).map_err(|e| Error::MalformedScore(format!("MIDI: {e}")))?;
    let Timing::Metrical(tpq) = smf.header.timing else {
        return Err(Error::MalformedScore("MIDI uses timecode timing".into()));
    };
    let track = smf.tracks.first().ok_or_else(|| Error::MalformedScore("MIDI file has no tracks".into()))?;
    let mut now = 0u32;
    let mut program = None;
    let mut open: Vec<MidiNote> = Vec::new();
    let mut notes = Vec::new();
    for event in track {
        now += event.delta.as_int();
        if let TrackEventKind::Midi { message, .. } = event.kind {
            match message {
                MidiMessage::ProgramChange { program: p } => program = Some(p.as_int()),
                MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                    open.push(MidiNote { key: key.as_int(), velocity: vel.as_int(), start: now, end: now })
                }
                MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                    if let Some(i) = open.iter().position(|n| n.key == key.as_int()) {
                        let mut n = open.remove(i);
                        n.end = now;
                        notes.push(n);
                    }
                }
                _ => {}
            }
        }
    }
    notes.sort_by_key(|n| (n.start, n.key));
    Ok(MidiSummary { ticks_per_quarter: tpq.as_int(), total_ticks: now, program, notes })
}
