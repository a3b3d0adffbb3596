//! MusicXML 3.1 partwise output and input.
//!
//! The writer is hand-rolled so output is byte-stable: fixed element order,
//! two-space indentation, `\n` line ends. The reader accepts general
//! single-voice files and reduces them to the first part's top line.

use std::fmt::Write as _;

use log::warn;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::rhythm::Syllabic;
use crate::score::{Lyric, Measure, Note, Score, Tie, DEFAULT_INSTRUMENT};
use crate::theory::{spell, unspell, KeySignature, Mode, Pitch, TimeSignature};
use crate::Quarters;

pub const MEDIA_TYPE: &str = "application/vnd.recordare.musicxml+xml";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Divisions per quarter: the least common multiple of all duration denominators.
pub fn divisions(score: &Score) -> i64 {
    score.notes().fold(1, |acc, n| {
        let d = *n.duration.denom();
        acc / gcd(acc, d) * d
    })
}

const TYPES: [(&str, i64, i64); 10] = [
    ("breve", 8, 1),
    ("whole", 4, 1),
    ("half", 2, 1),
    ("quarter", 1, 1),
    ("eighth", 1, 2),
    ("16th", 1, 4),
    ("32nd", 1, 8),
    ("64th", 1, 16),
    ("128th", 1, 32),
    ("256th", 1, 64),
];

/// Note type name and dot count for a duration, if it is a plain or dotted value.
pub fn note_type(duration: Quarters) -> Option<(&'static str, usize)> {
    for (name, n, d) in TYPES {
        let base = Ratio::new(n, d);
        let mut total = base;
        let mut add = base;
        for dots in 0..=3 {
            if total == duration {
                return Some((name, dots));
            }
            add /= 2;
            total += add;
        }
    }
    None
}

fn write_note(out: &mut String, note: &Note, divisions: i64, flats: bool) {
    out.push_str("      <note>\n");
    match note.pitch {
        Some(p) => {
            let (step, alter) = spell(p, flats);
            out.push_str("        <pitch>\n");
            let _ = writeln!(out, "          <step>{step}</step>");
            if alter != 0 {
                let _ = writeln!(out, "          <alter>{alter}</alter>");
            }
            let octave = (i32::from(p.0) - i32::from(alter)) / 12 - 1;
            let _ = writeln!(out, "          <octave>{octave}</octave>");
            out.push_str("        </pitch>\n");
        }
        None => out.push_str("        <rest/>\n"),
    }
    let ticks = note.duration * divisions;
    let _ = writeln!(out, "        <duration>{}</duration>", ticks.to_integer());
    let ties: &[&str] = match note.tie {
        Tie::None => &[],
        Tie::Start => &["start"],
        Tie::Stop => &["stop"],
        Tie::StopStart => &["stop", "start"],
    };
    for t in ties {
        let _ = writeln!(out, "        <tie type=\"{t}\"/>");
    }
    out.push_str("        <voice>1</voice>\n");
    if let Some((name, dots)) = note_type(note.duration) {
        let _ = writeln!(out, "        <type>{name}</type>");
        for _ in 0..dots {
            out.push_str("        <dot/>\n");
        }
    }
    if !ties.is_empty() {
        out.push_str("        <notations>\n");
        for t in ties {
            let _ = writeln!(out, "          <tied type=\"{t}\"/>");
        }
        out.push_str("        </notations>\n");
    }
    if let Some(lyric) = &note.lyric {
        out.push_str("        <lyric number=\"1\">\n");
        let _ = writeln!(out, "          <syllabic>{}</syllabic>", lyric.syllabic.as_str());
        let _ = writeln!(out, "          <text>{}</text>", escape(&lyric.text));
        out.push_str("        </lyric>\n");
    }
    out.push_str("      </note>\n");
}

/// Serializes a score as a single-part MusicXML 3.1 document.
pub fn to_musicxml(score: &Score) -> String {
    let divisions = divisions(score);
    let flats = score.key.prefers_flats();
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    out.push_str("<!DOCTYPE score-partwise PUBLIC \"-//Recordare//DTD MusicXML 3.1 Partwise//EN\" \"http://www.musicxml.org/dtds/partwise.dtd\">\n");
    out.push_str("<score-partwise version=\"3.1\">\n");
    out.push_str("  <work>\n");
    let _ = writeln!(out, "    <work-title>{}</work-title>", escape(&score.title));
    out.push_str("  </work>\n");
    out.push_str("  <identification>\n    <encoding>\n");
    out.push_str("      <software>versetune</software>\n");
    out.push_str("    </encoding>\n  </identification>\n");
    out.push_str("  <part-list>\n");
    out.push_str("    <score-part id=\"P1\">\n");
    out.push_str("      <part-name>Melody</part-name>\n");
    out.push_str("      <score-instrument id=\"P1-I1\">\n");
    let _ = writeln!(out, "        <instrument-name>GM {}</instrument-name>", score.instrument);
    out.push_str("      </score-instrument>\n");
    out.push_str("      <midi-instrument id=\"P1-I1\">\n");
    out.push_str("        <midi-channel>1</midi-channel>\n");
    let _ = writeln!(out, "        <midi-program>{}</midi-program>", u16::from(score.instrument) + 1);
    out.push_str("      </midi-instrument>\n");
    out.push_str("    </score-part>\n");
    out.push_str("  </part-list>\n");
    out.push_str("  <part id=\"P1\">\n");
    let last = score.measures.len().saturating_sub(1);
    for (i, measure) in score.measures.iter().enumerate() {
        let _ = writeln!(out, "    <measure number=\"{}\">", i + 1);
        if i == 0 {
            out.push_str("      <attributes>\n");
            let _ = writeln!(out, "        <divisions>{divisions}</divisions>");
            out.push_str("        <key>\n");
            let _ = writeln!(out, "          <fifths>{}</fifths>", score.key.fifths());
            let _ = writeln!(out, "          <mode>{}</mode>", score.key.mode.name());
            out.push_str("        </key>\n");
            out.push_str("        <time>\n");
            let _ = writeln!(out, "          <beats>{}</beats>", score.time_signature.beats_per_measure);
            let _ = writeln!(out, "          <beat-type>{}</beat-type>", score.time_signature.beat_unit);
            out.push_str("        </time>\n");
            out.push_str("        <clef>\n          <sign>G</sign>\n          <line>2</line>\n        </clef>\n");
            out.push_str("      </attributes>\n");
        }
        for note in &measure.notes {
            write_note(&mut out, note, divisions, flats);
        }
        if i == last {
            out.push_str("      <barline location=\"right\">\n        <bar-style>light-heavy</bar-style>\n      </barline>\n");
        }
        out.push_str("    </measure>\n");
    }
    out.push_str("  </part>\n");
    out.push_str("</score-partwise>\n");
    out
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, name: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn child_text<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(node, name).and_then(|c| c.text()).map(str::trim)
}

fn parse_num<T: std::str::FromStr>(text: Option<&str>, what: &str) -> Result<T> {
    text.and_then(|t| t.parse().ok()).ok_or_else(|| Error::MalformedScore(format!("missing or invalid <{what}>")))
}

fn key_from_fifths(fifths: i32, mode: Mode) -> KeySignature {
    let major_tonic = (fifths * 7).rem_euclid(12) as u8;
    match mode {
        Mode::Major => KeySignature::major(major_tonic),
        Mode::Minor => KeySignature::minor((major_tonic + 9) % 12),
    }
}

fn parse_pitch(node: roxmltree::Node) -> Result<Pitch> {
    let step = child_text(node, "step").and_then(|s| s.chars().next()).ok_or_else(|| Error::MalformedScore("pitch without <step>".into()))?;
    let alter = child_text(node, "alter").map_or(Ok(0.0), |a| a.parse::<f64>().map_err(|_| Error::MalformedScore(format!("bad <alter> {a}"))))?;
    let octave: i32 = parse_num(child_text(node, "octave"), "octave")?;
    unspell(step, alter.round() as i32, octave).ok_or_else(|| Error::MalformedScore(format!("pitch {step}{octave} out of MIDI range")))
}

fn parse_lyric(note: roxmltree::Node) -> Option<Lyric> {
    let lyric = note
        .children()
        .filter(|c| c.has_tag_name("lyric"))
        .find(|l| l.attribute("number").is_none_or(|n| n == "1"))
        .or_else(|| child(note, "lyric"))?;
    let text: String = lyric.children().filter(|c| c.has_tag_name("text")).filter_map(|t| t.text()).collect();
    if text.trim().is_empty() {
        return None;
    }
    let syllabic = match child_text(lyric, "syllabic") {
        Some("begin") => Syllabic::Begin,
        Some("middle") => Syllabic::Middle,
        Some("end") => Syllabic::End,
        _ => Syllabic::Single,
    };
    Some(Lyric { text: text.trim().to_string(), syllabic })
}

fn parse_tie(note: roxmltree::Node) -> Tie {
    let types: Vec<&str> = note.children().filter(|c| c.has_tag_name("tie")).filter_map(|t| t.attribute("type")).collect();
    match (types.contains(&"stop"), types.contains(&"start")) {
        (true, true) => Tie::StopStart,
        (true, false) => Tie::Stop,
        (false, true) => Tie::Start,
        (false, false) => Tie::None,
    }
}

/// Reads the first part of a partwise document as a single melodic line.
/// Chords keep their top note, grace and cue notes are dropped, and anything
/// after a `<backup>` in a measure (a second voice) is ignored.
pub fn parse_musicxml(text: &str) -> Result<Score> {
    // MusicXML files routinely carry a DOCTYPE. External DTDs are never fetched.
    let options = roxmltree::ParsingOptions { allow_dtd: true, ..Default::default() };
    let doc = roxmltree::Document::parse_with_options(text, options).map_err(|e| Error::MalformedScore(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("score-partwise") {
        return Err(Error::MalformedScore(format!("unsupported root element <{}>", root.tag_name().name())));
    }
    let parts: Vec<_> = root.children().filter(|c| c.has_tag_name("part")).collect();
    let part = *parts.first().ok_or_else(|| Error::MalformedScore("document has no <part>".into()))?;
    if parts.len() > 1 {
        warn!("score has {} parts; only the first is read", parts.len());
    }
    let part_id = part.attribute("id").unwrap_or_default();

    let title = child(root, "work")
        .and_then(|w| child_text(w, "work-title"))
        .or_else(|| child_text(root, "movement-title"))
        .unwrap_or_default()
        .to_string();
    let instrument = child(root, "part-list")
        .and_then(|pl| pl.children().find(|sp| sp.has_tag_name("score-part") && sp.attribute("id") == Some(part_id)))
        .and_then(|sp| sp.descendants().find(|d| d.has_tag_name("midi-program")))
        .and_then(|mp| mp.text())
        .and_then(|t| t.trim().parse::<u16>().ok())
        .and_then(|p| u8::try_from(p.checked_sub(1)?).ok())
        .filter(|p| *p <= 127)
        .unwrap_or(DEFAULT_INSTRUMENT);

    let mut divisions: Option<i64> = None;
    let mut key: Option<KeySignature> = None;
    let mut time: Option<TimeSignature> = None;
    let mut measures = Vec::new();
    for measure in part.children().filter(|c| c.has_tag_name("measure")) {
        let mut notes: Vec<Note> = Vec::new();
        for item in measure.children().filter(roxmltree::Node::is_element) {
            match item.tag_name().name() {
                "attributes" => {
                    if let Some(d) = child_text(item, "divisions") {
                        let d: i64 = parse_num(Some(d), "divisions")?;
                        if d <= 0 {
                            return Err(Error::MalformedScore("non-positive <divisions>".into()));
                        }
                        divisions = Some(d);
                    }
                    if let Some(k) = child(item, "key") {
                        if let Some(f) = child_text(k, "fifths") {
                            let fifths: i32 = parse_num(Some(f), "fifths")?;
                            let mode = match child_text(k, "mode") {
                                Some("minor") | Some("aeolian") => Mode::Minor,
                                Some("major") | Some("ionian") | None => Mode::Major,
                                Some(other) => {
                                    warn!("mode {other:?} read as major");
                                    Mode::Major
                                }
                            };
                            let parsed = key_from_fifths(fifths, mode);
                            if key.is_some_and(|k| k != parsed) {
                                warn!("key change to {parsed} ignored");
                            } else {
                                key = Some(parsed);
                            }
                        }
                    }
                    if let Some(t) = child(item, "time") {
                        let beats = child_text(t, "beats").unwrap_or_default();
                        let beat_type = child_text(t, "beat-type").unwrap_or_default();
                        let parsed: TimeSignature = format!("{beats}/{beat_type}")
                            .parse()
                            .map_err(|_| Error::MalformedScore(format!("unsupported time signature {beats}/{beat_type}")))?;
                        if time.is_some_and(|t| t != parsed) {
                            warn!("time signature change to {parsed} ignored");
                        } else {
                            time = Some(parsed);
                        }
                    }
                }
                "backup" => break,
                "forward" => {
                    let d: i64 = parse_num(child_text(item, "duration"), "duration")?;
                    let div = divisions.ok_or_else(|| Error::MalformedScore("<forward> before <divisions>".into()))?;
                    notes.push(Note::rest(Quarters::new(d, div)));
                }
                "note" => {
                    if child(item, "grace").is_some() || child(item, "cue").is_some() {
                        continue;
                    }
                    if child_text(item, "voice").is_some_and(|v| v != "1") && !notes.is_empty() {
                        continue;
                    }
                    let pitch = if child(item, "rest").is_some() {
                        None
                    } else if let Some(p) = child(item, "pitch") {
                        Some(parse_pitch(p)?)
                    } else {
                        warn!("unpitched note read as a rest");
                        None
                    };
                    if child(item, "chord").is_some() {
                        if let (Some(p), Some(last)) = (pitch, notes.last_mut()) {
                            if last.pitch.is_some_and(|q| p > q) {
                                last.pitch = Some(p);
                            }
                        }
                        continue;
                    }
                    let d: i64 = parse_num(child_text(item, "duration"), "duration")?;
                    let div = divisions.ok_or_else(|| Error::MalformedScore("<note> before <divisions>".into()))?;
                    if d <= 0 {
                        return Err(Error::MalformedScore("note with non-positive duration".into()));
                    }
                    let lyric = pitch.and(parse_lyric(item));
                    let tie = if pitch.is_some() { parse_tie(item) } else { Tie::None };
                    notes.push(Note { pitch, duration: Quarters::new(d, div), lyric, tie });
                }
                _ => {}
            }
        }
        measures.push(Measure { notes });
    }
    if measures.is_empty() {
        return Err(Error::MalformedScore("part has no measures".into()));
    }
    Ok(Score {
        title,
        time_signature: time.unwrap_or_else(|| {
            warn!("no time signature; assuming 4/4");
            TimeSignature::FOUR_FOUR
        }),
        key: key.unwrap_or(KeySignature::major(0)),
        measures,
        instrument,
    })
}
