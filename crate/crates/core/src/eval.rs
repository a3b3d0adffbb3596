//! Music-theory metrics: Krumhansl-Schmuckler key confidence, interval
//! smoothness, syllable/beat rhythm matching, and corpus aggregation.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyrics::{self, PhraseList};
use crate::rhythm::{beat_strength, BeatStrength};
use crate::score::Score;
use crate::theory::{KeySignature, Mode, Pitch, TimeSignature};
use crate::Quarters;

/// Major and minor probe-tone profiles, C tonic first.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyProfilePair {
    pub major: [f64; 12],
    pub minor: [f64; 12],
}

impl KeyProfilePair {
    pub fn for_mode(&self, mode: Mode) -> &[f64; 12] {
        match mode {
            Mode::Major => &self.major,
            Mode::Minor => &self.minor,
        }
    }
}

fn parse_profiles(text: &str) -> KeyProfilePair {
    let mut pair = KeyProfilePair { major: [0.0; 12], minor: [0.0; 12] };
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let mut fields = line.split_whitespace();
        let target = match fields.next() {
            Some("major") => &mut pair.major,
            Some("minor") => &mut pair.minor,
            _ => continue,
        };
        for (slot, value) in target.iter_mut().zip(fields) {
            *slot = value.parse().expect("key profile values are numbers");
        }
    }
    pair
}

pub static KEY_PROFILES: LazyLock<KeyProfilePair> =
    LazyLock::new(|| parse_profiles(include_str!("../data/key_profiles.tsv")));

/// Duration-weighted pitch-class totals of `(pitch, duration)` pairs.
pub fn distribution_of<I>(notes: I) -> Result<[f64; 12]>
where
    I: IntoIterator<Item = (Pitch, Quarters)>,
{
    let mut totals = [Quarters::from(0); 12];
    let mut any = false;
    for (pitch, duration) in notes {
        totals[usize::from(pitch.pitch_class())] += duration;
        any = true;
    }
    if !any {
        return Err(Error::NoPitches);
    }
    Ok(totals.map(|q| *q.numer() as f64 / *q.denom() as f64))
}

/// Duration-weighted pitch-class distribution of a score (rests excluded).
pub fn pitch_class_distribution(score: &Score) -> Result<[f64; 12]> {
    distribution_of(score.sounding_notes().into_iter().map(|n| (n.pitch, n.duration)))
}

/// Pearson correlation between `x` and the profile of `key`.
pub fn correlation(x: &[f64; 12], key: KeySignature) -> Result<f64> {
    let profile = KEY_PROFILES.for_mode(key.mode);
    let y: [f64; 12] = std::array::from_fn(|i| profile[(i + 12 - usize::from(key.tonic)) % 12]);
    let mean_x = x.iter().sum::<f64>() / 12.0;
    let mean_y = y.iter().sum::<f64>() / 12.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(&y) {
        let (dx, dy) = (xi - mean_x, yi - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Best of the 24 keys for a distribution. Ties keep the earlier key in
/// tonic order, major before minor.
pub fn best_key(x: &[f64; 12]) -> Result<(KeySignature, f64)> {
    let mut best: Option<(KeySignature, f64)> = None;
    for key in KeySignature::all() {
        let r = correlation(x, key)?;
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((key, r));
        }
    }
    Ok(best.expect("24 keys"))
}

/// Correlation for `key` when given, else the best key and its correlation.
pub fn key_confidence(score: &Score, key: Option<KeySignature>) -> Result<(KeySignature, f64)> {
    let x = pitch_class_distribution(score)?;
    match key {
        Some(k) => Ok((k, correlation(&x, k)?)),
        None => best_key(&x),
    }
}

fn intervals(melody: &[Pitch]) -> impl Iterator<Item = i32> + '_ {
    melody.windows(2).map(|w| i32::from(w[1].0) - i32::from(w[0].0))
}

/// Mean absolute interval in semitones.
pub fn average_interval(melody: &[Pitch]) -> Result<f64> {
    if melody.len() < 2 {
        return Err(Error::TooShort("average interval needs two pitches"));
    }
    let total: i32 = intervals(melody).map(i32::abs).sum();
    Ok(f64::from(total) / (melody.len() - 1) as f64)
}

/// Steps (1-2 semitones) over steps plus leaps (3 or more); unisons count as neither.
pub fn step_ratio(melody: &[Pitch]) -> Result<f64> {
    if melody.len() < 2 {
        return Err(Error::TooShort("step ratio needs two pitches"));
    }
    let (mut steps, mut leaps) = (0u32, 0u32);
    for d in intervals(melody).map(i32::abs) {
        match d {
            0 => {}
            1 | 2 => steps += 1,
            _ => leaps += 1,
        }
    }
    if steps + leaps == 0 {
        return Err(Error::Undefined("every interval is a unison"));
    }
    Ok(f64::from(steps) / f64::from(steps + leaps))
}

/// Share of consecutive moving intervals that reverse direction.
pub fn direction_change_rate(melody: &[Pitch]) -> Result<f64> {
    let moving: Vec<i32> = intervals(melody).filter(|d| *d != 0).map(i32::signum).collect();
    if moving.len() < 2 {
        return Err(Error::TooShort("direction change needs two moving intervals"));
    }
    let flips = moving.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(flips as f64 / (moving.len() - 1) as f64)
}

/// Agreement of beat-strength classes between two settings of the same lyric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhythmMatch {
    /// Over every lyric syllable.
    pub all: f64,
    /// Over the stressed syllables of keywords, when the lyric has any.
    pub keywords: Option<f64>,
}

struct SungSyllable {
    text: String,
    strength: BeatStrength,
}

fn sung_syllables(score: &Score) -> Vec<SungSyllable> {
    score
        .sounding_notes()
        .into_iter()
        .filter_map(|n| {
            let lyric = n.lyric?;
            let text = crate::score::normalize_syllable(&lyric.text);
            (!text.is_empty()).then(|| SungSyllable { text, strength: beat_strength(score.time_signature, n.measure_offset) })
        })
        .collect()
}

/// Per-syllable flag: is this a stressed syllable of a keyword? Words are
/// rebuilt from the score's syllables and run through lyric analysis.
pub fn keyword_stress_mask(score: &Score) -> Vec<bool> {
    let words = score.lyric_words();
    let mut phrases = vec![Vec::new()];
    for w in &words {
        phrases.last_mut().expect("non-empty").push(w.text.clone());
        if w.phrase_end {
            phrases.push(Vec::new());
        }
    }
    phrases.retain(|p| !p.is_empty());
    let lp = PhraseList { phrases };
    let splits: std::collections::HashMap<&str, &Vec<String>> =
        words.iter().map(|w| (w.text.as_str(), &w.syllables)).collect();
    let dw = lyrics::build_word_dictionary_with(&lp, |w| splits.get(w).map(|s| (*s).clone()));
    words
        .iter()
        .flat_map(|w| {
            let entry = dw.get(&w.text);
            (0..w.syllables.len()).map(move |i| {
                entry.is_some_and(|e| e.is_keyword && e.stress.get(i).is_some_and(|s| s.is_stressed()))
            })
        })
        .collect()
}

/// Pairs the lyric syllables of both scores in order and counts how often
/// their beat-strength classes agree.
pub fn rhythm_match(generated: &Score, reference: &Score) -> Result<RhythmMatch> {
    let a = sung_syllables(generated);
    let b = sung_syllables(reference);
    if a.is_empty() {
        return Err(Error::LyricMismatch("the scores carry no lyrics".into()));
    }
    if a.len() != b.len() {
        return Err(Error::LyricMismatch(format!("{} syllables against {}", a.len(), b.len())));
    }
    if let Some(i) = a.iter().zip(&b).position(|(x, y)| x.text != y.text) {
        return Err(Error::LyricMismatch(format!("syllable {} is {:?} against {:?}", i + 1, a[i].text, b[i].text)));
    }
    let matches: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x.strength == y.strength).collect();
    let all = matches.iter().filter(|m| **m).count() as f64 / matches.len() as f64;
    let mask = keyword_stress_mask(generated);
    let keyed: Vec<bool> = matches.iter().zip(&mask).filter(|(_, k)| **k).map(|(m, _)| *m).collect();
    let keywords = (!keyed.is_empty()).then(|| keyed.iter().filter(|m| **m).count() as f64 / keyed.len() as f64);
    Ok(RhythmMatch { all, keywords })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Correlation of the best-fitting key.
    pub key_confidence: f64,
    pub best_key: KeySignature,
    /// Correlation with the score's own key signature.
    pub notated_key_confidence: f64,
    pub average_interval: Option<f64>,
    pub step_ratio: Option<f64>,
    pub direction_change_rate: Option<f64>,
    /// Present only when a reference score was supplied.
    pub rhythm_match: Option<f64>,
    pub rhythm_match_keywords: Option<f64>,
    pub note_count: usize,
}

/// All metrics for one score. Missing pitches or a flat pitch-class profile
/// are errors; smoothness metrics that are undefined for very short melodies
/// are left empty.
pub fn evaluate_score(score: &Score, reference: Option<&Score>) -> Result<EvaluationReport> {
    let x = pitch_class_distribution(score)?;
    let (best_key, key_confidence) = best_key(&x)?;
    let notated_key_confidence = correlation(&x, score.key)?;
    let melody = score.pitches();
    let rhythm = reference.map(|r| rhythm_match(score, r)).transpose()?;
    Ok(EvaluationReport {
        key_confidence,
        best_key,
        notated_key_confidence,
        average_interval: average_interval(&melody).ok(),
        step_ratio: step_ratio(&melody).ok(),
        direction_change_rate: direction_change_rate(&melody).ok(),
        rhythm_match: rhythm.map(|r| r.all),
        rhythm_match_keywords: rhythm.and_then(|r| r.keywords),
        note_count: melody.len(),
    })
}

/// Metric names in report order.
pub const METRICS: [&str; 6] = [
    "key_confidence",
    "average_interval",
    "step_ratio",
    "direction_change_rate",
    "rhythm_match",
    "rhythm_match_keywords",
];

impl EvaluationReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "key_confidence" => Some(self.key_confidence),
            "average_interval" => self.average_interval,
            "step_ratio" => self.step_ratio,
            "direction_change_rate" => self.direction_change_rate,
            "rhythm_match" => self.rhythm_match,
            "rhythm_match_keywords" => self.rhythm_match_keywords,
            _ => None,
        }
    }

    /// `key=value` lines; absent metrics print as `none`.
    pub fn to_key_values(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| format!("{v:.6}"));
        let mut out = String::new();
        out.push_str(&format!("key_confidence={:.6}\n", self.key_confidence));
        out.push_str(&format!("best_key={}\n", self.best_key));
        out.push_str(&format!("notated_key_confidence={:.6}\n", self.notated_key_confidence));
        for name in &METRICS[1..] {
            out.push_str(&format!("{name}={}\n", fmt(self.metric(name))));
        }
        out.push_str(&format!("note_count={}\n", self.note_count));
        out
    }
}

/// Order statistics of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Summary {
            count: sorted.len(),
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    /// Set when no score fell in this group.
    pub empty: bool,
    pub metrics: BTreeMap<String, Summary>,
}

/// Statistics per time signature plus an `all` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub groups: BTreeMap<String, GroupStats>,
}

impl CorpusStats {
    pub fn from_reports<'a, I>(reports: I) -> CorpusStats
    where
        I: IntoIterator<Item = (TimeSignature, &'a EvaluationReport)>,
    {
        let mut buckets: BTreeMap<String, Vec<&EvaluationReport>> = BTreeMap::new();
        for name in ["3/4", "4/4", "all"] {
            buckets.insert(name.into(), Vec::new());
        }
        for (ts, report) in reports {
            buckets.entry(ts.to_string()).or_default().push(report);
            buckets.get_mut("all").expect("inserted").push(report);
        }
        let groups = buckets
            .into_iter()
            .map(|(name, reports)| {
                let metrics = METRICS
                    .iter()
                    .filter_map(|m| {
                        let values: Vec<f64> = reports.iter().filter_map(|r| r.metric(m)).collect();
                        Summary::of(&values).map(|s| (m.to_string(), s))
                    })
                    .collect();
                (name, GroupStats { count: reports.len(), empty: reports.is_empty(), metrics })
            })
            .collect();
        CorpusStats { groups }
    }

    pub fn group(&self, name: &str) -> Option<&GroupStats> {
        self.groups.get(name)
    }

    /// Plot data as CSV with columns `metric,group,quantile,value`.
    pub fn plot_table(&self) -> String {
        let mut out = String::from("metric,group,quantile,value\n");
        for metric in METRICS {
            for (group, stats) in &self.groups {
                let Some(s) = stats.metrics.get(metric) else { continue };
                for (q, v) in [("0.00", s.min), ("0.25", s.q1), ("0.50", s.median), ("0.75", s.q3), ("1.00", s.max), ("mean", s.mean)] {
                    out.push_str(&format!("{metric},{group},{q},{v:.6}\n"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub title: String,
    pub time_signature: TimeSignature,
    pub report: Option<EvaluationReport>,
    /// Why the score could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEvaluation {
    pub entries: Vec<CorpusEntry>,
    pub stats: CorpusStats,
}

impl CorpusEvaluation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Evaluates every score in parallel; results keep the input order. Scores
/// that cannot be evaluated are reported with their error and left out of
/// the statistics.
pub fn evaluate_corpus(scores: &[(Score, Option<Score>)]) -> CorpusEvaluation {
    let entries: Vec<CorpusEntry> = scores
        .par_iter()
        .map(|(score, reference)| {
            let result = evaluate_score(score, reference.as_ref());
            CorpusEntry {
                title: score.title.clone(),
                time_signature: score.time_signature,
                error: result.as_ref().err().map(ToString::to_string),
                report: result.ok(),
            }
        })
        .collect();
    let stats = CorpusStats::from_reports(entries.iter().filter_map(|e| e.report.as_ref().map(|r| (e.time_signature, r))));
    CorpusEvaluation { entries, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhythm::Syllabic;
    use crate::score::{Lyric, Measure, Note, Tie};

    fn p(list: &[u8]) -> Vec<Pitch> {
        list.iter().copied().map(Pitch).collect()
    }

    fn score_of(notes: &[(u8, i64)], ts: TimeSignature) -> Score {
        Score {
            title: "x".into(),
            time_signature: ts,
            key: KeySignature::major(0),
            measures: vec![Measure {
                notes: notes
                    .iter()
                    .map(|(m, d)| Note { pitch: Some(Pitch(*m)), duration: Quarters::from(*d), lyric: None, tie: Tie::None })
                    .collect(),
            }],
            instrument: 0,
        }
    }

    #[test]
    fn profiles_load() {
        assert_eq!(KEY_PROFILES.major[0], 6.35);
        assert_eq!(KEY_PROFILES.minor[11], 3.17);
        assert!(KEY_PROFILES.major.iter().chain(&KEY_PROFILES.minor).all(|v| *v > 0.0));
    }

    #[test]
    fn distributions() {
        let four_c = score_of(&[(60, 1), (60, 1), (60, 1), (60, 1)], TimeSignature::FOUR_FOUR);
        let mut expected = [0.0; 12];
        expected[0] = 4.0;
        assert_eq!(pitch_class_distribution(&four_c).unwrap(), expected);
        let halves = score_of(&[(60, 2), (67, 2)], TimeSignature::FOUR_FOUR);
        let d = pitch_class_distribution(&halves).unwrap();
        assert_eq!((d[0], d[7]), (2.0, 2.0));
        let mut rests = four_c.clone();
        rests.measures[0].notes = vec![Note::rest(Quarters::from(4))];
        assert!(matches!(pitch_class_distribution(&rests), Err(Error::NoPitches)));
        assert!(key_confidence(&four_c, None).is_ok());
        let chromatic: Vec<(u8, i64)> = (60..72).map(|m| (m, 1)).collect();
        assert!(matches!(key_confidence(&score_of(&chromatic, TimeSignature::FOUR_FOUR), None), Err(Error::ZeroVariance)));
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(average_interval(&p(&[60, 60, 60])).unwrap(), 0.0);
        assert_eq!(average_interval(&p(&[60, 62, 64])).unwrap(), 2.0);
        assert!(matches!(average_interval(&p(&[60])), Err(Error::TooShort(_))));
        assert_eq!(step_ratio(&p(&[60, 62, 64])).unwrap(), 1.0);
        assert_eq!(step_ratio(&p(&[60, 67])).unwrap(), 0.0);
        assert!(matches!(step_ratio(&p(&[60, 60])), Err(Error::Undefined(_))));
        assert_eq!(direction_change_rate(&p(&[60, 62, 64, 65])).unwrap(), 0.0);
        assert_eq!(direction_change_rate(&p(&[60, 62, 60, 62])).unwrap(), 1.0);
        // Unisons are skipped: +2, 0, -2 is one flip over two moving intervals.
        assert_eq!(direction_change_rate(&p(&[60, 62, 62, 60])).unwrap(), 1.0);
        assert!(matches!(direction_change_rate(&p(&[60, 62])), Err(Error::TooShort(_))));
    }

    #[test]
    fn c_major_scale_finds_c_major() {
        let scale: Vec<(u8, i64)> = [60, 62, 64, 65, 67, 69, 71, 72].iter().map(|m| (*m, 1)).collect();
        let s = score_of(&scale, TimeSignature::FOUR_FOUR);
        let (key, r) = key_confidence(&s, None).unwrap();
        assert_eq!(key, KeySignature::major(0));
        let up = s.transposed(2).unwrap();
        let (key2, r2) = key_confidence(&up, None).unwrap();
        assert_eq!(key2, KeySignature::major(2));
        assert!((r - r2).abs() < 1e-12);
    }

    fn lyric_score(syllables: &[(&str, Syllabic, i64)], ts: TimeSignature) -> Score {
        let mut s = score_of(&[], ts);
        s.measures[0].notes = syllables
            .iter()
            .map(|(t, syl, d)| Note {
                pitch: Some(Pitch(60)),
                duration: Quarters::new(*d, 2),
                lyric: Some(Lyric { text: t.to_string(), syllabic: *syl }),
                tie: Tie::None,
            })
            .collect();
        s
    }

    #[test]
    fn rhythm_match_identity_and_complement() {
        use Syllabic::*;
        // "birds are fly-ing" on beats 1 2 3 4 of 4/4: strong weak strong weak.
        let a = lyric_score(&[("birds", Single, 2), ("are", Single, 2), ("fly", Begin, 2), ("ing", End, 2)], TimeSignature::FOUR_FOUR);
        let same = rhythm_match(&a, &a).unwrap();
        assert_eq!(same.all, 1.0);
        assert_eq!(same.keywords, Some(1.0));
        // A quarter rest first shifts every syllable: weak strong weak strong.
        let mut b = a.clone();
        b.measures[0].notes.insert(0, Note::rest(Quarters::from(1)));
        b.measures[0].notes.pop();
        b.measures.push(Measure { notes: vec![Note { pitch: Some(Pitch(60)), duration: Quarters::from(4), lyric: Some(Lyric { text: "ing".into(), syllabic: End }), tie: Tie::None }] });
        let flipped = rhythm_match(&a, &b).unwrap();
        assert_eq!(flipped.all, 0.0);
        assert_eq!(flipped.keywords, Some(0.0));
        let other = lyric_score(&[("birds", Single, 2)], TimeSignature::FOUR_FOUR);
        assert!(matches!(rhythm_match(&a, &other), Err(Error::LyricMismatch(_))));
    }

    #[test]
    fn keyword_mask_marks_stressed_content_syllables() {
        use Syllabic::*;
        let a = lyric_score(&[("birds", Single, 2), ("are", Single, 2), ("fly", Begin, 2), ("ing", End, 2)], TimeSignature::FOUR_FOUR);
        assert_eq!(keyword_stress_mask(&a), vec![true, false, true, false]);
    }

    #[test]
    fn corpus_groups() {
        let s = score_of(&[(60, 1), (62, 1), (64, 1), (60, 1)], TimeSignature::FOUR_FOUR);
        let single = evaluate_corpus(&[(s.clone(), None)]);
        let report = single.entries[0].report.clone().unwrap();
        let all = single.stats.group("all").unwrap();
        assert_eq!(all.metrics["key_confidence"].median, report.key_confidence);
        assert_eq!(all.metrics["key_confidence"].min, report.key_confidence);
        assert!(single.stats.group("3/4").unwrap().empty);
        assert!(!all.metrics.contains_key("rhythm_match"));
        let table = single.stats.plot_table();
        assert!(table.starts_with("metric,group,quantile,value\n"));
        assert!(table.contains("key_confidence,4/4,0.50,"));
    }

    #[test]
    fn quantiles_interpolate() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max, s.mean), (1.0, 1.75, 2.5, 3.25, 4.0, 2.5));
    }
}
