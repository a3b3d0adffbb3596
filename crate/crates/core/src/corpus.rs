//! Corpus loading and regeneration against original scores.
//!
//! [`compare`] takes each original's lyric, writes `k` new melodies for it in
//! the original's meter (variant 0 always in the original's key, the rest in
//! other keys of the same mode), and evaluates every variant with the
//! original as the rhythm reference.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_score, CorpusStats, EvaluationReport, METRICS};
use crate::musicxml::parse_musicxml;
use crate::lyrics;
use crate::pipeline::{compose, ComposeOptions, Composition, KeyChoice};
use crate::setup::sample_key_candidates;
use crate::pitch::SamplerConfig;
use crate::score::Score;
use crate::seed;
use crate::theory::{KeySignature, TimeSignature};

/// Parses every `.musicxml` / `.xml` file in `dir`, sorted by file name.
pub fn load_corpus(dir: &Path) -> Result<Vec<(PathBuf, Score)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "musicxml" || x == "xml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path)?;
            let score = parse_musicxml(&text).map_err(|e| Error::MalformedScore(format!("{}: {e}", path.display())))?;
            Ok((path, score))
        })
        .collect()
}

/// Reads every `.txt` lyric in `dir`, sorted by file name.
pub fn load_lyrics(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, std::fs::read_to_string(&path)?))
        })
        .collect()
}

/// One song of a lyric corpus composed in a sampled key.
#[derive(Debug, Clone)]
pub struct KeyedSong {
    pub name: String,
    pub key: KeySignature,
    pub result: Result<Composition, String>,
}

/// Composes every lyric in `keys` distinct keys of its sentiment's mode.
/// Lyric `i` draws its keys and seed from `sub_seed(seed, i)`; output order
/// follows the input.
pub fn compose_in_keys(lyrics: &[(String, String)], keys: usize, rng_seed: u64, sampler: &SamplerConfig) -> Vec<KeyedSong> {
    lyrics
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, (name, text))| {
            let lyric_seed = seed::sub_seed(rng_seed, i as u64);
            let sentiment = lyrics::analyze_sentiment(text);
            sample_key_candidates(&sentiment, keys, lyric_seed).into_iter().map(move |key| {
                let opts = ComposeOptions { key: KeyChoice::Fixed(key), seed: lyric_seed, sampler: *sampler, ..Default::default() };
                KeyedSong { name: name.clone(), key, result: compose(text, &opts).map_err(|e| e.to_string()) }
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub original: String,
    pub index: usize,
    pub key: KeySignature,
    pub time_signature: TimeSignature,
    pub seed: u64,
    pub report: Option<EvaluationReport>,
    pub error: Option<String>,
    #[serde(skip)]
    pub score: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub variants: Vec<Variant>,
    pub generated: CorpusStats,
    pub originals: CorpusStats,
}

/// Keys for the variants of one original: its own key first, then distinct
/// catalog keys of the same mode in seeded order.
pub fn variant_keys(original: KeySignature, k: usize, rng_seed: u64) -> Vec<KeySignature> {
    let mut others: Vec<KeySignature> =
        KeySignature::catalog_for(original.mode).into_iter().filter(|key| *key != original).collect();
    others.shuffle(&mut seed::rng(rng_seed));
    std::iter::once(original).chain(others).take(k).collect()
}

fn compose_variant(original: &Score, key: KeySignature, variant_seed: u64, sampler: &SamplerConfig) -> Result<Score> {
    let words = original.lyric_words();
    if words.is_empty() {
        return Err(Error::EmptyLyrics);
    }
    let known: HashMap<String, Vec<String>> = words.iter().map(|w| (w.text.clone(), w.syllables.clone())).collect();
    let opts = ComposeOptions {
        key: KeyChoice::Fixed(key),
        seed: variant_seed,
        title: Some(original.title.clone()),
        sampler: *sampler,
        time_signature: original.time_signature.is_generated().then_some(original.time_signature),
        known_syllables: Some(known),
        allow_any_key: true,
        instrument: original.instrument,
        ..Default::default()
    };
    Ok(compose(&original.lyric_text(), &opts)?.score)
}

/// Regenerates `k` variants per original in parallel; the output order is
/// originals in input order, variants by index.
pub fn compare(originals: &[Score], k: usize, rng_seed: u64, sampler: &SamplerConfig) -> Comparison {
    let variants: Vec<Variant> = originals
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, original)| {
            let original_seed = seed::sub_seed(rng_seed, i as u64);
            variant_keys(original.key, k, original_seed).into_iter().enumerate().map(move |(v, key)| {
                let variant_seed = seed::sub_seed(seed::splitmix64(original_seed), v as u64);
                let result = compose_variant(original, key, variant_seed, sampler)
                    .and_then(|score| evaluate_score(&score, Some(original)).map(|r| (score, r)));
                let time_signature = if original.time_signature.is_generated() {
                    original.time_signature
                } else {
                    TimeSignature::FOUR_FOUR
                };
                let (score, report, error) = match result {
                    Ok((s, r)) => (Some(s), Some(r), None),
                    Err(e) => (None, None, Some(e.to_string())),
                };
                Variant {
                    original: original.title.clone(),
                    index: v,
                    key,
                    time_signature: score.as_ref().map_or(time_signature, |s| s.time_signature),
                    seed: variant_seed,
                    report,
                    error,
                    score,
                }
            })
        })
        .collect();
    let generated = CorpusStats::from_reports(variants.iter().filter_map(|v| v.report.as_ref().map(|r| (v.time_signature, r))));
    let original_reports: Vec<(TimeSignature, EvaluationReport)> = originals
        .par_iter()
        .filter_map(|s| evaluate_score(s, None).ok().map(|r| (s.time_signature, r)))
        .collect();
    let originals = CorpusStats::from_reports(original_reports.iter().map(|(ts, r)| (*ts, r)));
    Comparison { variants, generated, originals }
}

impl Comparison {
    /// One CSV row per variant.
    pub fn variant_table(&self) -> String {
        let mut out = String::from("original,variant,key,time_signature,seed");
        for m in METRICS {
            out.push(',');
            out.push_str(m);
        }
        out.push_str(",error\n");
        for v in &self.variants {
            out.push_str(&format!("{},{},{},{},{}", csv_field(&v.original), v.index, v.key, v.time_signature, v.seed));
            for m in METRICS {
                match v.report.as_ref().and_then(|r| r.metric(m)) {
                    Some(x) => out.push_str(&format!(",{x:.6}")),
                    None => out.push_str(",none"),
                }
            }
            out.push_str(&format!(",{}\n", csv_field(v.error.as_deref().unwrap_or(""))));
        }
        out
    }

    /// Plot data for both corpora, with a leading `corpus` column.
    pub fn plot_table(&self) -> String {
        let mut out = String::from("corpus,metric,group,quantile,value\n");
        for (name, stats) in [("generated", &self.generated), ("original", &self.originals)] {
            for line in stats.plot_table().lines().skip(1) {
                out.push_str(name);
                out.push(',');
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}
