//! Configuration file for the pitch sampler and playback tempo.
//!
//! The file is TOML with flat `key = value` lines; every key is optional and
//! falls back to the built-in default:
//!
//! ```toml
//! range_low = 60            # MIDI note, inclusive
//! range_high = 76
//! leap_threshold = 7        # semitones allowed between neighbours
//! weight_unison = 1.0       # relative sampling weight by interval size
//! weight_step = 6.0         # 1-2 semitones
//! weight_third = 3.0        # 3-4
//! weight_fourth_fifth = 1.5 # 5-7
//! weight_sixth = 0.5        # 8-9
//! tempo_bpm = 100
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::midi::DEFAULT_TEMPO_BPM;
use crate::pitch::SamplerConfig;
use crate::theory::PitchRange;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub sampler: SamplerConfig,
    pub tempo_bpm: u32,
}

impl Default for Config {
    fn default() -> Self {
        Config { sampler: SamplerConfig::default(), tempo_bpm: DEFAULT_TEMPO_BPM }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    range_low: Option<u8>,
    range_high: Option<u8>,
    leap_threshold: Option<u8>,
    weight_unison: Option<f64>,
    weight_step: Option<f64>,
    weight_third: Option<f64>,
    weight_fourth_fifth: Option<f64>,
    weight_sixth: Option<f64>,
    tempo_bpm: Option<u32>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut config = Config::default();
        let s = &mut config.sampler;
        s.range = PitchRange::new(file.range_low.unwrap_or(s.range.low.0), file.range_high.unwrap_or(s.range.high.0))?;
        s.leap_threshold = file.leap_threshold.unwrap_or(s.leap_threshold);
        let w = &mut s.weights;
        w.unison = file.weight_unison.unwrap_or(w.unison);
        w.step = file.weight_step.unwrap_or(w.step);
        w.third = file.weight_third.unwrap_or(w.third);
        w.fourth_fifth = file.weight_fourth_fifth.unwrap_or(w.fourth_fifth);
        w.sixth = file.weight_sixth.unwrap_or(w.sixth);
        config.tempo_bpm = file.tempo_bpm.unwrap_or(config.tempo_bpm);
        config.sampler.validate()?;
        if config.tempo_bpm == 0 {
            return Err(Error::Config("tempo_bpm must be positive".into()));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_toml(&std::fs::read_to_string(path)?)
    }
}
