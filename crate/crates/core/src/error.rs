use thiserror::Error;

/// Errors produced anywhere in the composition and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lyrics contain no word tokens")]
    EmptyLyrics,
    #[error("unknown key signature: {0}")]
    UnknownKey(String),
    #[error("unsupported meter {0}")]
    UnsupportedMeter(String),
    #[error("measure capacity exceeded: {0}")]
    CapacityExceeded(String),
    #[error("melody has {melody} notes but the rhythm has {events} syllable events")]
    AlignmentMismatch { melody: usize, events: usize },
    #[error("malformed score: {0}")]
    MalformedScore(String),
    #[error("score contains no pitched notes")]
    NoPitches,
    #[error("pitch-class distribution has zero variance")]
    ZeroVariance,
    #[error("melody too short: {0}")]
    TooShort(&'static str),
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("lyric syllables differ between scores: {0}")]
    LyricMismatch(String),
    #[error("lyrics provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("lyrics provider rejected credentials: {0}")]
    AuthFailure(String),
    #[error("lyrics provider returned no usable lines")]
    EmptyGeneration,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
