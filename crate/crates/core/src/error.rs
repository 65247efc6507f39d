use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: invalid timing ({msg})")]
    Timing { line: usize, msg: String },

    #[error("document {doc_id}: NP spans {a:?} and {b:?} overlap without nesting")]
    CrossingSpans {
        doc_id: String,
        a: (usize, usize),
        b: (usize, usize),
    },

    #[error("WAV file has {0} channels, only mono is supported")]
    WavNotMono(u16),

    #[error("WAV file is not 16-bit PCM (format tag {format}, {bits} bits per sample)")]
    WavNotPcm16 { format: u16, bits: u16 },

    #[error("WAV file is truncated: {0}")]
    WavTruncated(String),

    #[error("malformed WAV file: {0}")]
    WavMalformed(String),

    #[error("empty audio signal")]
    EmptySignal,

    #[error("sample rate {0} Hz is below the supported minimum of 8000 Hz")]
    SampleRateTooLow(u32),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("training corpus contains a single class only")]
    SingleClass,

    #[error("document {doc_id}, token {token}: predicted {column} label missing")]
    MissingPrediction {
        doc_id: String,
        token: usize,
        column: &'static str,
    },

    #[error("no audio for document {0}")]
    MissingAudio(String),

    #[error("no gold coreference chains in training data")]
    NoGoldChains,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
