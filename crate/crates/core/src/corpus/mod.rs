//! TTS corpus preparation: transcript cleanup, silence handling, sentence
//! cutting from alignment timestamps, duration filtering and train/val
//! splitting.

mod clip;
mod manifest;
pub mod numbers;
mod text;

use thiserror::Error;

use crate::audio::AudioError;

pub use clip::{cut_by_alignment, pad_tail_silence, parse_alignment_csv, trim_silence, AlignmentSpan};
pub use manifest::{
    filter_by_duration, parse_manifest, parse_manifest_rows, split_train_val, write_manifest, CorpusEntry,
    CorpusManifest, SplitPolicy,
};
pub use text::{Charset, TextNormalizer};

pub const DEFAULT_SILENCE_DBFS: f64 = -40.0;
pub const DEFAULT_FRAME_MS: f64 = 10.0;
pub const DEFAULT_PAD_S: f64 = 0.4;
pub const DEFAULT_MIN_DURATION_S: f64 = 0.5;
pub const DEFAULT_MAX_DURATION_S: f64 = 30.0;
pub const DEFAULT_VAL_RATIO: f64 = 0.08;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("number {0:?} exceeds the supported cardinal range")]
    NumberOutOfRange(String),
    #[error("every frame is below the silence threshold")]
    AllSilent,
    #[error("frame length must be positive")]
    InvalidFrame,
    #[error("pad of {0} s lies outside [0.3, 0.5]")]
    PadOutOfRange(f64),
    #[error("span {index} ({start_s}..{end_s} s) exceeds the {duration_s} s recording")]
    SpanOutOfRange {
        index: usize,
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },
    #[error("span {index} overlaps or precedes the previous span")]
    OverlappingSpans { index: usize },
    #[error("span {index} is invalid: need 0 <= start < end, got {start_s}..{end_s}")]
    InvalidSpan { index: usize, start_s: f64, end_s: f64 },
    #[error("invalid duration bounds {min_s}..{max_s}")]
    InvalidBounds { min_s: f64, max_s: f64 },
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("validation ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("validation count {count} must be smaller than the manifest size {total}")]
    ValCountTooLarge { count: usize, total: usize },
    #[error("manifest line {line}: expected `path|transcript`")]
    MalformedLine { line: usize },
    #[error("duplicate audio path {0:?}")]
    DuplicatePath(String),
    #[error("transcript {0:?} contains characters outside the charset")]
    CharsetViolation(String),
    #[error("invalid duration {0} s")]
    InvalidDuration(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}
