//! Error types shared by all metric computations.

use crate::hist::BinSpec;

/// Which sample class a degenerate-input error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleClass {
    Positive,
    Negative,
}

impl std::fmt::Display for SampleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleClass::Positive => write!(f, "positive"),
            SampleClass::Negative => write!(f, "negative"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid bin spec: lo={lo}, hi={hi}, n_bins={n_bins} (need finite lo < hi and n_bins >= 2)")]
    InvalidBinSpec { lo: f64, hi: f64, n_bins: usize },

    #[error("score {value} is not finite")]
    NonFiniteScore { value: f64 },

    #[error("label {label} is outside {{0, 1}}")]
    InvalidLabel { label: u8 },

    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("incompatible histograms: {a:?} vs {b:?}")]
    BinSpecMismatch { a: BinSpec, b: BinSpec },

    #[error("metric undefined: no {class} samples accumulated")]
    EmptyClass { class: SampleClass },

    #[error("metric undefined: no ground-truth regions accumulated")]
    NoRegions,

    #[error("fpr limit {value} is outside (0, 1]")]
    InvalidFprLimit { value: f64 },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("metric value {value} for {name} is outside [0, 1]")]
    MetricOutOfRange { name: String, value: f64 },

    #[error("cannot aggregate an empty suite")]
    EmptySuite,

    #[error("malformed histogram bytes: {reason}")]
    MalformedBytes { reason: String },
}

pub type Result<T> = std::result::Result<T, EvalError>;
