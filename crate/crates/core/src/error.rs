use std::io;

use thiserror::Error;

/// Errors raised while decoding or encoding MVOL containers.
#[derive(Debug, Error)]
pub enum MvolError {
    #[error("bad magic: expected \"MVOL1\\0\"")]
    BadMagic,
    #[error("unsupported MVOL version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated MVOL data: need {needed} bytes, have {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("zero dimension in header: {0:?}")]
    ZeroDimension([u32; 3]),
    #[error("dimensions {0:?} overflow the addressable size")]
    DimensionOverflow([u32; 3]),
    #[error("invalid voxel spacing {0:?}")]
    InvalidSpacing([f32; 3]),
    #[error("unknown payload kind {0}")]
    UnknownKind(u8),
    #[error("expected a {expected} payload, found a {found} payload")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("non-finite sample {value} at index {index}")]
    NonFiniteSample { index: usize, value: f32 },
    #[error("invalid mask byte {value} at index {index}")]
    InvalidMaskByte { index: usize, value: u8 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch([usize; 3], [usize; 3]),
    #[error("invalid dimensions {0:?}")]
    InvalidDimensions([usize; 3]),
    #[error("invalid voxel spacing {0:?}")]
    InvalidSpacing([f32; 3]),
    #[error("data length {actual} does not match dims {dims:?}")]
    LengthMismatch { dims: [usize; 3], actual: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("slice index {index} out of range for depth {depth}")]
    SliceOutOfRange { index: usize, depth: usize },
    #[error("image of {width}x{height} is empty")]
    EmptyImage { width: usize, height: usize },
    #[error("invalid sigma {0}: must be finite and positive")]
    InvalidSigma(f64),
    #[error("sigma set must be non-empty and strictly increasing")]
    InvalidSigmaSet,
    #[error("invalid SSIM constants: k1={k1} k2={k2} L={dynamic_range}")]
    InvalidConstants {
        k1: f64,
        k2: f64,
        dynamic_range: f64,
    },
    #[error("sample {value} at index {index} lies outside [0, {dynamic_range}]")]
    OutOfRange {
        index: usize,
        value: f32,
        dynamic_range: f64,
    },
    #[error("median window must be odd and at least 1, got {0}")]
    InvalidMedianKernel(usize),
    #[error("threshold search needs at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("threshold must be finite, got {0}")]
    NonFiniteThreshold(f32),
    #[error("empty input list")]
    EmptyInput,
    #[error("list length mismatch: {0} vs {1}")]
    ListLengthMismatch(usize, usize),
    #[error("dice is undefined when both masks are empty")]
    EmptyDice,
    #[error("split has no {0} volumes")]
    EmptySplit(&'static str),
    #[error("lesion {index} lies outside the brain")]
    LesionOutsideBrain { index: usize },
    #[error("invalid lesion {index}: {reason}")]
    InvalidLesion { index: usize, reason: &'static str },
    #[error("invalid phantom parameter: {0}")]
    InvalidPhantom(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
