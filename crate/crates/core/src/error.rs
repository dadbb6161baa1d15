//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input (current, probability, ...) was NaN or infinite.
    #[error("non-finite numeric input: {0}")]
    NonFinite(&'static str),

    /// An argument violated an operation's domain, e.g. a weight outside
    /// [0, w_max] or mismatched grid dimensions.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input file (wrong magic, truncated payload, ...).
    #[error("format error: {0}")]
    Format(String),

    /// IDX magic number did not match the expected value.
    #[error("IDX magic mismatch in {path}: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic {
        path: String,
        expected: u32,
        found: u32,
    },

    /// IDX payload ended before the declared item count was read.
    #[error("IDX payload truncated in {path}: expected {expected} bytes, found {found}")]
    IdxTruncated {
        path: String,
        expected: usize,
        found: usize,
    },

    /// Image and label files declare different item counts.
    #[error("IDX count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    /// Network-state file carries an unsupported format version.
    #[error("network file version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    /// Network-state file checksum did not validate (corrupt or truncated).
    #[error("network file checksum failure")]
    ChecksumFailure,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
