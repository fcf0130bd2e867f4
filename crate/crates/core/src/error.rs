use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the detection pipeline.
///
/// Variants are grouped so the command-line front end can map them onto
/// its exit codes: input/data problems versus model problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("MIDI parse error at byte {offset}: {message}")]
    MidiParse { offset: usize, message: String },

    #[error("WAV error: {0}")]
    Wav(#[from] hound::Error),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("shape mismatch in {layer}: {message}")]
    Shape { layer: String, message: String },

    #[error("dataset must contain both classes")]
    SingleClass,

    #[error("checkpoint has bad magic bytes")]
    BadMagic,

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint is truncated (needed {needed} more bytes at offset {offset})")]
    Truncated { offset: usize, needed: usize },

    #[error("checkpoint parameter block mismatch: {0}")]
    BlockMismatch(String),

    #[error("missing model: {0}")]
    MissingModel(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(layer: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.into(),
            message: msg.into(),
        }
    }

    /// True for errors concerning trained artifacts rather than input data.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::Shape { .. }
                | Error::BadMagic
                | Error::VersionMismatch { .. }
                | Error::Truncated { .. }
                | Error::BlockMismatch(_)
                | Error::MissingModel(_)
        )
    }
}
