use thiserror::Error;

pub type Result<T> = std::result::Result<T, JrcError>;

#[derive(Debug, Error)]
pub enum JrcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular: {0}")]
    Singularity(String),

    #[error("scatterer {index} delay of {shift} chips exceeds the code length {code_length} (range ambiguity)")]
    RangeAmbiguity {
        index: usize,
        shift: usize,
        code_length: usize,
    },

    #[error("scatterer {index} delay is {chips} chips, not an integer chip shift")]
    FractionalDelay { index: usize, chips: f64 },

    #[error("model is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("decoding impossible: {0}")]
    DecodingImpossible(String),

    #[error("peak sidelobe ratio undefined: {0}")]
    UndefinedPsl(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl JrcError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        JrcError::InvalidArgument(msg.into())
    }
}
