use std::path::PathBuf;

use thiserror::Error;

use crate::models::Stage;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error at {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing layer `{layer}` for entry `{id}`: {path}")]
    MissingLayer {
        id: String,
        layer: String,
        path: PathBuf,
    },

    #[error("entry `{id}` has no `{layer}` layer")]
    LayerAbsent { id: String, layer: String },

    #[error("duplicate id `{0}` in manifest")]
    DuplicateId(String),

    #[error("dimension mismatch for `{context}`: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        context: String,
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("code {code} outside the {table} table ({context})")]
    InvalidCode {
        code: u8,
        table: &'static str,
        context: String,
    },

    #[error("unknown class name `{0}`")]
    UnknownClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),

    #[error("node bound to {bound} cannot {operation}")]
    WrongStage {
        bound: Stage,
        operation: &'static str,
    },

    #[error("stage {stage} failed for `{id}`: {source}")]
    Stage {
        stage: Stage,
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: Stage, id: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage {
                stage,
                id: id.to_string(),
                source: Box::new(other),
            },
        }
    }
}
