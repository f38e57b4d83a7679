use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Every variant names the offending input so
/// pipeline diagnostics can point at a file, line, or word.
#[derive(Debug, Error)]
pub enum Error {
    #[error("manifest {path}: line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("word selection is empty; nothing to build a matrix from")]
    EmptySelection,
    #[error("column for word '{word}' is all-zero")]
    ZeroColumn { word: String },
    #[error("column for word '{word}' is constant; correlation is undefined")]
    ConstantColumn { word: String },
    #[error("graph is empty; nothing to lay out")]
    EmptyGraph,
    #[error("embedding covers {embedding} nodes but the graph has {graph}")]
    NodeCountMismatch { graph: usize, embedding: usize },
    #[error("{path}: line {line}: {message}")]
    PajekParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("refusing to write a Pajek file with zero vertices")]
    PajekEmptyGraph,
    #[error("matrix is not symmetric with unit diagonal")]
    NotACorrelationMatrix,
    #[error("label count ({labels}) does not match matrix dimension ({dim})")]
    LabelMismatch { labels: usize, dim: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{module}: {source}")]
    Stage {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("report {path}: {message}")]
    Report { path: PathBuf, message: String },
}

impl Error {
    /// Wrap an error with the pipeline stage it came from.
    pub fn in_stage(self, module: &'static str) -> Error {
        Error::Stage {
            module,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
