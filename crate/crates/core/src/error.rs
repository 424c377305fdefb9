use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("duplicate contract `{0}`")]
    DuplicateContract(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no .sol files found under {0}")]
    NoInputs(PathBuf),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}
