use std::io;
use std::path::PathBuf;

use lck_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("cannot build manifold: {0}")]
    Resolve(#[from] GeomError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
