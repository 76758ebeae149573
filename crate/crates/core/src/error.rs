use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("net {net} references undeclared cell `{cell}`")]
    DanglingPin { net: String, cell: String },

    #[error("duplicate cell name `{0}`")]
    DuplicateCell(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("placement is missing movable cell `{0}`")]
    IncompletePlacement(String),

    #[error("infeasible utilization: {0}")]
    InfeasibleUtilization(String),

    #[error("infeasible region constraint: {0}")]
    InfeasibleRegion(String),

    #[error("no legal site for cell `{0}`")]
    NoLegalSite(String),

    #[error("unknown cell `{0}`")]
    UnknownCell(String),

    #[error("invalid node id {0}")]
    InvalidNode(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("{0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { file: file.into(), line, msg: msg.into() }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        })
    }
}
