use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown fault type `{0}`")]
    UnknownFault(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("insufficient training data: {have} records, need at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("graph contains a cycle through `{0}`")]
    Cycle(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("golden run of `{scenario}` (seed {seed}) produced a hazard at scene {frame}")]
    GoldenHazard { scenario: String, seed: u64, frame: usize },
    #[error("{unconverged} of {inferences} inferences did not converge (limit {limit})")]
    Unconverged { unconverged: usize, inferences: usize, limit: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
