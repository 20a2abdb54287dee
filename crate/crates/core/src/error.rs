use crate::eigen::EigenResult;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("shape mismatch: expected length {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("no conical intersection: {0}")]
    NoIntersection(String),

    #[error("dense solver limited to dimension {cutoff}, got {dim}")]
    DenseTooLarge { dim: usize, cutoff: usize },

    #[error("requested {requested} eigenpairs of a dimension-{dim} operator")]
    TooManyPairs { requested: usize, dim: usize },

    #[error(
        "Lanczos did not converge: {converged} of {requested} pairs below tolerance after {matvecs} operator applications"
    )]
    NotConverged {
        requested: usize,
        converged: usize,
        matvecs: usize,
        partial: Box<EigenResult>,
    },

    #[error("value {value} outside grid extent [{min}, {max}]")]
    OutOfExtent { value: f64, min: f64, max: f64 },

    #[error("axis {axis} does not exist on a {ndim}-dimensional grid")]
    NoSuchAxis { axis: usize, ndim: usize },

    #[error("families live in different representations: {0}")]
    RepresentationMismatch(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
