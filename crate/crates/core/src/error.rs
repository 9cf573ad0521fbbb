use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),

    #[error("grid too small: {axis} has {cells} cells, stencils need at least {min}")]
    GridTooSmall { axis: char, cells: usize, min: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{quantity} must be positive, got {value:e}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("{quantity} must be positive everywhere, got {value:e} at cell ({i}, {j})")]
    NonPositiveField { quantity: &'static str, i: usize, j: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular 2x2 block at cell {cell}: determinant {det:e}")]
    SingularBlock { cell: usize, det: f64 },

    #[error("elliptic solve did not converge in {sweeps} sweeps (relative residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("{quantity} = {value:e} at cell ({i}, {j}) after {stage}")]
    Positivity { quantity: &'static str, stage: &'static str, i: usize, j: usize, value: f64 },

    #[error("non-finite {quantity} at cell ({i}, {j}) after {stage}")]
    NonFinite { quantity: &'static str, stage: &'static str, i: usize, j: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("run aborted at step {step} (t = {time}): {source}")]
    Aborted {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("raster format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
