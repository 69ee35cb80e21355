use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("time step {dt:e} violates the monotonicity bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },
    #[error("adaptive time step {dt:e} fell below dt_min {dt_min:e} at t = {time:e}")]
    StepUnderflow { dt: f64, dt_min: f64, time: f64 },
    #[error("non-finite value at cell {cell} (t = {time:e})")]
    NonFinite { cell: usize, time: f64 },
    #[error("negative value {value:e} at cell {cell} exceeds the clamping floor (t = {time:e})")]
    Negativity { cell: usize, value: f64, time: f64 },
    #[error("solution reached the boundary layer at cell {cell} (value {value:e}, t = {time:e})")]
    BoundaryTouch { cell: usize, value: f64, time: f64 },
    #[error("positivity mask has no complement on the grid")]
    EmptyComplement,
    #[error("positivity mask is empty")]
    EmptyMask,
    #[error("no cells left for the eikonal residual after interior and ridge exclusion")]
    NoInteriorCells,
    #[error("fit needs {needed} points covering two decades, got {got} points over {decades:.2} decades")]
    InsufficientData { needed: usize, got: usize, decades: f64 },
    #[error("comparison precondition failed at cell {cell}: {detail}")]
    Precondition { cell: usize, detail: String },
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised by the integrator itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Cfl { .. }
                | Error::StepUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Negativity { .. }
                | Error::BoundaryTouch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
