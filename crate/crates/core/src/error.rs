use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid knot vector: {0}")]
    Knots(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("singular kernel evaluation at coincident points")]
    Singularity,

    #[error("duplicate collocation points {first} and {second} (distance {distance:e})")]
    DuplicatePoints {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("quadrature failed for collocation point {point}, support {support}: {source}")]
    Quadrature {
        point: usize,
        support: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("target point too close to the boundary (distance {0:e})")]
    TooClose(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
