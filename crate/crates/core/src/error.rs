use thiserror::Error;

/// Errors raised by model construction, LMI assembly, synthesis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("block is not positive definite: {0}")]
    SingularBlock(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("alpha must be positive, got {0}")]
    BadAlpha(f64),

    #[error("bad input: {0}")]
    BadInput(String),

    #[error("unknown decision variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate decision variable `{0}`")]
    DuplicateVariable(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no alpha in [{lo:e}, {hi:e}] admits a feasible solution")]
    InfeasibleAtAllAlpha { lo: f64, hi: f64 },

    #[error("solver did not converge: {0}")]
    SolverFailure(String),

    #[error("pair (A, B) is not stabilizable")]
    NotStabilizable,

    #[error("pair (A, B) is not controllable")]
    NotControllable,

    #[error("time step must satisfy 0 < dt <= dwell/10, got dt = {0:e}")]
    BadTimestep(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
