/// Errors produced by mesh construction, assembly and solves.
///
/// The three solver-facing classes (`Infeasible`, `NoConvergence`, `Io`)
/// are kept distinct so a driver can map them to distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver breakdown: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
