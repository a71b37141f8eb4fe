use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// Probability mass beyond `k_max` exceeds the truncation tolerance.
    #[error("pmf truncated at k_max={k_max} leaves residual mass {residual:e}")]
    Truncation { k_max: usize, residual: f64 },

    /// Zero mean degree: nothing can spread.
    #[error("degenerate degree model: mean degree is zero, no spreading possible")]
    NoSpread,

    #[error("empty graph: no data to measure")]
    NoData,

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("integration unstable at t={time}: fraction {value} left [0, 1]")]
    Unstable { time: f64, value: f64 },

    #[error("threshold {threshold} unattainable at spreading rate {alpha}")]
    UnattainableThreshold { threshold: f64, alpha: f64 },

    #[error("mission infeasible within bounds: {0}")]
    Infeasible(String),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}
