use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical routines.
///
/// Values are carried as `f64` regardless of the scalar type used for the
/// computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("nontrivial equilibrium does not exist: (beta0/delta)(k-1) - 1 = {margin} <= 0")]
    Infeasible { margin: f64 },

    #[error("no purely imaginary root at delta = {delta}: (kB1)^2 - (delta+B1)^2 = {discriminant} <= 0")]
    NoHopf { delta: f64, discriminant: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last iterate {re} + {im}i, |residual| = {residual})")]
    NewtonFailed {
        iterations: usize,
        re: f64,
        im: f64,
        residual: f64,
    },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered after t = {t}")]
    NonFinite { t: f64 },

    #[error("t = {t} lies outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid integration options: {0}")]
    InvalidOptions(String),

    #[error("threshold search precondition failed at {endpoint} = {c}: verdict {verdict}")]
    Precondition {
        endpoint: &'static str,
        c: f64,
        verdict: String,
    },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("unsupported case: {0}")]
    Unsupported(&'static str),

    #[error("polar integration overflowed")]
    Diverged,
}
