//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters violate `N > 2s`, `s ∈ (0,1)` or a range documented on the type.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A quadrature did not reach the requested relative tolerance.
    #[error("quadrature failure: {context} (estimated rel error {rel_err:.3e} > rel_tol {rel_tol:.3e})")]
    QuadratureFailure {
        context: String,
        rel_err: f64,
        rel_tol: f64,
    },

    /// The annulus does not contain enough grid nodes to be usable.
    #[error("degenerate domain: only {interior} interior nodes (need at least {min})")]
    DegenerateDomain { interior: usize, min: usize },

    /// An operation that requires a nonzero field received (numerically) zero.
    #[error("zero function passed to {0}")]
    ZeroFunction(&'static str),

    /// The field lacks the data a routine needs (e.g. a gradient callable).
    #[error("field capability missing: {0}")]
    Capability(&'static str),

    /// Log-log fit received nonpositive data after baseline subtraction.
    #[error("fit domain error: {0}")]
    FitDomain(String),

    /// A winding-number loop passes too close to the origin.
    #[error("degenerate loop: point {index} has |p| = {norm:.3e} below tolerance")]
    DegenerateLoop { index: usize, norm: f64 },

    /// Degree computation requested in a dimension it does not support.
    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    /// Discrete constraint `|N(u) - 1| <= tol` violated on entry.
    #[error("constraint violation: |N(u) - 1| = {drift:.3e} exceeds {tol:.3e}")]
    ConstraintViolation { drift: f64, tol: f64 },

    /// The line search could not find a decreasing step.
    #[error("flow stagnation after {steps} steps at level {level}")]
    Stagnation { steps: usize, level: f64 },

    /// Assembling the nonlocal form would exceed the configured pair budget.
    #[error("pair budget exceeded: {nodes} nodes imply {pairs} pairs > budget {budget}")]
    PairBudget {
        nodes: usize,
        pairs: usize,
        budget: usize,
    },

    /// File I/O with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A parse error in one of the text formats.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
