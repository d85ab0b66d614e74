//! Numerical toolkit for the critical fractional problem on annular domains:
//! closed-form bubble energies, singular-kernel quadrature, truncation
//! estimates, and a constrained gradient-flow min-max solver.
//!
//! See the guide in `book/` for a narrative walkthrough; `README.md` covers
//! build, test, and CLI usage.

pub mod bubbles;
pub mod discrete;
pub mod domain;
pub mod error;
pub mod estimates;
pub mod geom;
pub mod params;
pub mod quadrature;

pub use error::{Error, Result};
pub use params::{FracParams, QuadratureConfig};

// Compile and run the guide's snippets as doctests so the book stays in
// sync with the code.
#[doc = include_str!("../../../book/src/index.md")]
#[doc(hidden)]
pub mod _guide_index {}
#[doc = include_str!("../../../book/src/constant.md")]
#[doc(hidden)]
pub mod _guide_constant {}
#[doc = include_str!("../../../book/src/bubbles.md")]
#[doc(hidden)]
pub mod _guide_bubbles {}
#[doc = include_str!("../../../book/src/quadrature.md")]
#[doc(hidden)]
pub mod _guide_quadrature {}
#[doc = include_str!("../../../book/src/estimates.md")]
#[doc(hidden)]
pub mod _guide_estimates {}
#[doc = include_str!("../../../book/src/solver.md")]
#[doc(hidden)]
pub mod _guide_solver {}
#[doc = include_str!("../../../book/src/cli.md")]
#[doc(hidden)]
pub mod _guide_cli {}
