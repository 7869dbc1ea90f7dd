//! Runs every code block of the guide in `book/` as a doc-test, so the
//! prose and the library cannot drift apart. Each chapter becomes an empty
//! module carrying the chapter text as its documentation.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/polynomials.md")]
pub mod polynomials {}

#[doc = include_str!("../../../book/src/harmonics.md")]
pub mod harmonics {}

#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/ripcheck.md")]
pub mod ripcheck {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
