//! Sparse recovery of spherical harmonic expansions from random samples.
//!
//! The crate builds up, layer by layer, everything needed to reproduce the
//! compressive-sensing story on the sphere:
//!
//! * [`orthopoly`]: orthonormal polynomials for the weight `(1 - x^2)^alpha`,
//!   quadrature rules, and uniform bounds for the weighted systems.
//! * [`spherical`]: spherical harmonics `Y_l^k`, their preconditioned
//!   companions `Q_l^k = sqrt(sin phi) Y_l^k`, and coefficient-vector tools.
//! * [`sensing`]: random sampling of the sphere and the (preconditioned)
//!   measurement matrices built from those samples.
//! * [`l1solve`]: equality- and noise-constrained basis pursuit for complex
//!   coefficients via a primal-dual splitting method.
//! * [`ripcheck`]: exact and randomized restricted isometry diagnostics for
//!   small measurement matrices.
//! * [`harness`]: reproducible recovery trials, phase-diagram sweeps, noise
//!   sweeps, and CSV/PGM export behind the `sphrec` command line.

pub mod harness;
pub mod l1solve;
pub mod orthopoly;
pub mod ripcheck;
pub mod sensing;
pub mod spherical;
