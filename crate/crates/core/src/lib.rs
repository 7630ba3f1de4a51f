//! Deflation sequences for polynomial systems over the complex numbers.
//!
//! Given a system `F: C^n → C^m` and a solution `x̂`, the nullity of the
//! Jacobian `J(x̂)` bounds the local dimension of the solution set at `x̂`
//! from above, but the bound is often loose at singular solutions. Each
//! deflation step appends the bordered linear system `[J; R]·y = [0; d]`
//! (for a random border `R`, `d`) to the equations, doubling the variables
//! and tightening the nullity. The recorded chain of nullities
//! `(n₀, n₁, n₂, …)` is the *deflation sequence* of the solution.
//!
//! The crate provides:
//!
//! * [`polysys`] — sparse multivariate polynomials with exact symbolic
//!   differentiation; the brute-force oracle for everything else.
//! * [`brent`] — the Brent equations `B(m,n,p|r)` whose solutions are
//!   rank-`r` bilinear schemes for `m×n` by `n×p` matrix multiplication,
//!   evaluated in closed form, plus classic schemes and dimension bounds.
//! * [`deflation`] — the deflation engine: numerical rank, border drawing,
//!   bordered solves, and the recursive block Jacobians of deflated systems.
//! * [`solutions_io`] — JSON solution files, JSON/CSV reports, batch runs.
//! * [`fixtures`] — small standard examples (cuspidal cubic, Whitney
//!   umbrella) used throughout the tests and the CLI.

pub mod brent;
pub mod deflation;
pub mod error;
pub mod fixtures;
pub mod polysys;
pub mod solutions_io;

pub use error::{Error, Result};
pub use num_complex::Complex64;
