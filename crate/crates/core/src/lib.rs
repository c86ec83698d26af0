//! Exact and numeric verification of Chern-Simons Riemann-Roch identities for
//! logarithmic connections on the projective line.
//!
//! Everything symbolic lives over `Q(x_1, ..., x_n)` with canonical rational
//! functions, so equalities are literal. The numeric oracle evaluates the same
//! identities through the actual roots of a polynomial and never shares code
//! paths with the combinatorial side.

// index loops below mirror the matrix formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod chern_simons;
pub mod cli_io;
pub mod exterior;
pub mod logconn;
pub mod matform;
pub mod numeric;
pub mod par;
pub mod pushforward;
pub mod random;
pub mod ratfun;
pub mod report;
pub mod rr;

pub use error::{Error, Result};
