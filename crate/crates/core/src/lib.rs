//! Probability models on the integers for match score differences.
//!
//! * [`zdist`]: Skellam family, zero-inflated Skellam, discretized normal and
//!   Laplace, evaluated in log space.
//! * [`copula`]: Frank/Gumbel couplings of two integer marginals.
//! * [`regress`]: team-ability regression structure and parameter packing.
//! * [`fit`]: maximum likelihood, EM for zero inflation, information criteria.
//! * [`league`]: match data, odds, season simulation and bootstrap bands.

pub mod copula;
pub mod error;
pub mod fit;
pub mod league;
pub mod regress;
pub mod zdist;

pub use error::{Error, Result};
