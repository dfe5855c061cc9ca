//! Horton pruning of Galton-Watson trees.
//!
//! The crate works at two levels. At the level of single trees it provides
//! series reduction, Horton pruning, Horton-Strahler orders and branch
//! statistics ([`trees`]). At the level of offspring laws it provides the
//! pruning operator on distributions, the invariant Galton-Watson family
//! `IGW(q)`, Tokunaga coefficients and the Horton exponent
//! ([`distributions`], [`pruning`]). Monte Carlo sampling ([`sampler`]) and an
//! exact finite enumeration ([`oracle`]) give two independent checks on the
//! analytic side.
//!
//! ```
//! use horton::distributions::{igw, igw_constants};
//! use horton::pruning::prune_distribution;
//!
//! let law = igw(0.75).unwrap();
//! let pruned = prune_distribution(&law).unwrap();
//! assert!((pruned.q0() - 0.75).abs() < 1e-12);
//! let k = igw_constants(0.75).unwrap();
//! assert!((k.horton_exponent - 4f64.powf(4.0 / 3.0)).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]

pub mod distributions;
mod error;
pub mod oracle;
pub mod pruning;
pub mod rootfind;
pub mod sampler;
pub mod table;
pub mod trees;

pub use error::{Error, Result};
