//! Clustering laws of species sampling sequences whose base measure has atoms.
//!
//! A latent exchangeable partition seats customers at tables; every table
//! draws a dish from the base measure `H`. When `H` has atoms, tables that
//! draw the same atom merge, and the partition of customers by dish is
//! coarser than the latent one. This crate provides:
//!
//! * [`partitions`]: canonical set partitions, restriction and enumeration.
//! * [`eppf`]: Pitman-Yor, Gibbs-type and user-supplied EPPFs, generalized
//!   Stirling numbers and latent-partition sampling.
//! * [`basemeasure`]: atom/diffuse decomposition of `H`, dish sampling and
//!   collision probabilities.
//! * [`induced`]: exact probabilities of the merged partition by several
//!   independent routes, including a brute-force oracle.
//! * [`asymptotics`]: large-n two-level restaurant simulation and
//!   experiments on block counts.
//! * [`cli`]: the `atompart` command-line surface.

pub mod asymptotics;
pub mod basemeasure;
pub mod caps;
pub mod cli;
pub mod config;
pub mod eppf;
mod error;
pub mod induced;
pub mod numeric;
pub mod partitions;
pub mod selfcheck;

pub use error::{Error, Result};
