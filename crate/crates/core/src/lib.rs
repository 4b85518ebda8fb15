//! Asymptotics of call and put prices and of the implied volatility at
//! extreme strikes.
//!
//! The crate is organised bottom-up:
//!
//! * [`bs`] exact Black-Scholes pricing and log-price implied-volatility inversion,
//! * [`quadrature`] adaptive Gauss-Kronrod integration in the log domain,
//! * [`curve`] evaluable strike-to-price maps,
//! * [`asymptotics`] model-free wing formulas with error envelopes,
//! * [`tail_index`] moment/tail index estimation behind the moment formulas,
//! * [`symmetry`] the put-call dual transform and implied-volatility symmetry,
//! * [`models`] Pareto-type tails of Stein-Stein, Heston and Hull-White,
//! * [`regvar`] numerical regular-variation diagnostics,
//! * [`arbitrage`] static-arbitrage validation of sampled surfaces,
//! * [`harness`] experiment driver, CSV formats and error-order fitting.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod asymptotics;
pub mod bs;
pub mod curve;
mod error;
pub mod harness;
pub mod models;
pub mod quadrature;
pub mod regvar;
pub mod special;
pub mod stats;
pub mod symmetry;
pub mod tail_index;

pub use bs::{MarketFrame, OptionKind, Vol};
pub use curve::PriceCurve;
pub use error::{Error, Result};
