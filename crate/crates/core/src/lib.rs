//! Spectral-domain copula models for multichannel time series.
//!
//! Per-epoch magnitudes of Fourier coefficients are turned into
//! pseudo-observations, their dependence is summarised by coherence and a
//! Kendall-type rank coherence, and parametric copulas are fitted and ranked
//! by AIC.

pub mod analysis;
pub mod copula;
pub mod dependence;
pub mod error;
pub mod ingest;
pub mod margins;
pub mod output;
pub mod plots;
pub mod selection;
pub mod signal;
pub mod simstudy;

pub use error::{Error, Result};
