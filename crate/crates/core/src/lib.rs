//! Gompertz power-series lifetime distributions.
//!
//! The crate covers the distribution itself ([`distribution`]), the mixing
//! families ([`power_series`]), likelihood-based fitting ([`estimation`]),
//! goodness of fit ([`gof`]) and Monte-Carlo studies ([`simlab`]). The `gps`
//! binary is a thin wrapper over [`cli`].

pub mod cli;
pub mod data;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod gof;
pub mod power_series;
pub mod simlab;
pub mod quadrature;
pub mod special;

pub use distribution::{gompertz_tail, GompertzParams, GpsParams};
pub use error::{GpsError, Result};
pub use power_series::{PowerSeriesFamily, SparsePolynomial};
