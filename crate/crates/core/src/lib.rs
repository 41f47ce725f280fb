//! Two-component Vasicek model of zero-coupon longevity bonds.
//!
//! The short rate `r` and the mortality intensity `lambda` are each a
//! long-run level minus an Ornstein-Uhlenbeck factor. The crate covers the
//! closed-form bond price and yield ([`affine`]), the exact discrete-time
//! state-space form ([`state_space`]), Kalman filtering and the Gaussian
//! likelihood ([`kalman`]), maximum-likelihood calibration
//! ([`calibration`]), path simulation and Monte Carlo survival rates
//! ([`simulation`]), and CSV ingestion plus the `zclb` command line
//! ([`data_io`], [`cli`]).

pub mod affine;
pub mod calibration;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod kalman;
pub mod optim;
pub mod simulation;
pub mod state_space;

pub use affine::{FactorState, ModelParams, Tenor};
pub use data_io::YieldPanel;
pub use error::{Error, Result};
