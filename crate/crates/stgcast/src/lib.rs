//! Spatio-temporal traffic forecasting toolkit: a graph-convolutional GRU
//! encoder-decoder with training, baselines, and evaluation over loop
//! detector speed tables.

pub mod data;
pub mod error;
pub mod eval;
pub mod fsutil;
pub mod graph;
pub mod nn;
pub mod rng;
pub mod train;
pub mod tensor;

pub use error::{Error, Result};
