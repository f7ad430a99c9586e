pub mod assumptions;
pub mod bandit;
pub mod cli;
pub mod config;
pub mod error;
pub mod linsys;
pub mod montecarlo;
pub mod noise;
pub mod scenarios;

pub use error::{Error, Result};
