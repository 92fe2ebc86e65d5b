pub mod central_configs;
pub mod connections;
pub mod error;
pub mod estimates;
pub mod flows;
pub mod potentials;

pub use error::{Error, Result};
