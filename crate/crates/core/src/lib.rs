pub mod cli_io;
pub mod coincidence;
pub mod error;
pub mod lattice;
pub mod overlap;
pub mod statistics;
mod serde_util;
pub mod substitution;
pub mod tiles;

pub use error::{Error, Result};
