pub mod analysis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod flow;
pub mod hierarchy;
pub mod lattice;
mod output;
pub mod soliton;
pub mod spectral;

pub use error::{Error, Result};
