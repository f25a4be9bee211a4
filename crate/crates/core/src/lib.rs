pub mod catalog;
pub mod cli;
pub mod error;
pub mod expr;
pub mod invariance;
pub mod jet;
pub mod reduction;
pub mod symmetry;

pub use error::{Error, Result};
