pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod pulse;
pub mod spectrum;
pub mod spin1;
pub mod units;

pub use error::{Error, Result};
