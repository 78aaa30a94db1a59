pub mod augment;
pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod graph;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
