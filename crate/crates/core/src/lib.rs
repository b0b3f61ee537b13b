pub mod error;
pub mod imagecore;

pub use error::{Error, Result};
pub mod elastomer;
pub mod illumination;
pub mod scenegen;
pub mod augment;
pub mod evaluate;
pub mod config;
