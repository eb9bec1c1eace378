pub mod certify;
pub mod cli;
pub mod construct;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod projection;

pub use error::{Error, Result};
