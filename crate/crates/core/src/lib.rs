pub mod bell;
pub mod cli;
pub mod duality;
pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod fringe;
pub mod interferometer;
pub mod self_eraser;

pub use error::{Error, Result};
