pub mod cli;
pub mod dist;
pub mod error;
pub mod harness;
pub mod instance;
pub mod mechanism;
pub mod partition;
pub mod rng;
pub mod solvers;
pub mod tail;
pub mod typespace;

pub use error::{Error, Result};
