pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod numerics;
pub mod output;
pub mod trajectories;

pub use error::{Error, Result};
