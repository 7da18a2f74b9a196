pub mod data;
pub mod error;
pub mod glm;
pub mod io;
pub mod numeric;
pub mod pooling;
pub mod ranking;
pub mod rashomon;
pub mod reliance;
pub mod report;
pub mod shapley;
pub mod stats;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
