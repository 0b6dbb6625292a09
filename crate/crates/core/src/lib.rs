pub mod acceptance;
pub mod bijections;
pub mod error;
pub mod freeprob;
pub mod geometry;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod sampler;
pub mod series;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
