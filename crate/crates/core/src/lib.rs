pub mod corpus;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod graph;
pub mod moments;
pub mod numeric;
pub mod rng;
pub mod theory;
pub mod tree;

pub use dist::{DistSpec, Sampler};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use tree::WbpModel;
