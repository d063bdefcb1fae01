pub mod conformance;
pub mod declare;
pub mod discovery;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod event_log;
pub mod pipeline;
pub mod rule_clustering;
pub mod seed;
pub mod sparse_regression;

pub use error::{Error, Result};
