//! Library surface of the experiment driver, exposed so integration tests
//! can run the pipeline in-process.

pub mod config;
pub mod pipeline;
