//! Command-line pipeline around the `qspill` estimation crate.

pub mod config;
pub mod output;
pub mod pipeline;
