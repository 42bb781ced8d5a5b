//! File formats, experiment pipelines and the command-line front end for
//! the `spkver-core` speaker-verification primitives.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod formats;
pub mod pipeline;
