//! File formats, CSV output, parallel drivers and the command-line front
//! end over `expander-core`.

pub mod cli;
pub mod csv;
pub mod format;
pub mod parallel;
pub mod parse;

pub use expander_core as core;
