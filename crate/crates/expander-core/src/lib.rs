//! Random sparse binary expander matrices: dyadic-splitting tail bounds on
//! neighbour-set sizes, expansion phase transitions, and the ER / SSMP
//! recovery algorithms.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command line
//! live in the `expander` crate.

#![no_std]
// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod bounds;
pub mod matrices;
pub mod phase;
pub mod recovery;
pub mod splitmodel;

pub use error::{Error, Result};
