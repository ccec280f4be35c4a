#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod selection;
pub mod solver;
pub mod statistical;
pub mod thermo;

pub use error::{Error, Result};
