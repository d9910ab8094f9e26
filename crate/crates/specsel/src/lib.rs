//! File formats, multi-split studies and the command-line front end for
//! `specsel-core`.

pub mod data;
pub mod error;
pub mod formats;
pub mod study;

pub use error::{CliError, Result};
pub use specsel_core as core;
