//! File formats, Monte-Carlo experiments and reports for robust dynamic
//! state estimation on IEEE test networks, built on [`dse_core`].

pub mod benchopt;
pub mod case;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod manifest;
pub mod report;
pub mod tune;

pub use error::{Error, ParseError, Result};
