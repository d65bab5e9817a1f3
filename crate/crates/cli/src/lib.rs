//! Parser, reports and verification commands behind the `formdef` binary.

pub mod commands;
pub mod report;
pub mod syntax;

pub use report::{Report, Status};
