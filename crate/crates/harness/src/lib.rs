//! Orchestration and evaluation harness for voice-and-content anonymization
//! of long-form conversations.

pub mod anonymizer;
pub mod attacks;
pub mod cli;
pub mod backends;
pub mod config;
pub mod digest;
pub mod error;
pub mod evaluation;
pub mod manifest;
pub mod report;
pub mod run;

pub use error::{Error, Result};
