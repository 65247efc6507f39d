//! Prosodic event detection from speech and prosody-aware coreference
//! resolution.

pub mod acoustic;
pub mod annotation;
mod binio;
pub mod cache;
pub mod coref;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod metrics;
pub mod wav;

pub use error::{Error, Result};
pub mod experiment;
pub mod synth;
