//! Domain-relevance ranking of parallel corpora by bilingual cross-entropy
//! difference, and per-epoch training-data selection (static, weighted
//! sampling, gradual shrinking) with coverage and training-time diagnostics.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod ngram_lm;
pub mod scoring;
pub mod selection;
pub mod synthetic;

pub use error::{Error, Result};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
