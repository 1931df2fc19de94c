//! Character-tagging Chinese word segmentation with linear-chain CRFs.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod coupled;
pub mod crf;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod pipelines;
pub mod synthetic;

pub use error::{Error, Result};
