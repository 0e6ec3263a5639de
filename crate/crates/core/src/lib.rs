//! Entity-chain content planning for abstractive summarization.

pub mod annotate;
pub mod chain;
pub mod control;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod pretrain;
pub mod record;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
