//! Cross-lingual POS tag projection and transformation-based bootstrapping
//! of tagged corpora.

pub mod align;
pub mod annotate;
pub mod bootstrap;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod pipeline;
mod par;
pub mod preprocess;
pub mod project;
pub mod projection;
pub mod synth;
pub mod tbl;

pub use error::{Error, Result};
