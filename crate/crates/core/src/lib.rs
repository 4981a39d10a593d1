//! Toolkit for in-context image copy detection benchmarks.
//!
//! * [`patterns`]: catalog of seeded tamper patterns with a base/novel split.
//! * [`forge`]: training sets, evaluation sets and prompt pools with provenance.
//! * [`matcher`]: thumbnail descriptors, the `APDS` descriptor codec, exact
//!   cosine top-k search and prompt selection.
//! * [`metrics`]: micro average precision, recall@1 and pattern-retrieval accuracy.

pub mod cli;
pub mod error;
pub mod forge;
pub mod image;
pub mod matcher;
pub mod metrics;
pub mod patterns;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
pub use image::Image;
