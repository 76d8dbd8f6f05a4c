//! Marked sparse random graphs, measures on rooted marked trees, and the
//! large-deviation rate functions of their local empirical measures.

pub mod empirical;
pub mod error;
pub mod ext;
pub mod gibbs;
pub mod graph;
pub mod io;
pub mod measure;
pub mod mtp;
pub mod rate;
pub mod rng;
pub mod samplers;
pub mod tree;

pub use error::{Error, Result};
pub use ext::ExtReal;
