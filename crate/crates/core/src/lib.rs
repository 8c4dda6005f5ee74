//! Separability checks for bipartite density matrices.

pub mod cli;
pub mod decomp;
pub mod error;
pub mod matkit;
pub mod sepcrit;
pub mod statefab;

pub use error::{Error, Result};
