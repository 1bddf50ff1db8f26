//! Faceted commonsense knowledge base construction.

pub mod consolidation;
pub mod discovery;
pub mod embedding;
pub mod error;
pub mod facets;
pub mod hac;
pub mod kb_io;
pub mod lexicon;
pub mod model;
pub mod oie;
pub mod parse;
pub mod pipeline;
pub mod query;
pub mod records;
pub mod scorer;
pub mod subjects;
pub mod text;

pub use error::{Error, Result};
