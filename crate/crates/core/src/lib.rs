//! Metagraph store, pattern matcher, SPO/DPO rewriting and an
//! equality-driven interpreter for a small MeTTa dialect.

pub mod enrich;
pub mod interp;
pub mod matcher;
pub mod rewrite;
pub mod space;
pub mod syntax;
pub mod types;

pub use space::{Edge, EdgeId, Enrichment, Expression, Label, Metagraph, RemovalPolicy, SpaceError};
pub use syntax::{parse, parse_all, ParseError, Reader};
