//! A small graph-pattern query language.
//!
//! ```text
//! MATCH (dosha:TRIDOSHA)-[:IS_INCREASED_BY]->(entity)
//! WHERE dosha.lemma = "कफ"
//! RETURN entity
//! ```
//!
//! Beyond single directed edges the language has undirected edges `-[..]-`,
//! type alternatives `[:A|B]`, bounded variable-length edges `[*min..max]`
//! (at most 3 hops, simple paths only, bound as a path) and field projections
//! in `RETURN`. Matching is homomorphic: distinct variables may bind the same
//! node. Rows are deduplicated and sorted.

mod ast;
mod eval;
mod parser;

pub use ast::*;
pub use eval::{evaluate, evaluate_with, Cell, Limits, ResultSet, Subgraph, DEFAULT_MATCH_BUDGET, DEFAULT_ROW_LIMIT};
pub use parser::parse;

use crate::ontology::OntologyError;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("variable {0} is not bound by any pattern")]
    UnboundVariable(String),
    #[error("hop range {min}..{max} at {position} is outside 0..{}", MAX_HOPS)]
    HopRange { min: u32, max: u32, position: usize },
    #[error("{0}")]
    VariableKind(String),
    #[error("query does not match the ontology: {0}")]
    OntologyMismatch(#[from] OntologyError),
}

/// Parses and evaluates in one step.
pub fn run(text: &str, graph: &crate::graph::Graph) -> Result<ResultSet, QueryError> {
    evaluate(&parse(text)?, graph)
}
