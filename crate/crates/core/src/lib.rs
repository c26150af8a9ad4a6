//! Knowledge-graph construction and querying over annotated Sanskrit text.
//!
//! The pieces, bottom-up: a closed [`ontology`] of entity and relation types,
//! a line-structured [`corpus`], an in-memory property [`graph`], an
//! event-sourced [`annotation`] log that materializes the graph, the
//! [`curation`] passes that clean it up, a small pattern [`query`] language,
//! bilingual question [`templates`], and multi-scheme [`transliteration`] for
//! autocomplete.

pub mod annotation;
pub mod corpus;
pub mod curation;
pub mod fixtures;
pub mod graph;
pub mod ontology;
pub mod query;
pub mod templates;
pub mod transliteration;

pub use annotation::{AnnotationError, AnnotationStore, NewEntity, NewRelation};
pub use corpus::{Corpus, CorpusError, Line, LineId};
pub use graph::{Direction, EdgeId, Graph, GraphError, GraphStats, NodeId};
pub use ontology::{Ontology, OntologyError};
pub use query::{QueryError, ResultSet};
pub use templates::{TemplateCatalog, TemplateError};
pub use transliteration::{Scheme, TransliterationIndex};
