//! On-disk state in the data directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use glossgraph_core::{fixtures, AnnotationError, AnnotationStore, Corpus, CorpusError, Graph, GraphError, Ontology};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const GRAPH_FILE: &str = "graph.json";
pub const LOG_FILE: &str = "annotations.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: CorpusError },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: GraphError },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: AnnotationError },
}

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

/// A store read back from disk.
pub struct Loaded {
    pub store: AnnotationStore,
    /// No corpus has been imported yet; the fixture lines stand in.
    pub fixture_corpus: bool,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn read(&self, name: &str) -> Result<Option<(PathBuf, String)>, StorageError> {
        let path = self.path(name);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some((path, text))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(StorageError::Io { path, source }),
        }
    }

    pub fn load(&self, ontology: Arc<Ontology>) -> Result<Loaded, StorageError> {
        let (corpus, fixture_corpus) = match self.read(CORPUS_FILE)? {
            Some((path, text)) => {
                let mut c = Corpus::new();
                c.import(&text).map_err(|source| StorageError::Corpus { path, source })?;
                (c, false)
            }
            None => (fixtures::corpus(), true),
        };
        let base = match self.read(GRAPH_FILE)? {
            Some((path, text)) => {
                Graph::import_json(ontology, &text).map_err(|source| StorageError::Graph { path, source })?
            }
            None => Graph::new(ontology),
        };
        let mut store = AnnotationStore::with_base(corpus, base);
        if let Some((path, text)) = self.read(LOG_FILE)? {
            store
                .import_log(&text)
                .map_err(|source| StorageError::Log { path, source })?;
        }
        Ok(Loaded { store, fixture_corpus })
    }

    /// Writes through a temporary file so a crash never leaves half a file.
    fn write(&self, name: &str, contents: &str) -> Result<(), StorageError> {
        let path = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        std::fs::write(&tmp, contents)
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|source| StorageError::Io { path, source })
    }

    pub fn save_log(&self, store: &AnnotationStore) -> Result<(), StorageError> {
        self.write(LOG_FILE, &store.export_log())
    }

    pub fn save_corpus(&self, corpus: &Corpus) -> Result<(), StorageError> {
        self.write(CORPUS_FILE, &corpus.export())
    }

    pub fn save_base(&self, base: &Graph) -> Result<(), StorageError> {
        self.write(GRAPH_FILE, &base.export_json())
    }
}
