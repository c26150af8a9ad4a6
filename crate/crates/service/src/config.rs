use std::path::{Path, PathBuf};

use glossgraph_core::ontology::load_ontology;
use glossgraph_core::Ontology;

pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const TEMPLATES_FILE: &str = "templates.json";
pub const USERS_FILE: &str = "users.json";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("ontology file {0} does not exist")]
    MissingOntology(PathBuf),
    #[error("users file {0} does not exist")]
    MissingUsers(PathBuf),
    #[error("no users file: set USERS_FILE or put {USERS_FILE} in the data directory")]
    NoUsers,
    #[error("data directory {path}: {source}")]
    DataDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(path: &Path, message: impl ToString) -> Self {
        ConfigError::Invalid {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

/// Where the service keeps its state and who may use it.
///
/// The data directory holds `corpus.jsonl`, `graph.json` (the imported base
/// graph) and `annotations.jsonl` (the annotation log), and optionally
/// `ontology.json`, `templates.json` and `users.json`. Missing state files
/// mean an empty graph over the bundled fixture corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub data_dir: PathBuf,
    pub ontology_file: Option<PathBuf>,
    pub users_file: Option<PathBuf>,
}

impl Config {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Config {
            data_dir: data_dir.into(),
            ontology_file: None,
            users_file: None,
        }
    }

    /// Creates the data directory if needed and checks every explicitly
    /// configured path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        std::fs::create_dir_all(&self.data_dir).map_err(|source| ConfigError::DataDir {
            path: self.data_dir.clone(),
            source,
        })?;
        if let Some(p) = &self.ontology_file {
            if !p.is_file() {
                return Err(ConfigError::MissingOntology(p.clone()));
            }
        }
        if let Some(p) = &self.users_file {
            if !p.is_file() {
                return Err(ConfigError::MissingUsers(p.clone()));
            }
        }
        Ok(())
    }

    /// The configured ontology, then `ontology.json` in the data directory,
    /// then the bundled one.
    pub fn ontology(&self) -> Result<Ontology, ConfigError> {
        let path = match &self.ontology_file {
            Some(p) if !p.is_file() => return Err(ConfigError::MissingOntology(p.clone())),
            Some(p) => p.clone(),
            None => {
                let p = self.data_dir.join(ONTOLOGY_FILE);
                if !p.is_file() {
                    return Ok(Ontology::shipped());
                }
                p
            }
        };
        let text = read(&path)?;
        load_ontology(&text).map_err(|e| ConfigError::invalid(&path, e))
    }

    pub fn users_path(&self) -> Result<PathBuf, ConfigError> {
        match &self.users_file {
            Some(p) if p.is_file() => Ok(p.clone()),
            Some(p) => Err(ConfigError::MissingUsers(p.clone())),
            None => {
                let p = self.data_dir.join(USERS_FILE);
                if p.is_file() {
                    Ok(p)
                } else {
                    Err(ConfigError::NoUsers)
                }
            }
        }
    }

    pub fn templates_path(&self) -> Option<PathBuf> {
        Some(self.data_dir.join(TEMPLATES_FILE)).filter(|p| p.is_file())
    }
}

pub(crate) fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::invalid(path, e))
}
