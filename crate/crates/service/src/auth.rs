//! Static bearer-token users.
//!
//! The users file is a JSON array:
//!
//! ```json
//! [{"name": "asha", "token": "s3cret", "role": "annotator"}]
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{read, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Annotator,
    Curator,
    Querier,
    Admin,
}

impl Role {
    pub fn can_annotate(self) -> bool {
        matches!(self, Role::Annotator | Role::Curator | Role::Admin)
    }

    pub fn can_curate(self) -> bool {
        matches!(self, Role::Curator | Role::Admin)
    }

    /// Importing whole files replaces or extends shared state wholesale.
    pub fn can_import(self) -> bool {
        self == Role::Admin
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Annotator => "annotator",
            Role::Curator => "curator",
            Role::Querier => "querier",
            Role::Admin => "admin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub name: String,
    pub token: String,
    pub role: Role,
}

#[derive(Debug, Clone, Default)]
pub struct Users {
    by_token: HashMap<String, User>,
}

impl Users {
    pub fn new(users: Vec<User>) -> Result<Self, String> {
        let mut by_token = HashMap::new();
        for u in users {
            if u.name.trim().is_empty() || u.token.trim().is_empty() {
                return Err("users need a non-empty name and token".into());
            }
            if let Some(prev) = by_token.insert(u.token.clone(), u) {
                return Err(format!("token of {:?} is not unique", prev.name));
            }
        }
        Ok(Users { by_token })
    }

    pub fn parse(source: &str) -> Result<Self, String> {
        let users: Vec<User> = serde_json::from_str(source).map_err(|e| e.to_string())?;
        Users::new(users)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Users::parse(&read(path)?).map_err(|e| ConfigError::invalid(path, e))
    }

    pub fn authenticate(&self, token: &str) -> Option<&User> {
        self.by_token.get(token)
    }

    /// The user named by an `Authorization: Bearer ...` header value.
    pub fn from_header(&self, header: &str) -> Option<&User> {
        let (scheme, token) = header.trim().split_once(' ')?;
        if !scheme.eq_ignore_ascii_case("bearer") {
            return None;
        }
        self.authenticate(token.trim())
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }
}
