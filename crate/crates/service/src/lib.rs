//! HTTP API and command-line front end over `glossgraph-core`.
//!
//! Both front ends call into [`api::Service`], which returns JSON values, so
//! a CLI subcommand and the matching endpoint print the same bytes.

pub mod api;
pub mod auth;
pub mod config;
pub mod http;
pub mod jobs;
pub mod render;
pub mod storage;

pub use api::{Actor, ApiError, Service};
pub use auth::{Role, Users};
pub use config::{Config, ConfigError};
