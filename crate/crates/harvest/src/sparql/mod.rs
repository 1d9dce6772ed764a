//! Client layer for SPARQL SELECT endpoints and the MediaWiki action API.

mod client;
mod config;
mod limiter;
mod paging;
mod parse;
mod retry;
mod wiki;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use client::{Endpoint, SelectPage};
pub use config::{
    EndpointConfig, EndpointKind, TransportConfig, ENV_DBPEDIA, ENV_WIKIDATA, ENV_WIKIPEDIA,
    PUBLIC_DBPEDIA, PUBLIC_WIKIDATA, PUBLIC_WIKIPEDIA, SPARQL_RESULTS_JSON,
};
pub use limiter::RateLimiter;
pub use paging::{PageCursor, PagedQuery, Pager, KEY_FILTER_SLOT};
pub use parse::{encode_select_results, parse_select_results, Bindings};
pub use retry::RetryPolicy;
pub use wiki::{
    api_title, entity_gender_query, fetch_creation_year, fetch_entity_gender,
    fetch_entity_gender_with, DEFAULT_GENDER_TEMPLATE,
};

/// Transient failure classes a [`RetryPolicy`] may retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorClass {
    Timeout,
    RateLimited,
    ServerError,
    Network,
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::Timeout => "timeout",
            ErrorClass::RateLimited => "rate limited",
            ErrorClass::ServerError => "server error",
            ErrorClass::Network => "network error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The endpoint rejected the request itself; retrying cannot help.
    #[error("query rejected by endpoint (HTTP {status}): {message}")]
    NonRetryableQuery { status: u16, message: String },
    #[error("gave up after {attempts} attempts, last failure: {last_class}: {last_message}")]
    RetriesExhausted {
        attempts: u32,
        last_class: ErrorClass,
        last_message: String,
    },
    #[error("malformed response at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("cannot page past the sort cap: {0}")]
    CapStrategy(String),
    #[error("entity {0} not found")]
    EntityNotFound(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid endpoint configuration: {0}")]
    InvalidConfig(String),
}

impl ClientError {
    pub fn is_retries_exhausted(&self) -> bool {
        matches!(self, ClientError::RetriesExhausted { .. })
    }
}
