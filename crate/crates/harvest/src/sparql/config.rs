use std::time::Duration;

use serde::{Deserialize, Serialize};
use url::Url;

use super::ClientError;

pub const ENV_DBPEDIA: &str = "WGD_DBPEDIA_ENDPOINT";
pub const ENV_WIKIDATA: &str = "WGD_WIKIDATA_ENDPOINT";
pub const ENV_WIKIPEDIA: &str = "WGD_WIKIPEDIA_API";

pub const PUBLIC_DBPEDIA: &str = "https://dbpedia.org/sparql";
pub const PUBLIC_WIKIDATA: &str = "https://query.wikidata.org/sparql";
pub const PUBLIC_WIKIPEDIA: &str = "https://en.wikipedia.org/w/api.php";

pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EndpointKind {
    DbpediaLike,
    WikidataLike,
    WikiRest,
}

/// Header values sent with every request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub user_agent: String,
    pub accept: String,
    /// Client-side timeout. Kept above any server runtime cap so the server's
    /// own limit fires first.
    pub timeout_ms: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            user_agent: format!(
                "wgd-harvest/{} (bulk Person metadata harvest)",
                env!("CARGO_PKG_VERSION")
            ),
            accept: SPARQL_RESULTS_JSON.to_owned(),
            timeout_ms: 90_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: Url,
    pub kind: EndpointKind,
    /// Maximum rows the endpoint returns per response.
    pub row_limit: u32,
    /// Largest `OFFSET + LIMIT` the endpoint will sort.
    pub sort_cap: Option<u32>,
    pub runtime_cap_seconds: Option<u32>,
    pub min_request_interval_ms: u64,
    /// Requests allowed in flight at once against this endpoint.
    pub max_in_flight: usize,
    pub transport: TransportConfig,
}

impl EndpointConfig {
    pub fn new(base_url: Url, kind: EndpointKind) -> Self {
        let (row_limit, sort_cap, runtime_cap_seconds, accept) = match kind {
            EndpointKind::DbpediaLike => (10_000, Some(40_000), None, SPARQL_RESULTS_JSON),
            EndpointKind::WikidataLike => (100_000, None, Some(60), SPARQL_RESULTS_JSON),
            EndpointKind::WikiRest => (1, None, None, "application/json"),
        };
        EndpointConfig {
            base_url,
            kind,
            row_limit,
            sort_cap,
            runtime_cap_seconds,
            min_request_interval_ms: 100,
            max_in_flight: 4,
            transport: TransportConfig {
                accept: accept.to_owned(),
                ..TransportConfig::default()
            },
        }
    }

    pub fn dbpedia(url: &str) -> Result<Self, ClientError> {
        Self::parse(url, EndpointKind::DbpediaLike)
    }

    pub fn wikidata(url: &str) -> Result<Self, ClientError> {
        Self::parse(url, EndpointKind::WikidataLike)
    }

    pub fn wikipedia(url: &str) -> Result<Self, ClientError> {
        Self::parse(url, EndpointKind::WikiRest)
    }

    fn parse(url: &str, kind: EndpointKind) -> Result<Self, ClientError> {
        let base =
            Url::parse(url).map_err(|e| ClientError::InvalidConfig(format!("{url:?}: {e}")))?;
        let cfg = Self::new(base, kind);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.row_limit == 0 {
            return Err(ClientError::InvalidConfig(
                "row_limit must be at least 1".into(),
            ));
        }
        if self.sort_cap.is_some_and(|cap| cap < self.row_limit) {
            return Err(ClientError::InvalidConfig(
                "sort_cap must be >= row_limit".into(),
            ));
        }
        if self.max_in_flight == 0 {
            return Err(ClientError::InvalidConfig(
                "max_in_flight must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.transport.timeout_ms)
    }

    pub fn min_interval(&self) -> Duration {
        Duration::from_millis(self.min_request_interval_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn public_defaults_are_valid() {
        let db = EndpointConfig::dbpedia(PUBLIC_DBPEDIA).unwrap();
        assert_eq!((db.row_limit, db.sort_cap), (10_000, Some(40_000)));
        let wd = EndpointConfig::wikidata(PUBLIC_WIKIDATA).unwrap();
        assert_eq!(wd.runtime_cap_seconds, Some(60));
        assert!(wd.timeout() > Duration::from_secs(60));
        assert!(EndpointConfig::wikipedia("not a url").is_err());
    }

    #[test]
    fn cap_below_row_limit_rejected() {
        let mut cfg = EndpointConfig::dbpedia(PUBLIC_DBPEDIA).unwrap();
        cfg.sort_cap = Some(10);
        assert!(cfg.validate().is_err());
        cfg.sort_cap = None;
        cfg.row_limit = 0;
        assert!(cfg.validate().is_err());
    }
}
