//! Subclass-by-subclass collection of Person instances, per-instance
//! enrichment and checkpointed CSV export.

mod catalog;
mod checkpoint;
mod enrich;
mod queries;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wgd_core::RecordError;

use crate::sparql::{ClientError, Endpoint, DEFAULT_GENDER_TEMPLATE};

pub use catalog::{enumerate_subclasses, SubclassCatalog, DEFAULT_EXCLUDED};
pub use checkpoint::{HarvestCheckpoint, CHECKPOINT_VERSION};
pub use enrich::{enrich_gender, enrich_publication_year};
pub use queries::{parse_year, record_from_bindings, subclass_catalog_query, subclass_query};
pub use run::{harvest_subclass, run_harvest, HarvestOutcome, KillSwitch};

/// The three endpoints a harvest talks to.
#[derive(Debug, Clone)]
pub struct HarvestClients {
    pub dbpedia: Endpoint,
    pub wikidata: Endpoint,
    pub wikipedia: Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    /// Rows per subclass page; at most the DBpedia row limit.
    pub page_size: u32,
    /// Records enriched between checkpoint writes.
    pub enrichment_batch: usize,
    /// Concurrent lookups during enrichment.
    pub workers: usize,
    pub current_year: i32,
    pub gender_template: String,
    /// Consecutive lookups failing with exhausted retries that count as an
    /// endpoint outage and stop the run.
    pub outage_threshold: usize,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            page_size: 10_000,
            enrichment_batch: 100,
            workers: 4,
            current_year: 2024,
            gender_template: DEFAULT_GENDER_TEMPLATE.to_owned(),
            outage_threshold: 10,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarvestError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("checkpoint {path} cannot be resumed: {reason}")]
    CheckpointCorrupt { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Record {
        path: PathBuf,
        #[source]
        source: RecordError,
    },
    #[error("endpoint outage: {0}")]
    Outage(String),
    #[error("harvest interrupted")]
    Interrupted,
}

impl HarvestError {
    /// Transient failures after which the same command can simply be rerun.
    pub fn is_resumable(&self) -> bool {
        match self {
            HarvestError::Client(e) => e.is_retries_exhausted(),
            HarvestError::Outage(_) | HarvestError::Interrupted => true,
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarvestError::Io {
            path: path.into(),
            source,
        }
    }
}
