//! Identifier cross-check lookups used by the duplicate and age repair stages.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::QId;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("resolver disabled")]
    Disabled,
    #[error("lookup of {id} failed: {message}")]
    Unavailable { id: String, message: String },
}

/// Birth and death years reported for an entity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifeYears {
    pub birth: Option<i32>,
    pub death: Option<i32>,
}

/// Pure per-run lookups keyed by Wikidata id. `Ok(None)` means the entity is
/// unknown; `Err` means the lookup itself failed.
pub trait EntityResolver {
    fn lookup_name(&self, id: &QId) -> Result<Option<String>, ResolveError>;
    fn lookup_years(&self, id: &QId) -> Result<Option<LifeYears>, ResolveError>;
}

impl<T: EntityResolver + ?Sized> EntityResolver for &T {
    fn lookup_name(&self, id: &QId) -> Result<Option<String>, ResolveError> {
        (**self).lookup_name(id)
    }
    fn lookup_years(&self, id: &QId) -> Result<Option<LifeYears>, ResolveError> {
        (**self).lookup_years(id)
    }
}

/// Resolver mode `off`: every lookup fails, so stages fall back to their
/// conservative branch (ids nulled, unverifiable ages nulled).
#[derive(Debug, Default, Clone, Copy)]
pub struct DisabledResolver;

impl EntityResolver for DisabledResolver {
    fn lookup_name(&self, _id: &QId) -> Result<Option<String>, ResolveError> {
        Err(ResolveError::Disabled)
    }
    fn lookup_years(&self, _id: &QId) -> Result<Option<LifeYears>, ResolveError> {
        Err(ResolveError::Disabled)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death: Option<i32>,
    /// Simulates an endpoint failure for this id.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fail: bool,
}

/// In-memory resolver backed by a JSON map `{"Q1": {"name": .., "birth": .., "death": ..}}`.
#[derive(Debug, Clone, Default)]
pub struct FixtureResolver {
    entities: BTreeMap<QId, FixtureEntity>,
}

impl FixtureResolver {
    pub fn new(entities: BTreeMap<QId, FixtureEntity>) -> Self {
        FixtureResolver { entities }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(FixtureResolver::new(serde_json::from_str(text)?))
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn entities(&self) -> &BTreeMap<QId, FixtureEntity> {
        &self.entities
    }

    fn get(&self, id: &QId) -> Result<Option<&FixtureEntity>, ResolveError> {
        match self.entities.get(id) {
            Some(e) if e.fail => Err(ResolveError::Unavailable {
                id: id.to_string(),
                message: "scripted failure".into(),
            }),
            other => Ok(other),
        }
    }
}

impl EntityResolver for FixtureResolver {
    fn lookup_name(&self, id: &QId) -> Result<Option<String>, ResolveError> {
        Ok(self.get(id)?.and_then(|e| e.name.clone()))
    }

    fn lookup_years(&self, id: &QId) -> Result<Option<LifeYears>, ResolveError> {
        Ok(self.get(id)?.map(|e| LifeYears {
            birth: e.birth,
            death: e.death,
        }))
    }
}
