use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use super::HarvestError;
use crate::sparql::PageCursor;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Resumable harvest state, persisted as one JSON document that is replaced
/// atomically (write to a temp file, fsync, rename).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestCheckpoint {
    pub version: u32,
    pub page_size: u32,
    /// The catalog being harvested, in order.
    pub catalog: Vec<String>,
    /// Position within each started, unfinished subclass.
    pub subclass_cursor: BTreeMap<String, PageCursor>,
    pub completed_subclasses: BTreeSet<String>,
    /// Index into the concatenated harvested records of the next record
    /// awaiting enrichment.
    pub enrichment_cursor: u64,
    /// Lookups that still failed after retries and were left unset.
    pub failed_lookups: u64,
    pub finished: bool,
    #[serde(with = "utc_seconds")]
    pub last_write_utc: DateTime<Utc>,
}

mod utc_seconds {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

impl HarvestCheckpoint {
    pub fn new(catalog: Vec<String>, page_size: u32) -> Self {
        HarvestCheckpoint {
            version: CHECKPOINT_VERSION,
            page_size,
            catalog,
            subclass_cursor: BTreeMap::new(),
            completed_subclasses: BTreeSet::new(),
            enrichment_cursor: 0,
            failed_lookups: 0,
            finished: false,
            last_write_utc: Utc::now().trunc_subsecs(0),
        }
    }

    pub fn harvest_complete(&self) -> bool {
        self.completed_subclasses.len() == self.catalog.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != CHECKPOINT_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        if self.page_size == 0 {
            return Err("page_size is zero".into());
        }
        let known: BTreeSet<&String> = self.catalog.iter().collect();
        if known.len() != self.catalog.len() {
            return Err("catalog lists a subclass twice".into());
        }
        for (sub, cursor) in &self.subclass_cursor {
            if !known.contains(sub) {
                return Err(format!("cursor for unknown subclass {sub:?}"));
            }
            if self.completed_subclasses.contains(sub) {
                return Err(format!("{sub:?} is both completed and in progress"));
            }
            if cursor.offset % u64::from(self.page_size) != 0 {
                return Err(format!(
                    "offset {} for {sub:?} is not a multiple of the page size {}",
                    cursor.offset, self.page_size
                ));
            }
        }
        if let Some(sub) = self
            .completed_subclasses
            .iter()
            .find(|s| !known.contains(s))
        {
            return Err(format!("completed subclass {sub:?} is not in the catalog"));
        }
        if self.enrichment_cursor > 0 && !self.harvest_complete() {
            return Err("enrichment started before every subclass was harvested".into());
        }
        if self.finished && (!self.harvest_complete() || !self.subclass_cursor.is_empty()) {
            return Err("marked finished with subclasses outstanding".into());
        }
        Ok(())
    }

    /// `Ok(None)` if there is no checkpoint at `path`.
    pub fn load(path: &Path) -> Result<Option<Self>, HarvestError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(HarvestError::io(path, e)),
        };
        let corrupt = |reason: String| HarvestError::CheckpointCorrupt {
            path: path.to_owned(),
            reason,
        };
        let cp: HarvestCheckpoint =
            serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        cp.validate().map_err(corrupt)?;
        Ok(Some(cp))
    }

    pub fn save(&mut self, path: &Path) -> Result<(), HarvestError> {
        debug_assert!(self.validate().is_ok(), "{:?}", self.validate());
        self.last_write_utc = Utc::now().trunc_subsecs(0);
        let mut text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Writes `bytes` to a sibling temp file, syncs it, and renames it over `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarvestError> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| HarvestError::io(path, e))
}
