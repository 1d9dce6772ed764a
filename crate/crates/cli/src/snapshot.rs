//! Immutable, hash-pinned dataset snapshots: the clean records, the cube
//! built from them and the cleaning report, plus a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wgd_core::aggregator::{AggregateError, Cube};
use wgd_core::cleaner::CleaningReport;
use wgd_core::record::read_clean_records;
use wgd_core::RecordError;

pub const MANIFEST: &str = "snapshot.json";
const CLEAN_FILE: &str = "clean.csv";
const CUBE_CSV_FILE: &str = "cube.csv";
const CUBE_JSON_FILE: &str = "cube.json";
const REPORT_FILE: &str = "report.json";

/// Manifest of a snapshot directory. Paths are relative to the directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSnapshot {
    pub clean_records: String,
    pub cube_csv: String,
    pub cube_json: String,
    pub cleaning_report: Option<String>,
    pub built_utc: String,
    /// `sha256:` followed by the hex digest of every listed file.
    pub content_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Records {
        path: PathBuf,
        #[source]
        source: RecordError,
    },
    #[error("{path}: not a cleaning report: {message}")]
    Report { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Cube(#[from] AggregateError),
    #[error("snapshot content hash mismatch: manifest says {expected}, files hash to {found}")]
    HashMismatch { expected: String, found: String },
    #[error("snapshot cube does not match its clean records")]
    Inconsistent,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        path: path.to_owned(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, SnapshotError> {
    fs::read(path).map_err(io(path))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SnapshotError> {
    fs::write(path, bytes).map_err(io(path))
}

fn content_hash(parts: &[(&str, &[u8])]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in parts {
        h.update(name.as_bytes());
        h.update(b"\n");
        h.update(bytes.len().to_string().as_bytes());
        h.update(b"\n");
        h.update(bytes);
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

fn parse_records(path: &Path, bytes: &[u8]) -> Result<Cube, SnapshotError> {
    let records = read_clean_records(bytes).map_err(|source| SnapshotError::Records {
        path: path.to_owned(),
        source,
    })?;
    Ok(Cube::build(&records))
}

/// Builds the cube from a clean CSV and writes a snapshot into `out_dir`.
pub fn build(
    clean: &Path,
    report: Option<&Path>,
    out_dir: &Path,
) -> Result<(DatasetSnapshot, Cube), SnapshotError> {
    let clean_bytes = read(clean)?;
    let cube = parse_records(clean, &clean_bytes)?;
    let report_bytes = match report {
        Some(path) => {
            let bytes = read(path)?;
            serde_json::from_slice::<CleaningReport>(&bytes).map_err(|e| {
                SnapshotError::Report {
                    path: path.to_owned(),
                    message: e.to_string(),
                }
            })?;
            Some(bytes)
        }
        None => None,
    };
    let cube_csv = cube.write_csv(Vec::new())?;
    let cube_json = cube.to_json().into_bytes();

    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    write(&out_dir.join(CLEAN_FILE), &clean_bytes)?;
    write(&out_dir.join(CUBE_CSV_FILE), &cube_csv)?;
    write(&out_dir.join(CUBE_JSON_FILE), &cube_json)?;
    let mut parts: Vec<(&str, &[u8])> = vec![
        (CLEAN_FILE, &clean_bytes),
        (CUBE_CSV_FILE, &cube_csv),
        (CUBE_JSON_FILE, &cube_json),
    ];
    if let Some(bytes) = &report_bytes {
        write(&out_dir.join(REPORT_FILE), bytes)?;
        parts.push((REPORT_FILE, bytes));
    }
    let manifest = DatasetSnapshot {
        clean_records: CLEAN_FILE.into(),
        cube_csv: CUBE_CSV_FILE.into(),
        cube_json: CUBE_JSON_FILE.into(),
        cleaning_report: report_bytes.as_ref().map(|_| REPORT_FILE.into()),
        built_utc: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        content_hash: content_hash(&parts),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(&out_dir.join(MANIFEST), text.as_bytes())?;
    Ok((manifest, cube))
}

/// A verified snapshot, ready to serve.
#[derive(Debug, Clone)]
pub struct LoadedSnapshot {
    pub dir: PathBuf,
    pub manifest: DatasetSnapshot,
    pub cube: Cube,
}

/// Loads and verifies a snapshot from its directory or manifest path.
///
/// Fails if any file's content no longer matches the manifest hash, or if
/// the stored cube is not the one the clean records produce.
pub fn load(path: &Path) -> Result<LoadedSnapshot, SnapshotError> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_owned(), path.join(MANIFEST))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_owned(),
            path.to_owned(),
        )
    };
    let manifest: DatasetSnapshot =
        serde_json::from_slice(&read(&manifest_path)?).map_err(|e| SnapshotError::Manifest {
            path: manifest_path.clone(),
            message: e.to_string(),
        })?;

    let clean_path = dir.join(&manifest.clean_records);
    let clean = read(&clean_path)?;
    let cube_csv = read(&dir.join(&manifest.cube_csv))?;
    let cube_json = read(&dir.join(&manifest.cube_json))?;
    let report = match &manifest.cleaning_report {
        Some(name) => Some(read(&dir.join(name))?),
        None => None,
    };
    let mut parts: Vec<(&str, &[u8])> = vec![
        (manifest.clean_records.as_str(), &clean),
        (manifest.cube_csv.as_str(), &cube_csv),
        (manifest.cube_json.as_str(), &cube_json),
    ];
    if let (Some(name), Some(bytes)) = (&manifest.cleaning_report, &report) {
        parts.push((name.as_str(), bytes));
    }
    let found = content_hash(&parts);
    if found != manifest.content_hash {
        return Err(SnapshotError::HashMismatch {
            expected: manifest.content_hash.clone(),
            found,
        });
    }

    let cube = Cube::from_json(&String::from_utf8_lossy(&cube_json))?;
    if parse_records(&clean_path, &clean)? != cube || cube.write_csv(Vec::new())? != cube_csv {
        return Err(SnapshotError::Inconsistent);
    }
    Ok(LoadedSnapshot {
        dir,
        manifest,
        cube,
    })
}
