//! Shared test support: reference oracles, seeded dataset generators, and
//! local fixture servers that mimic the public endpoints.

use std::path::PathBuf;

pub mod gen;
pub mod mock;
pub mod oracle;
pub mod world;

/// Directory holding the bundled world and its golden harvest CSVs.
pub fn world_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("world")
}
