#![allow(dead_code)]

use std::path::{Path, PathBuf};

use wgd::snapshot;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn cleaning_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/cleaning")
        .join(name)
}

/// Builds a snapshot of `clean` in a fresh temp dir.
pub fn snapshot_of(clean: &Path) -> (tempfile::TempDir, snapshot::LoadedSnapshot) {
    let dir = tempfile::tempdir().unwrap();
    snapshot::build(clean, None, dir.path()).unwrap();
    let loaded = snapshot::load(dir.path()).unwrap();
    (dir, loaded)
}

/// Serves the API for `snap` on an ephemeral port; returns its base URL.
pub async fn serve(snap: &snapshot::LoadedSnapshot) -> String {
    let app = wgd::api::router(snap, None);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

/// Status and body text of a GET.
pub async fn get(client: &reqwest::Client, url: &str) -> (u16, String) {
    let resp = client.get(url).send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.text().await.unwrap())
}
