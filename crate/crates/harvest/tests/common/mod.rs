#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use wgd_harvest::harvester::{HarvestClients, HarvestConfig};
use wgd_harvest::sparql::{Endpoint, EndpointConfig, RetryPolicy};
use wgd_testkit::mock::MockServer;
use wgd_testkit::world::FixtureWorld;

pub struct WorldServers {
    pub dbpedia: MockServer,
    pub wikidata: MockServer,
    pub wiki: MockServer,
}

/// Mock endpoints for a world. The DBpedia mock has a tiny row limit and
/// sort cap so a harvest crosses from OFFSET paging into keyed paging.
pub async fn serve(world: FixtureWorld, row_limit: u32, sort_cap: u32) -> WorldServers {
    let world = Arc::new(world);
    WorldServers {
        dbpedia: MockServer::sparql(
            world.dbpedia_responder(),
            row_limit as usize,
            Some(u64::from(sort_cap)),
        )
        .await,
        wikidata: MockServer::sparql(world.wikidata_responder(), 100_000, None).await,
        wiki: MockServer::wiki(world.articles.clone()).await,
    }
}

pub fn retry() -> RetryPolicy {
    RetryPolicy::fixed(3, 5, 2.0)
}

pub fn clients(s: &WorldServers, row_limit: u32, sort_cap: u32) -> HarvestClients {
    let mut db = EndpointConfig::dbpedia(&s.dbpedia.url()).unwrap();
    db.row_limit = row_limit;
    db.sort_cap = Some(sort_cap);
    db.min_request_interval_ms = 0;
    let mut wd = EndpointConfig::wikidata(&s.wikidata.url()).unwrap();
    wd.min_request_interval_ms = 0;
    let mut wp = EndpointConfig::wikipedia(&s.wiki.url()).unwrap();
    wp.min_request_interval_ms = 0;
    HarvestClients {
        dbpedia: Endpoint::new(db, retry()).unwrap(),
        wikidata: Endpoint::new(wd, retry()).unwrap(),
        wikipedia: Endpoint::new(wp, retry()).unwrap(),
    }
}

pub fn small_config() -> HarvestConfig {
    HarvestConfig {
        page_size: 4,
        enrichment_batch: 8,
        outage_threshold: 3,
        ..HarvestConfig::default()
    }
}

/// Name and bytes of every file directly inside `dir` (hidden files included).
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

pub fn golden() -> Vec<(String, Vec<u8>)> {
    snapshot(&wgd_testkit::world_dir().join("golden"))
}
