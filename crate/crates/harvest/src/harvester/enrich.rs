use std::future::Future;

use futures::StreamExt;
use wgd_core::RawPersonRecord;

use crate::sparql::{
    fetch_creation_year, fetch_entity_gender_with, ClientError, Endpoint, DEFAULT_GENDER_TEMPLATE,
};

pub(crate) enum Lookup {
    /// No network call was needed.
    Skipped,
    Done,
    Failed(ClientError),
}

/// Tracks consecutive lookups that failed with exhausted retries.
#[derive(Debug, Default)]
pub(crate) struct FailureStreak {
    pub current: usize,
    pub total_failed: u64,
}

/// Records after one enrichment pass.
pub(crate) struct Enriched {
    pub records: Vec<RawPersonRecord>,
    /// Whether each record's lookup failed and left its value unchanged.
    pub failed: Vec<bool>,
    /// Start of the trailing run of records whose lookups exhausted their
    /// retries (possibly the start of an outage); `records.len()` if none.
    pub tail_start: usize,
}

/// Runs `lookup` over the records with at most `workers` in flight, keeping
/// input order. Stops early, returning `Err(streak)`, once `threshold`
/// consecutive lookups have exhausted their retries.
pub(crate) async fn enrich_with<F, Fut>(
    records: Vec<RawPersonRecord>,
    workers: usize,
    streak: &mut FailureStreak,
    threshold: Option<usize>,
    lookup: F,
) -> Result<Enriched, usize>
where
    F: Fn(RawPersonRecord) -> Fut,
    Fut: Future<Output = (RawPersonRecord, Lookup)>,
{
    let n = records.len();
    let mut results =
        futures::stream::iter(records.into_iter().map(lookup)).buffered(workers.max(1));
    let mut out = Enriched {
        records: Vec::with_capacity(n),
        failed: Vec::with_capacity(n),
        tail_start: 0,
    };
    while let Some((rec, outcome)) = results.next().await {
        let mut failed = false;
        match outcome {
            Lookup::Skipped => {}
            Lookup::Done => {
                streak.current = 0;
                out.tail_start = out.records.len() + 1;
            }
            Lookup::Failed(e) => {
                failed = true;
                streak.total_failed += 1;
                if e.is_retries_exhausted() {
                    streak.current += 1;
                } else {
                    streak.current = 0;
                    out.tail_start = out.records.len() + 1;
                }
                tracing::warn!(instance = %rec.instance, "lookup failed, leaving value unset: {e}");
                if threshold.is_some_and(|t| streak.current >= t) {
                    return Err(streak.current);
                }
            }
        }
        out.records.push(rec);
        out.failed.push(failed);
    }
    if streak.current == 0 {
        out.tail_start = out.records.len();
    }
    Ok(out)
}

pub(crate) async fn gender_lookup(
    endpoint: &Endpoint,
    template: &str,
    mut rec: RawPersonRecord,
) -> (RawPersonRecord, Lookup) {
    let Some(id) = rec.wikidata_id.clone() else {
        rec.gender = None;
        return (rec, Lookup::Skipped);
    };
    match fetch_entity_gender_with(endpoint, template, id.as_str()).await {
        Ok(g) => {
            rec.gender = g;
            (rec, Lookup::Done)
        }
        Err(ClientError::EntityNotFound(_)) => {
            rec.gender = None;
            (rec, Lookup::Done)
        }
        Err(e) => (rec, Lookup::Failed(e)),
    }
}

pub(crate) async fn year_lookup(
    endpoint: &Endpoint,
    mut rec: RawPersonRecord,
) -> (RawPersonRecord, Lookup) {
    match fetch_creation_year(endpoint, &rec.instance).await {
        Ok(y) => {
            rec.publication_year = y;
            (rec, Lookup::Done)
        }
        Err(e) => (rec, Lookup::Failed(e)),
    }
}

/// Sets each record's gender from its Wikidata entity. Records without an id
/// get no gender and cost no request; unknown entities get no gender; a
/// lookup that still fails after retries leaves the record's value as it was.
pub async fn enrich_gender(
    endpoint: &Endpoint,
    records: Vec<RawPersonRecord>,
    workers: usize,
) -> Vec<RawPersonRecord> {
    let mut streak = FailureStreak::default();
    enrich_with(records, workers, &mut streak, None, |r| {
        gender_lookup(endpoint, DEFAULT_GENDER_TEMPLATE, r)
    })
    .await
    .expect("no threshold, never stops early")
    .records
}

/// Sets each record's publication year from the first revision of the
/// article named by its instance. Missing articles get no year.
pub async fn enrich_publication_year(
    endpoint: &Endpoint,
    records: Vec<RawPersonRecord>,
    workers: usize,
) -> Vec<RawPersonRecord> {
    let mut streak = FailureStreak::default();
    enrich_with(records, workers, &mut streak, None, |r| {
        year_lookup(endpoint, r)
    })
    .await
    .expect("no threshold, never stops early")
    .records
}
