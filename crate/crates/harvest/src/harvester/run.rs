use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use wgd_core::record::{read_records, write_records, RecordWriter};
use wgd_core::RawPersonRecord;

use super::checkpoint::write_atomic;
use super::enrich::{enrich_with, gender_lookup, year_lookup, FailureStreak};
use super::queries::{record_from_bindings, subclass_query};
use super::{HarvestCheckpoint, HarvestClients, HarvestConfig, HarvestError, SubclassCatalog};
use crate::sparql::{ClientError, Endpoint, Pager};

/// Cooperative stop signal, checked at every durable step of a run (after
/// each staging append and after each checkpoint write).
///
/// `after(n)` lets exactly `n` steps complete and interrupts at the next one,
/// which is how tests simulate a crash at an arbitrary point.
#[derive(Debug, Clone)]
pub struct KillSwitch {
    inner: Arc<KillState>,
}

#[derive(Debug)]
struct KillState {
    budget: u64,
    ticks: AtomicU64,
    triggered: AtomicBool,
}

impl Default for KillSwitch {
    fn default() -> Self {
        Self::never()
    }
}

impl KillSwitch {
    pub fn never() -> Self {
        Self::after(u64::MAX)
    }

    pub fn after(steps: u64) -> Self {
        KillSwitch {
            inner: Arc::new(KillState {
                budget: steps,
                ticks: AtomicU64::new(0),
                triggered: AtomicBool::new(false),
            }),
        }
    }

    /// Interrupts the run at its next step (e.g. on Ctrl-C).
    pub fn trigger(&self) {
        self.inner.triggered.store(true, Ordering::SeqCst);
    }

    /// Steps completed so far.
    pub fn ticks(&self) -> u64 {
        self.inner.ticks.load(Ordering::SeqCst)
    }

    fn tick(&self) -> Result<(), HarvestError> {
        if self.inner.triggered.load(Ordering::SeqCst) {
            return Err(HarvestError::Interrupted);
        }
        let done = self.inner.ticks.load(Ordering::SeqCst);
        if done >= self.inner.budget {
            return Err(HarvestError::Interrupted);
        }
        self.inner.ticks.store(done + 1, Ordering::SeqCst);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestOutcome {
    /// One CSV per catalog subclass, in catalog order.
    pub files: Vec<PathBuf>,
    pub records: u64,
    pub checkpoint: HarvestCheckpoint,
}

fn rows_to_records(
    subclass: &str,
    rows: &[crate::sparql::Bindings],
    current_year: i32,
) -> Result<Vec<RawPersonRecord>, ClientError> {
    rows.iter()
        .map(|row| {
            record_from_bindings(subclass, row, current_year).ok_or_else(|| ClientError::Parse {
                offset: 0,
                message: "result row without ?person".into(),
            })
        })
        .collect()
}

/// Every record of one subclass (gender and publication year unset), read
/// through the pager so results are complete past the endpoint caps.
pub async fn harvest_subclass(
    endpoint: &Endpoint,
    subclass: &str,
    page_size: u32,
    current_year: i32,
) -> Result<Vec<RawPersonRecord>, ClientError> {
    let mut pager = Pager::new(endpoint.clone(), subclass_query(subclass), page_size)?;
    let mut out = Vec::new();
    while let Some(page) = pager.next_page().await {
        out.extend(rows_to_records(subclass, &page?.rows, current_year)?);
    }
    Ok(out)
}

fn read_staged(path: &Path) -> Result<Vec<RawPersonRecord>, HarvestError> {
    match fs::File::open(path) {
        Ok(f) => read_records(std::io::BufReader::new(f)).map_err(|source| HarvestError::Record {
            path: path.to_owned(),
            source,
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(HarvestError::io(path, e)),
    }
}

fn encode(path: &Path, records: &[RawPersonRecord], header: bool) -> Result<Vec<u8>, HarvestError> {
    let wrap = |source| HarvestError::Record {
        path: path.to_owned(),
        source,
    };
    if header {
        return write_records(Vec::new(), records).map_err(wrap);
    }
    let mut w = RecordWriter::without_header(Vec::new());
    for r in records {
        w.write(r).map_err(wrap)?;
    }
    w.into_inner().map_err(wrap)
}

fn append_staged(path: &Path, records: &[RawPersonRecord]) -> Result<(), HarvestError> {
    let fresh = !path.exists();
    let bytes = encode(path, records, fresh)?;
    let result = (|| {
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        f.write_all(&bytes)?;
        f.sync_all()
    })();
    result.map_err(|e| HarvestError::io(path, e))
}

/// Drops anything appended after the last checkpoint write.
fn truncate_staged(path: &Path, keep: u64, checkpoint: &Path) -> Result<(), HarvestError> {
    let records = read_staged(path)?;
    let keep = keep as usize;
    if records.len() < keep {
        return Err(HarvestError::CheckpointCorrupt {
            path: checkpoint.to_owned(),
            reason: format!(
                "{} holds {} records but the checkpoint expects {keep}",
                path.display(),
                records.len()
            ),
        });
    }
    if records.len() > keep || (keep == 0 && path.exists()) {
        tracing::info!(path = %path.display(), discarded = records.len() - keep, "rolling back staged rows");
        write_atomic(path, &encode(path, &records[..keep], true)?)?;
    }
    Ok(())
}

fn outage(endpoint: &Endpoint, failures: usize) -> HarvestError {
    HarvestError::Outage(format!(
        "{failures} consecutive lookups against {} failed after retries",
        endpoint.config().base_url
    ))
}

/// Harvests every catalog subclass, enriches the records and writes one CSV
/// per subclass into `out_dir`.
///
/// Progress is checkpointed after every page and every enrichment batch.
/// Re-running with the same checkpoint path continues where the previous run
/// stopped and produces the same files an uninterrupted run would.
pub async fn run_harvest(
    clients: &HarvestClients,
    catalog: &SubclassCatalog,
    checkpoint_path: &Path,
    out_dir: &Path,
    config: &HarvestConfig,
    kill: &KillSwitch,
) -> Result<HarvestOutcome, HarvestError> {
    let row_limit = clients.dbpedia.config().row_limit;
    if config.page_size == 0 || config.page_size > row_limit {
        return Err(ClientError::InvalidConfig(format!(
            "page size {} must be in 1..={row_limit}",
            config.page_size
        ))
        .into());
    }
    let corrupt = |reason: String| HarvestError::CheckpointCorrupt {
        path: checkpoint_path.to_owned(),
        reason,
    };
    let staging = out_dir.join(".staging");
    let harvested_dir = staging.join("harvested");
    let enriched_path = staging.join("enriched.csv");
    let files: Vec<PathBuf> = catalog
        .subclasses
        .iter()
        .map(|s| out_dir.join(format!("{s}.csv")))
        .collect();

    let mut cp = match HarvestCheckpoint::load(checkpoint_path)? {
        Some(cp) => {
            if cp.catalog != catalog.subclasses {
                return Err(corrupt("catalog differs from the one being resumed".into()));
            }
            if cp.page_size != config.page_size {
                return Err(corrupt(format!(
                    "page size {} differs from checkpointed {}",
                    config.page_size, cp.page_size
                )));
            }
            cp
        }
        None => {
            if staging.exists() {
                fs::remove_dir_all(&staging).map_err(|e| HarvestError::io(&staging, e))?;
            }
            fs::create_dir_all(out_dir).map_err(|e| HarvestError::io(out_dir, e))?;
            let mut cp = HarvestCheckpoint::new(catalog.subclasses.clone(), config.page_size);
            cp.save(checkpoint_path)?;
            cp
        }
    };
    if cp.finished {
        tracing::info!("checkpoint marks the harvest finished; nothing to do");
        let records = files
            .iter()
            .map(|f| read_staged(f).map(|r| r.len() as u64))
            .sum::<Result<u64, _>>()?;
        return Ok(HarvestOutcome {
            files,
            records,
            checkpoint: cp,
        });
    }
    fs::create_dir_all(&harvested_dir).map_err(|e| HarvestError::io(&harvested_dir, e))?;

    for sub in &catalog.subclasses {
        if cp.completed_subclasses.contains(sub) {
            continue;
        }
        let path = harvested_dir.join(format!("{sub}.csv"));
        let cursor = cp.subclass_cursor.get(sub).cloned().unwrap_or_default();
        truncate_staged(&path, cursor.offset, checkpoint_path)?;
        tracing::info!(subclass = %sub, offset = cursor.offset, "harvesting");
        let mut pager = Pager::resume(
            clients.dbpedia.clone(),
            subclass_query(sub),
            config.page_size,
            cursor,
        )?;
        while let Some(page) = pager.next_page().await {
            let page = page?;
            let records = rows_to_records(sub, &page.rows, config.current_year)?;
            append_staged(&path, &records)?;
            kill.tick()?;
            if page.is_last {
                cp.subclass_cursor.remove(sub);
                cp.completed_subclasses.insert(sub.clone());
            } else {
                cp.subclass_cursor
                    .insert(sub.clone(), pager.cursor().clone());
            }
            cp.save(checkpoint_path)?;
            kill.tick()?;
        }
    }

    let mut all = Vec::new();
    for sub in &catalog.subclasses {
        all.extend(read_staged(&harvested_dir.join(format!("{sub}.csv")))?);
    }
    let start = cp.enrichment_cursor as usize;
    if start > all.len() {
        return Err(corrupt(format!(
            "enrichment cursor {start} is past the {} harvested records",
            all.len()
        )));
    }
    truncate_staged(&enriched_path, cp.enrichment_cursor, checkpoint_path)?;
    let mut gender_streak = FailureStreak::default();
    let mut year_streak = FailureStreak::default();
    let batch = config.enrichment_batch.max(1);
    let mut next = start;
    while next < all.len() {
        let chunk = &all[next..(next + batch).min(all.len())];
        let is_final = next + chunk.len() == all.len();
        let genders = enrich_with(
            chunk.to_vec(),
            config.workers,
            &mut gender_streak,
            Some(config.outage_threshold),
            |r| gender_lookup(&clients.wikidata, &config.gender_template, r),
        )
        .await
        .map_err(|n| outage(&clients.wikidata, n))?;
        let years = enrich_with(
            genders.records,
            config.workers,
            &mut year_streak,
            Some(config.outage_threshold),
            |r| year_lookup(&clients.wikipedia, r),
        )
        .await
        .map_err(|n| outage(&clients.wikipedia, n))?;
        // Failures at the end of a batch may be the start of an outage, so
        // they are retried with the next batch instead of being committed.
        let commit = if is_final {
            chunk.len()
        } else {
            genders.tail_start.min(years.tail_start)
        };
        if commit == 0 {
            continue;
        }
        let failed = (0..commit)
            .map(|i| u64::from(genders.failed[i]) + u64::from(years.failed[i]))
            .sum::<u64>();
        append_staged(&enriched_path, &years.records[..commit])?;
        kill.tick()?;
        next += commit;
        cp.enrichment_cursor = next as u64;
        cp.failed_lookups += failed;
        cp.save(checkpoint_path)?;
        tracing::info!(enriched = next, total = all.len(), "enrichment progress");
        kill.tick()?;
    }

    let enriched = read_staged(&enriched_path)?;
    if enriched.len() != all.len() {
        return Err(corrupt(format!(
            "{} enriched records for {} harvested",
            enriched.len(),
            all.len()
        )));
    }
    for (sub, file) in catalog.subclasses.iter().zip(&files) {
        let rows: Vec<RawPersonRecord> = enriched
            .iter()
            .filter(|r| &r.subclass == sub)
            .cloned()
            .collect();
        write_atomic(file, &encode(file, &rows, true)?)?;
        kill.tick()?;
    }
    cp.finished = true;
    cp.save(checkpoint_path)?;
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| HarvestError::io(&staging, e))?;
    }
    Ok(HarvestOutcome {
        files,
        records: enriched.len() as u64,
        checkpoint: cp,
    })
}
