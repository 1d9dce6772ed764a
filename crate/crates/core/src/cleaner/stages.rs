use std::collections::{BTreeSet, HashMap, HashSet};

use regex::Regex;
use std::sync::OnceLock;
use unicode_normalization::UnicodeNormalization;

use super::age::compute_age;
use super::report::{Stage, StageReport};
use super::resolver::EntityResolver;
use crate::record::{QId, RawPersonRecord};

type StageOutput = (Vec<RawPersonRecord>, StageReport);

fn report(stage: Stage, rows_in: usize, rows_out: usize, rows_modified: usize) -> StageReport {
    StageReport {
        stage,
        rows_in,
        rows_out,
        rows_modified,
        rows_dropped: rows_in - rows_out,
    }
}

/// Collapses rows sharing (instance, wikiDataID, subclass) to their first
/// occurrence. A null id never equals another null id, so rows whose id a
/// later stage nulled are not merged when the pipeline is re-run.
pub fn drop_duplicate_combinations(records: Vec<RawPersonRecord>) -> StageOutput {
    let rows_in = records.len();
    let mut seen: HashSet<(String, QId, String)> = HashSet::new();
    let out: Vec<_> = records
        .into_iter()
        .filter(|r| match &r.wikidata_id {
            None => true,
            Some(id) => seen.insert((r.instance.clone(), id.clone(), r.subclass.clone())),
        })
        .collect();
    let rows_out = out.len();
    (
        out,
        report(Stage::DropDuplicateCombinations, rows_in, rows_out, 0),
    )
}

/// NFC normalization with underscores folded to spaces.
pub fn fold_name(name: &str) -> String {
    name.nfc()
        .map(|c| if c == '_' { ' ' } else { c })
        .collect::<String>()
        .trim()
        .to_owned()
}

/// For every (instance, subclass) group holding more than one distinct id,
/// keeps the ids whose resolved name matches the instance and nulls the rest.
pub fn resolve_multi_id_instances<R: EntityResolver>(
    mut records: Vec<RawPersonRecord>,
    resolver: &R,
) -> StageOutput {
    let rows_in = records.len();
    let mut groups: HashMap<(&str, &str), BTreeSet<&QId>> = HashMap::new();
    for r in &records {
        if let Some(id) = &r.wikidata_id {
            groups
                .entry((r.instance.as_str(), r.subclass.as_str()))
                .or_default()
                .insert(id);
        }
    }

    let mut names: HashMap<QId, Option<String>> = HashMap::new();
    let mut rejected: HashSet<(String, String, QId)> = HashSet::new();
    for ((instance, subclass), ids) in groups.into_iter().filter(|(_, ids)| ids.len() > 1) {
        let wanted = fold_name(instance);
        for id in ids {
            let resolved = names.entry(id.clone()).or_insert_with(|| {
                resolver
                    .lookup_name(id)
                    .ok()
                    .flatten()
                    .map(|n| fold_name(&n))
            });
            if resolved.as_deref() != Some(wanted.as_str()) {
                rejected.insert((instance.to_owned(), subclass.to_owned(), id.clone()));
            }
        }
    }

    let mut modified = 0;
    for r in &mut records {
        let hit = match &r.wikidata_id {
            Some(id) => rejected.contains(&(r.instance.clone(), r.subclass.clone(), id.clone())),
            None => false,
        };
        if hit {
            r.wikidata_id = None;
            modified += 1;
        }
    }
    (
        records,
        report(Stage::ResolveMultiIdInstances, rows_in, rows_in, modified),
    )
}

/// Nulls every id held by more than one distinct instance name.
pub fn null_shared_ids(mut records: Vec<RawPersonRecord>) -> StageOutput {
    let rows_in = records.len();
    let mut holders: HashMap<&QId, HashSet<&str>> = HashMap::new();
    for r in &records {
        if let Some(id) = &r.wikidata_id {
            holders.entry(id).or_default().insert(&r.instance);
        }
    }
    let shared: HashSet<QId> = holders
        .into_iter()
        .filter(|(_, names)| names.len() > 1)
        .map(|(id, _)| id.clone())
        .collect();

    let mut modified = 0;
    for r in &mut records {
        if r.wikidata_id.as_ref().is_some_and(|id| shared.contains(id)) {
            r.wikidata_id = None;
            modified += 1;
        }
    }
    (
        records,
        report(Stage::NullSharedIds, rows_in, rows_in, modified),
    )
}

/// Repairs non-positive ages and ages above `upper_limit` by recomputing them
/// from the resolver's birth/death years.
///
/// A non-positive age is replaced only by a recomputed value in
/// `(0, upper_limit]`; an over-limit age by any positive recomputed value.
/// Everything else that needed repair becomes null.
pub fn repair_ages<R: EntityResolver>(
    mut records: Vec<RawPersonRecord>,
    resolver: &R,
    current_year: i32,
    upper_limit: i32,
) -> StageOutput {
    let rows_in = records.len();
    let mut cache: HashMap<QId, Option<i32>> = HashMap::new();
    let mut modified = 0;
    for r in &mut records {
        let Some(age) = r.age else { continue };
        let too_low = age <= 0;
        if !too_low && age <= upper_limit {
            continue;
        }
        let recomputed = r.wikidata_id.as_ref().and_then(|id| {
            *cache.entry(id.clone()).or_insert_with(|| {
                let years = resolver.lookup_years(id).ok().flatten()?;
                compute_age(years.birth, years.death, current_year)
            })
        });
        let repaired = recomputed.filter(|&v| {
            if too_low {
                v > 0 && v <= upper_limit
            } else {
                v > 0
            }
        });
        if repaired != r.age {
            r.age = repaired;
            modified += 1;
        }
    }
    (
        records,
        report(Stage::RepairAges, rows_in, rows_in, modified),
    )
}

/// Integer age cutoff `floor(mean + z * sd)` of a Gaussian fitted to the
/// non-null ages (population standard deviation). `None` with fewer than two ages.
pub fn gaussian_cutoff(ages: impl IntoIterator<Item = i32>, z_threshold: f64) -> Option<i32> {
    let ages: Vec<f64> = ages.into_iter().map(f64::from).collect();
    if ages.len() < 2 {
        return None;
    }
    let n = ages.len() as f64;
    let mean = ages.iter().sum::<f64>() / n;
    let var = ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    // 1e-9 absorbs float error when mean + z*sd lands on an integer.
    Some((mean + z_threshold * var.sqrt() + 1e-9).floor() as i32)
}

/// Nulls ages above the Gaussian cutoff, or above `fixed_cutoff` when given.
pub fn gaussian_outlier_pass(
    mut records: Vec<RawPersonRecord>,
    z_threshold: f64,
    fixed_cutoff: Option<i32>,
) -> (Vec<RawPersonRecord>, StageReport, Option<i32>) {
    let rows_in = records.len();
    let cutoff =
        fixed_cutoff.or_else(|| gaussian_cutoff(records.iter().filter_map(|r| r.age), z_threshold));
    let mut modified = 0;
    if let Some(cutoff) = cutoff {
        for r in &mut records {
            if r.age.is_some_and(|a| a > cutoff) {
                r.age = None;
                modified += 1;
            }
        }
    }
    (
        records,
        report(Stage::GaussianOutlierPass, rows_in, rows_in, modified),
        cutoff,
    )
}

fn uri_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z][A-Za-z0-9+.\-]*://").expect("valid regex"))
}

pub fn is_hyperlink_label(label: &str) -> bool {
    uri_pattern().is_match(label.trim())
}

/// Drops rows whose gender is a hyperlink and trims surrounding whitespace
/// from the rest. A label that is blank after trimming becomes null.
pub fn clean_gender_labels(records: Vec<RawPersonRecord>) -> StageOutput {
    let rows_in = records.len();
    let mut modified = 0;
    let out: Vec<_> = records
        .into_iter()
        .filter(|r| !r.gender.as_deref().is_some_and(is_hyperlink_label))
        .map(|mut r| {
            if let Some(g) = &r.gender {
                let trimmed = g.trim();
                if trimmed.len() != g.len() {
                    r.gender = (!trimmed.is_empty()).then(|| trimmed.to_owned());
                    modified += 1;
                }
            }
            r
        })
        .collect();
    let rows_out = out.len();
    (
        out,
        report(Stage::CleanGenderLabels, rows_in, rows_out, modified),
    )
}

/// Drops rows without gender or publication year; rows without age stay.
pub fn apply_missing_value_policy(records: Vec<RawPersonRecord>) -> StageOutput {
    let rows_in = records.len();
    let out: Vec<_> = records
        .into_iter()
        .filter(|r| r.gender.is_some() && r.publication_year.is_some())
        .collect();
    let rows_out = out.len();
    (
        out,
        report(Stage::ApplyMissingValuePolicy, rows_in, rows_out, 0),
    )
}
