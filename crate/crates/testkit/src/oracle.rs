//! Reference implementations written as plain nested loops over the rows.
//!
//! Nothing here calls into `wgd_core::cleaner` or `wgd_core::aggregator`;
//! only the record types are shared.

use std::collections::BTreeMap;

use unicode_normalization::UnicodeNormalization;
use wgd_core::cleaner::FixtureEntity;
use wgd_core::{CleanPersonRecord, QId, RawPersonRecord};

/// (rows_in, rows_out, rows_modified, rows_dropped) for one stage.
pub type StageCounts = (usize, usize, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct OracleParams {
    pub upper_limit: i32,
    pub z_threshold: f64,
    pub fixed_cutoff: Option<i32>,
    pub current_year: i32,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            upper_limit: 100,
            z_threshold: 3.0,
            fixed_cutoff: None,
            current_year: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub rows: Vec<CleanPersonRecord>,
    pub stages: Vec<StageCounts>,
    pub cutoff: Option<i32>,
}

enum Lookup<'a> {
    Failed,
    Missing,
    Found(&'a FixtureEntity),
}

fn lookup<'a>(
    entities: &'a BTreeMap<QId, FixtureEntity>,
    resolver_on: bool,
    id: &QId,
) -> Lookup<'a> {
    if !resolver_on {
        return Lookup::Failed;
    }
    match entities.get(id) {
        None => Lookup::Missing,
        Some(e) if e.fail => Lookup::Failed,
        Some(e) => Lookup::Found(e),
    }
}

fn normalize(name: &str) -> String {
    let nfc: String = name.nfc().collect();
    nfc.replace('_', " ").trim().to_string()
}

fn looks_like_url(label: &str) -> bool {
    let t = label.trim();
    let Some(pos) = t.find("://") else {
        return false;
    };
    let scheme = &t[..pos];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '+' || c == '.' || c == '-')
}

/// Runs every cleaning rule in sequence. `resolver_on = false` behaves like
/// a resolver whose lookups all fail.
pub fn reference_clean(
    input: &[RawPersonRecord],
    entities: &BTreeMap<QId, FixtureEntity>,
    resolver_on: bool,
    p: &OracleParams,
) -> OracleOutput {
    let mut stages = Vec::new();

    // 1. exact duplicates on (instance, id, subclass); null ids are never equal
    let mut rows: Vec<RawPersonRecord> = Vec::new();
    for r in input {
        let dup = r.wikidata_id.is_some()
            && rows.iter().any(|k| {
                k.instance == r.instance
                    && k.subclass == r.subclass
                    && k.wikidata_id == r.wikidata_id
            });
        if !dup {
            rows.push(r.clone());
        }
    }
    stages.push((input.len(), rows.len(), 0, input.len() - rows.len()));

    // 2. several ids for one (instance, subclass)
    let before = rows.clone();
    for i in 0..rows.len() {
        let Some(id) = before[i].wikidata_id.clone() else {
            continue;
        };
        let mut distinct: Vec<&QId> = Vec::new();
        for k in &before {
            if k.instance == before[i].instance && k.subclass == before[i].subclass {
                if let Some(other) = &k.wikidata_id {
                    if !distinct.contains(&other) {
                        distinct.push(other);
                    }
                }
            }
        }
        if distinct.len() < 2 {
            continue;
        }
        let matches = match lookup(entities, resolver_on, &id) {
            Lookup::Found(e) => {
                e.name.as_deref().map(normalize) == Some(normalize(&before[i].instance))
            }
            _ => false,
        };
        if !matches {
            rows[i].wikidata_id = None;
        }
    }
    let modified = rows.iter().zip(&before).filter(|(a, b)| a != b).count();
    stages.push((rows.len(), rows.len(), modified, 0));

    // 3. one id, several instance names
    let before = rows.clone();
    for i in 0..rows.len() {
        let Some(id) = &before[i].wikidata_id else {
            continue;
        };
        let shared = before
            .iter()
            .any(|k| k.wikidata_id.as_ref() == Some(id) && k.instance != before[i].instance);
        if shared {
            rows[i].wikidata_id = None;
        }
    }
    let modified = rows.iter().zip(&before).filter(|(a, b)| a != b).count();
    stages.push((rows.len(), rows.len(), modified, 0));

    // 4. ages <= 0 or above the limit
    let mut modified = 0;
    for r in rows.iter_mut() {
        let Some(age) = r.age else { continue };
        if age > 0 && age <= p.upper_limit {
            continue;
        }
        let mut new_age = None;
        if let Some(id) = &r.wikidata_id {
            if let Lookup::Found(e) = lookup(entities, resolver_on, id) {
                if let Some(birth) = e.birth {
                    let end = match e.death {
                        Some(d) => d,
                        None => p.current_year,
                    };
                    let v = end - birth;
                    let ok = if age <= 0 {
                        v > 0 && v <= p.upper_limit
                    } else {
                        v > 0
                    };
                    if ok {
                        new_age = Some(v);
                    }
                }
            }
        }
        if new_age != r.age {
            modified += 1;
        }
        r.age = new_age;
    }
    stages.push((rows.len(), rows.len(), modified, 0));

    // 5. Gaussian outliers
    let cutoff = match p.fixed_cutoff {
        Some(c) => Some(c),
        None => {
            let ages: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.age)
                .map(|a| a as f64)
                .collect();
            if ages.len() < 2 {
                None
            } else {
                let mut sum = 0.0;
                for a in &ages {
                    sum += a;
                }
                let mean = sum / ages.len() as f64;
                let mut ss = 0.0;
                for a in &ages {
                    ss += (a - mean) * (a - mean);
                }
                let sd = (ss / ages.len() as f64).sqrt();
                Some((mean + p.z_threshold * sd + 1e-9).floor() as i32)
            }
        }
    };
    let mut modified = 0;
    if let Some(c) = cutoff {
        for r in rows.iter_mut() {
            if matches!(r.age, Some(a) if a > c) {
                r.age = None;
                modified += 1;
            }
        }
    }
    stages.push((rows.len(), rows.len(), modified, 0));

    // 6. hyperlink genders dropped, others trimmed
    let n_in = rows.len();
    let mut kept = Vec::new();
    let mut modified = 0;
    for mut r in rows {
        if let Some(g) = r.gender.clone() {
            if looks_like_url(&g) {
                continue;
            }
            let t = g.trim().to_string();
            if t != g {
                modified += 1;
                r.gender = if t.is_empty() { None } else { Some(t) };
            }
        }
        kept.push(r);
    }
    stages.push((n_in, kept.len(), modified, n_in - kept.len()));
    let rows = kept;

    // 7. missing gender / publication year
    let n_in = rows.len();
    let mut out = Vec::new();
    for r in rows {
        if let (Some(g), Some(y)) = (r.gender.clone(), r.publication_year) {
            out.push(CleanPersonRecord {
                subclass: r.subclass,
                instance: r.instance,
                wikidata_id: r.wikidata_id,
                gender: g,
                age: r.age,
                birth_year: r.birth_year,
                publication_year: y,
            });
        }
    }
    stages.push((n_in, out.len(), 0, n_in - out.len()));

    OracleOutput {
        rows: out,
        stages,
        cutoff,
    }
}

/// Naive filter-and-count for one cube coordinate; `None` means ALL.
/// Returns (count, unrounded mean age, age sample size).
pub fn reference_cell(
    rows: &[CleanPersonRecord],
    year: i32,
    subclass: Option<&str>,
    gender: Option<&str>,
) -> (u64, Option<f64>, u64) {
    let mut count = 0u64;
    let mut ages = Vec::new();
    for r in rows {
        if r.publication_year != year {
            continue;
        }
        if subclass.is_some_and(|s| s != r.subclass) {
            continue;
        }
        if gender.is_some_and(|g| g != r.gender) {
            continue;
        }
        count += 1;
        if let Some(a) = r.age {
            ages.push(a as f64);
        }
    }
    let mean = if ages.is_empty() {
        None
    } else {
        Some(ages.iter().sum::<f64>() / ages.len() as f64)
    };
    (count, mean, ages.len() as u64)
}

/// Every coordinate the cube must contain for `rows`: concrete values and ALL.
pub fn reference_coordinates(
    rows: &[CleanPersonRecord],
) -> Vec<(i32, Option<String>, Option<String>)> {
    let mut out = Vec::new();
    for r in rows {
        for sub in [Some(r.subclass.clone()), None] {
            for gen in [Some(r.gender.clone()), None] {
                let c = (r.publication_year, sub.clone(), gen);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
    }
    out
}
