//! The preprocessing pipeline: duplicate handling, incorrect-value repair and
//! the missing-value policy, run as seven fixed stages.
//!
//! Every stage is a pure function over the record list and reports how many
//! rows it modified and dropped, so the whole run reconciles exactly from
//! input count to output count.

mod age;
mod report;
mod resolver;
mod stages;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use age::compute_age;
pub use report::{CleaningReport, Stage, StageReport};
pub use resolver::{
    DisabledResolver, EntityResolver, FixtureEntity, FixtureResolver, LifeYears, ResolveError,
};
pub use stages::{
    apply_missing_value_policy, clean_gender_labels, drop_duplicate_combinations, fold_name,
    gaussian_cutoff, gaussian_outlier_pass, is_hyperlink_label, null_shared_ids, repair_ages,
    resolve_multi_id_instances,
};

use crate::record::{CleanPersonRecord, RawPersonRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolverMode {
    Live,
    Fixture,
    #[default]
    Off,
}

impl std::str::FromStr for ResolverMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(ResolverMode::Live),
            "fixture" => Ok(ResolverMode::Fixture),
            "off" => Ok(ResolverMode::Off),
            other => Err(format!(
                "unknown resolver mode {other:?} (expected live|fixture|off)"
            )),
        }
    }
}

/// Cleaning parameters, loadable from a TOML file:
///
/// ```toml
/// upper_limit = 100
/// z_threshold = 3.0
/// fixed_cutoff = 117      # omit to use the fitted cutoff
/// current_year = 2024
/// resolver = "fixture"    # live | fixture | off
/// resolver_fixture = "resolver.json"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub upper_limit: i32,
    pub z_threshold: f64,
    pub fixed_cutoff: Option<i32>,
    pub current_year: i32,
    pub resolver: ResolverMode,
    pub resolver_fixture: Option<PathBuf>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            upper_limit: 100,
            z_threshold: 3.0,
            fixed_cutoff: None,
            current_year: 2024,
            resolver: ResolverMode::Off,
            resolver_fixture: None,
        }
    }
}

/// Runs all stages in order and returns the surviving rows with the report.
pub fn run_cleaning<R: EntityResolver>(
    records: Vec<RawPersonRecord>,
    resolver: &R,
    config: &CleaningConfig,
) -> (Vec<CleanPersonRecord>, CleaningReport) {
    let input_rows = records.len();
    let mut stages = Vec::with_capacity(Stage::ORDER.len());

    let (records, rep) = drop_duplicate_combinations(records);
    stages.push(rep);
    let (records, rep) = resolve_multi_id_instances(records, resolver);
    stages.push(rep);
    let (records, rep) = null_shared_ids(records);
    stages.push(rep);
    let (records, rep) = repair_ages(records, resolver, config.current_year, config.upper_limit);
    stages.push(rep);
    let (records, rep, outlier_cutoff) =
        gaussian_outlier_pass(records, config.z_threshold, config.fixed_cutoff);
    stages.push(rep);
    let (records, rep) = clean_gender_labels(records);
    stages.push(rep);
    let (records, rep) = apply_missing_value_policy(records);
    stages.push(rep);

    let clean: Vec<CleanPersonRecord> = records
        .into_iter()
        .map(|r| {
            CleanPersonRecord::try_from(r).expect("missing-value policy guarantees gender and year")
        })
        .collect();
    let report = CleaningReport {
        input_rows,
        output_rows: clean.len(),
        outlier_cutoff,
        stages,
    };
    debug_assert!(report.reconciles());
    (clean, report)
}
