use std::fmt;

use serde::{Deserialize, Serialize};

/// Pipeline stages in their fixed execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    DropDuplicateCombinations,
    ResolveMultiIdInstances,
    NullSharedIds,
    RepairAges,
    GaussianOutlierPass,
    CleanGenderLabels,
    ApplyMissingValuePolicy,
}

impl Stage {
    pub const ORDER: [Stage; 7] = [
        Stage::DropDuplicateCombinations,
        Stage::ResolveMultiIdInstances,
        Stage::NullSharedIds,
        Stage::RepairAges,
        Stage::GaussianOutlierPass,
        Stage::CleanGenderLabels,
        Stage::ApplyMissingValuePolicy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::DropDuplicateCombinations => "drop_duplicate_combinations",
            Stage::ResolveMultiIdInstances => "resolve_multi_id_instances",
            Stage::NullSharedIds => "null_shared_ids",
            Stage::RepairAges => "repair_ages",
            Stage::GaussianOutlierPass => "gaussian_outlier_pass",
            Stage::CleanGenderLabels => "clean_gender_labels",
            Stage::ApplyMissingValuePolicy => "apply_missing_value_policy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub rows_in: usize,
    pub rows_out: usize,
    pub rows_modified: usize,
    pub rows_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_rows: usize,
    pub output_rows: usize,
    /// Age cutoff applied by the outlier stage, if any.
    pub outlier_cutoff: Option<i32>,
    pub stages: Vec<StageReport>,
}

impl CleaningReport {
    /// Checks per-stage conservation, chaining between stages, and stage order.
    pub fn reconciles(&self) -> bool {
        let mut rows = self.input_rows;
        let order_ok = self.stages.iter().map(|s| s.stage).eq(Stage::ORDER);
        let chain_ok = self.stages.iter().all(|s| {
            let ok = s.rows_in == rows && s.rows_out + s.rows_dropped == s.rows_in;
            rows = s.rows_out;
            ok
        });
        order_ok && chain_ok && rows == self.output_rows
    }

    pub fn total_dropped(&self) -> usize {
        self.stages.iter().map(|s| s.rows_dropped).sum()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<28} {:>9} {:>9} {:>9} {:>9}",
            "stage", "rows_in", "rows_out", "modified", "dropped"
        )?;
        for s in &self.stages {
            writeln!(
                f,
                "{:<28} {:>9} {:>9} {:>9} {:>9}",
                s.stage.name(),
                s.rows_in,
                s.rows_out,
                s.rows_modified,
                s.rows_dropped
            )?;
        }
        match self.outlier_cutoff {
            Some(c) => writeln!(f, "outlier cutoff: {c}")?,
            None => writeln!(f, "outlier cutoff: none")?,
        }
        writeln!(f, "rows: {} -> {}", self.input_rows, self.output_rows)
    }
}
