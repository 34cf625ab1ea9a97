use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{iqr_outliers, wilcoxon_rank_sum, StatsConfig, StatsError, TestResult, WilcoxonMode};

/// Group 1 and group 2 observations for one comparison.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellSamples {
    pub group1: Vec<f64>,
    pub group2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    MissingGroup1,
    MissingGroup2,
    MissingBoth,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueCell {
    /// 1-based question number.
    pub item: usize,
    /// 1-based administration index.
    pub administration: usize,
    pub result: Option<TestResult>,
    pub flag: Option<CellFlag>,
}

/// Items as rows, administrations as columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueTable {
    pub items: usize,
    pub administrations: usize,
    /// Row-major.
    pub cells: Vec<PValueCell>,
}

impl PValueTable {
    pub fn cell(&self, item: usize, administration: usize) -> Option<&PValueCell> {
        if item == 0 || administration == 0 || item > self.items || administration > self.administrations
        {
            return None;
        }
        self.cells
            .get((item - 1) * self.administrations + administration - 1)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &PValueCell> {
        self.cells.iter().filter(|c| c.flag.is_some())
    }
}

/// Group comparison used for every table cell and for time-to-intervene.
pub fn compare_groups(
    group1: &[f64],
    group2: &[f64],
    cfg: &StatsConfig,
) -> Result<TestResult, StatsError> {
    let trim = |v: &[f64]| -> Vec<f64> {
        if !cfg.exclude_outliers {
            return v.to_vec();
        }
        match iqr_outliers(v) {
            Ok(l) => l.inliers(v).collect(),
            Err(_) => v.to_vec(),
        }
    };
    let (a, b) = (trim(group1), trim(group2));
    wilcoxon_rank_sum(&a, &b, WilcoxonMode::Auto { cap: cfg.exact_cap }, cfg.alternative)
}

/// Builds the table from `samples`, given row-major over `items x
/// administrations`. Cells lacking data in either group are flagged.
pub fn build_pvalue_table(
    samples: &[CellSamples],
    items: usize,
    administrations: usize,
    cfg: &StatsConfig,
) -> PValueTable {
    let mut cells = Vec::with_capacity(items * administrations);
    for item in 1..=items {
        for administration in 1..=administrations {
            let idx = (item - 1) * administrations + administration - 1;
            let empty = CellSamples::default();
            let s = samples.get(idx).unwrap_or(&empty);
            let missing = match (s.group1.is_empty(), s.group2.is_empty()) {
                (true, true) => Some(CellFlag::MissingBoth),
                (true, false) => Some(CellFlag::MissingGroup1),
                (false, true) => Some(CellFlag::MissingGroup2),
                (false, false) => None,
            };
            let (result, flag) = match missing {
                Some(flag) => (None, Some(flag)),
                None => match compare_groups(&s.group1, &s.group2, cfg) {
                    Ok(r) => (Some(r), None),
                    Err(_) => (None, Some(CellFlag::Failed)),
                },
            };
            cells.push(PValueCell {
                item,
                administration,
                result,
                flag,
            });
        }
    }
    PValueTable {
        items,
        administrations,
        cells,
    }
}
