//! Cross-database discordance statistics over the unified collection.
//!
//! Every function here is deterministic: groupings use ordered maps, values
//! inside a group are sorted before any floating-point reduction, and
//! parallel sections preserve input order when collecting.

mod concordance;
mod gaps;
mod summary;
mod variability;

pub use concordance::{pairwise_concordance, ConcordanceCell, ConcordanceMatrix, NullReason};
pub use gaps::{gap_report, income_consumption_gaps, income_consumption_pairs, GapPair, GapStats};
pub use summary::{
    country_series, dataset_summary, prevalent_metric, DatasetSummaryRow, PrevalentMetric,
    SeriesRow,
};
pub use variability::{cell_variability, variability_report, CellStats, RangeBasis, VariabilityRow};

use std::fmt;
use std::str::FromStr;

use crate::country::{CountryTable, IncomeGroup, Region7};
use crate::model::{AreaCoverage, GiniObservation, Subgroup};

/// Which observations enter the discordance statistics. `None` admits any
/// value of that descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisFilter {
    pub coverage: Option<AreaCoverage>,
    pub subgroup: Option<Subgroup>,
}

impl Default for AnalysisFilter {
    /// National coverage, whole population.
    fn default() -> Self {
        AnalysisFilter {
            coverage: Some(AreaCoverage::National),
            subgroup: Some(Subgroup::Overall),
        }
    }
}

impl AnalysisFilter {
    pub fn any() -> Self {
        AnalysisFilter {
            coverage: None,
            subgroup: None,
        }
    }

    pub fn admits(&self, obs: &GiniObservation) -> bool {
        self.coverage.is_none_or(|c| c == obs.area_coverage)
            && self.subgroup.is_none_or(|s| s == obs.subgroup)
    }
}

pub fn analysis_filter(
    observations: &[GiniObservation],
    filter: &AnalysisFilter,
) -> Vec<GiniObservation> {
    observations
        .iter()
        .filter(|o| filter.admits(o))
        .cloned()
        .collect()
}

/// How several observations of one database (or one welfare metric) in the
/// same country-year are reduced to a single value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Collapse {
    #[default]
    Mean,
    Median,
}

impl Collapse {
    pub fn apply(self, values: &mut [f64]) -> f64 {
        values.sort_by(f64::total_cmp);
        match self {
            Collapse::Mean => mean(values),
            Collapse::Median => quantile_sorted(values, 0.5),
        }
    }
}

impl FromStr for Collapse {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Collapse::Mean),
            "median" => Ok(Collapse::Median),
            other => Err(format!("'{other}' is not mean or median")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Region,
    IncomeGroup,
}

impl GroupBy {
    /// Column heading for the group label.
    pub fn label(self) -> &'static str {
        match self {
            GroupBy::Region => "region",
            GroupBy::IncomeGroup => "income_group",
        }
    }

    /// Group labels in report order; countries missing from the table fall
    /// into `unclassified`, which is listed last.
    pub fn labels(self) -> Vec<&'static str> {
        match self {
            GroupBy::Region => Region7::ALL
                .iter()
                .map(|r| r.as_str())
                .chain(std::iter::once(UNCLASSIFIED))
                .collect(),
            GroupBy::IncomeGroup => IncomeGroup::ALL.iter().map(|g| g.as_str()).collect(),
        }
    }

    pub fn group_of(self, meta: &CountryTable, iso3: &str) -> &'static str {
        match self {
            GroupBy::Region => meta.region_of(iso3).map_or(UNCLASSIFIED, Region7::as_str),
            GroupBy::IncomeGroup => meta
                .income_group_of(iso3)
                .unwrap_or(IncomeGroup::Unclassified)
                .as_str(),
        }
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "region" => Ok(GroupBy::Region),
            "income-group" | "income_group" => Ok(GroupBy::IncomeGroup),
            other => Err(format!("'{other}' is not region or income-group")),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const UNCLASSIFIED: &str = "unclassified";
pub const TOTAL: &str = "total";

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for a single value.
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Linear interpolation at rank (n − 1)·p over ascending `sorted` values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let rank = (sorted.len() - 1) as f64 * p;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}
