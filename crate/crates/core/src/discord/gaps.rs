use std::collections::BTreeMap;

use serde::Serialize;

use super::{mean, quantile_sorted, Collapse, GroupBy, TOTAL};
use crate::country::CountryTable;
use crate::model::{GiniObservation, WelfareMetric};

/// A country-year with both an income-based and a spending-based Gini.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapPair {
    pub country_iso3: String,
    pub year: i32,
    pub income_gini: f64,
    pub consumption_gini: f64,
    pub gap_pp: f64,
}

/// Pairs every country-year that has at least one income observation and at
/// least one consumption or expenditure observation. Each side is reduced
/// with `collapse` before differencing; gap is income minus consumption.
pub fn income_consumption_pairs(
    observations: &[GiniObservation],
    collapse: Collapse,
) -> Vec<GapPair> {
    #[derive(Default)]
    struct Sides {
        income: Vec<f64>,
        spending: Vec<f64>,
    }
    let mut cells: BTreeMap<(&str, i32), Sides> = BTreeMap::new();
    for o in observations {
        let side = cells.entry((o.country_iso3.as_str(), o.year)).or_default();
        if o.welfare_metric == WelfareMetric::Income {
            side.income.push(o.gini_pp);
        } else if o.welfare_metric.is_spending() {
            side.spending.push(o.gini_pp);
        }
    }
    cells
        .into_iter()
        .filter(|(_, s)| !s.income.is_empty() && !s.spending.is_empty())
        .map(|((country, year), mut s)| {
            let income_gini = collapse.apply(&mut s.income);
            let consumption_gini = collapse.apply(&mut s.spending);
            GapPair {
                country_iso3: country.to_string(),
                year,
                income_gini,
                consumption_gini,
                gap_pp: income_gini - consumption_gini,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    pub group: String,
    pub n_pairs: usize,
    pub mean_gap: Option<f64>,
    pub median_gap: Option<f64>,
    pub p75_gap: Option<f64>,
}

fn summarize(group: &str, gaps: &mut [f64]) -> GapStats {
    gaps.sort_by(f64::total_cmp);
    let some = !gaps.is_empty();
    GapStats {
        group: group.to_string(),
        n_pairs: gaps.len(),
        mean_gap: some.then(|| mean(gaps)),
        median_gap: some.then(|| quantile_sorted(gaps, 0.5)),
        p75_gap: some.then(|| quantile_sorted(gaps, 0.75)),
    }
}

/// Per-group mean, median and 75th percentile of the gaps, plus a total row.
pub fn gap_report(pairs: &[GapPair], meta: &CountryTable, group_by: GroupBy) -> Vec<GapStats> {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for p in pairs {
        groups
            .entry(group_by.group_of(meta, &p.country_iso3))
            .or_default()
            .push(p.gap_pp);
    }
    let mut rows: Vec<GapStats> = group_by
        .labels()
        .into_iter()
        .filter_map(|label| groups.get_mut(label).map(|g| summarize(label, g)))
        .collect();
    let mut all: Vec<f64> = pairs.iter().map(|p| p.gap_pp).collect();
    rows.push(summarize(TOTAL, &mut all));
    rows
}

pub fn income_consumption_gaps(
    observations: &[GiniObservation],
    meta: &CountryTable,
    group_by: GroupBy,
    collapse: Collapse,
) -> Vec<GapStats> {
    gap_report(&income_consumption_pairs(observations, collapse), meta, group_by)
}
