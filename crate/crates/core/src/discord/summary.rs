use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{mean, quantile_sorted, TOTAL};
use crate::error::DiscordError;
use crate::model::{GiniObservation, SourceDb, WelfareMetric};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummaryRow {
    pub dataset: String,
    pub n_obs: usize,
    pub n_countries: usize,
    pub min_year: Option<i32>,
    pub max_year: Option<i32>,
    pub mean_gini: Option<f64>,
}

fn summary_row(label: &str, rows: &[&GiniObservation]) -> DatasetSummaryRow {
    let countries: BTreeSet<&str> = rows.iter().map(|o| o.country_iso3.as_str()).collect();
    let mut values: Vec<f64> = rows.iter().map(|o| o.gini_pp).collect();
    values.sort_by(f64::total_cmp);
    DatasetSummaryRow {
        dataset: label.to_string(),
        n_obs: rows.len(),
        n_countries: countries.len(),
        min_year: rows.iter().map(|o| o.year).min(),
        max_year: rows.iter().map(|o| o.year).max(),
        mean_gini: (!values.is_empty()).then(|| mean(&values)),
    }
}

/// Observation, country and year coverage per database, then a total row.
pub fn dataset_summary(observations: &[GiniObservation]) -> Vec<DatasetSummaryRow> {
    let mut by_db: BTreeMap<SourceDb, Vec<&GiniObservation>> = BTreeMap::new();
    for o in observations {
        by_db.entry(o.source_db).or_default().push(o);
    }
    let mut rows: Vec<DatasetSummaryRow> = by_db
        .iter()
        .map(|(db, obs)| summary_row(db.as_str(), obs))
        .collect();
    let all: Vec<&GiniObservation> = observations.iter().collect();
    rows.push(summary_row(TOTAL, &all));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrevalentMetric {
    Income,
    Consumption,
    Mixed,
    Unknown,
}

impl PrevalentMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            PrevalentMetric::Income => "income",
            PrevalentMetric::Consumption => "consumption",
            PrevalentMetric::Mixed => "mixed",
            PrevalentMetric::Unknown => "unknown",
        }
    }
}

/// The welfare concept most observations use in each country's latest
/// observed year. Expenditure counts as consumption. Unknown-metric rows only
/// decide the outcome when nothing else is observed that year; a tie between
/// income and consumption yields `Mixed`.
pub fn prevalent_metric(observations: &[GiniObservation]) -> Vec<(String, PrevalentMetric)> {
    let mut latest: BTreeMap<&str, (i32, [usize; 3])> = BTreeMap::new();
    for o in observations {
        let slot = match o.welfare_metric {
            WelfareMetric::Income => 0,
            WelfareMetric::Consumption | WelfareMetric::Expenditure => 1,
            WelfareMetric::Unknown => 2,
        };
        let entry = latest
            .entry(o.country_iso3.as_str())
            .or_insert((o.year, [0; 3]));
        if o.year > entry.0 {
            *entry = (o.year, [0; 3]);
        }
        if o.year == entry.0 {
            entry.1[slot] += 1;
        }
    }
    latest
        .into_iter()
        .map(|(country, (_, [inc, cons, _unknown]))| {
            let metric = match inc.cmp(&cons) {
                _ if inc == 0 && cons == 0 => PrevalentMetric::Unknown,
                std::cmp::Ordering::Greater => PrevalentMetric::Income,
                std::cmp::Ordering::Less => PrevalentMetric::Consumption,
                std::cmp::Ordering::Equal => PrevalentMetric::Mixed,
            };
            (country.to_string(), metric)
        })
        .collect()
}

/// Five-number summary of all Gini values for one country-year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub year: i32,
    pub n_obs: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Box-plot statistics per year for `country_iso3`, in ascending year order.
/// Fails if the country has no observations at all.
pub fn country_series(
    observations: &[GiniObservation],
    country_iso3: &str,
) -> Result<Vec<SeriesRow>, DiscordError> {
    let mut years: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for o in observations.iter().filter(|o| o.country_iso3 == country_iso3) {
        years.entry(o.year).or_default().push(o.gini_pp);
    }
    if years.is_empty() {
        return Err(DiscordError::UnknownCountry(country_iso3.to_string()));
    }
    Ok(years
        .into_iter()
        .map(|(year, mut v)| {
            v.sort_by(f64::total_cmp);
            SeriesRow {
                year,
                n_obs: v.len(),
                min: v[0],
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                q3: quantile_sorted(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MetricType;

    fn obs(db: SourceDb, c: &str, y: i32, g: f64, m: WelfareMetric) -> GiniObservation {
        let t = if m.is_spending() { MetricType::NotApplicable } else { MetricType::Unknown };
        GiniObservation::new(db, c, y, g).with_welfare(m, t)
    }

    #[test]
    fn summary_counts() {
        let rows = vec![
            obs(SourceDb::Lis, "COL", 2010, 50.0, WelfareMetric::Income),
            obs(SourceDb::Lis, "BRA", 2012, 54.0, WelfareMetric::Income),
            obs(SourceDb::Wid, "COL", 2000, 60.0, WelfareMetric::Income),
        ];
        let s = dataset_summary(&rows);
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].dataset, "LIS");
        assert_eq!((s[0].n_obs, s[0].n_countries), (2, 2));
        assert_eq!(s[0].mean_gini, Some(52.0));
        let total = &s[2];
        assert_eq!((total.n_obs, total.min_year, total.max_year), (3, Some(2000), Some(2012)));
    }

    #[test]
    fn empty_summary_has_zero_total() {
        let s = dataset_summary(&[]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].n_obs, 0);
        assert_eq!(s[0].mean_gini, None);
    }

    #[test]
    fn prevalent_metric_uses_latest_year() {
        let rows = vec![
            obs(SourceDb::Lis, "IND", 2000, 50.0, WelfareMetric::Income),
            obs(SourceDb::WbPip, "IND", 2019, 35.0, WelfareMetric::Consumption),
            obs(SourceDb::Wid, "IND", 2019, 60.0, WelfareMetric::Income),
            obs(SourceDb::Sedlac, "IND", 2019, 36.0, WelfareMetric::Expenditure),
            obs(SourceDb::Lis, "USA", 2018, 40.0, WelfareMetric::Income),
            obs(SourceDb::Wid, "USA", 2018, 41.0, WelfareMetric::Unknown),
            obs(SourceDb::Lis, "COL", 2018, 40.0, WelfareMetric::Income),
            obs(SourceDb::Wid, "COL", 2018, 41.0, WelfareMetric::Consumption),
            obs(SourceDb::Swiid, "ARG", 2018, 41.0, WelfareMetric::Unknown),
        ];
        let m: BTreeMap<String, PrevalentMetric> = prevalent_metric(&rows).into_iter().collect();
        assert_eq!(m["IND"], PrevalentMetric::Consumption);
        assert_eq!(m["USA"], PrevalentMetric::Income);
        assert_eq!(m["COL"], PrevalentMetric::Mixed);
        assert_eq!(m["ARG"], PrevalentMetric::Unknown);
    }

    #[test]
    fn series_five_numbers() {
        let rows: Vec<GiniObservation> = [40.0, 48.0, 44.0, 42.0, 46.0]
            .iter()
            .zip([SourceDb::Lis, SourceDb::Wid, SourceDb::Oecd, SourceDb::Swiid, SourceDb::WbPip])
            .map(|(g, db)| obs(db, "USA", 2015, *g, WelfareMetric::Income))
            .collect();
        let s = country_series(&rows, "USA").unwrap();
        assert_eq!(s.len(), 1);
        let r = &s[0];
        assert_eq!((r.min, r.q1, r.median, r.q3, r.max), (40.0, 42.0, 44.0, 46.0, 48.0));
        assert!(matches!(country_series(&rows, "FRA"), Err(DiscordError::UnknownCountry(_))));
    }
}
