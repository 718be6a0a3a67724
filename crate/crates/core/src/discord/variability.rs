use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{mean, quantile_sorted, sample_sd, GroupBy, TOTAL};
use crate::country::CountryTable;
use crate::model::{GiniObservation, SourceDb};

/// Dispersion of Gini values within one country-year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub country_iso3: String,
    pub year: i32,
    pub n_obs: usize,
    pub n_databases: usize,
    pub range_pp: f64,
    pub sd_pp: f64,
    pub min_pp: f64,
    pub max_pp: f64,
}

/// Which values a cell's range and standard deviation are taken over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RangeBasis {
    /// Every retained observation in the cell.
    #[default]
    AllObservations,
    /// One mean value per database.
    DatabaseMeans,
}

/// One `CellStats` per country-year that has observations from at least two
/// databases, in (country, year) order.
pub fn cell_variability(observations: &[GiniObservation], basis: RangeBasis) -> Vec<CellStats> {
    let mut cells: BTreeMap<(&str, i32), Vec<(SourceDb, f64)>> = BTreeMap::new();
    for o in observations {
        cells
            .entry((o.country_iso3.as_str(), o.year))
            .or_default()
            .push((o.source_db, o.gini_pp));
    }
    let cells: Vec<_> = cells.into_iter().collect();
    cells
        .par_iter()
        .filter_map(|((country, year), entries)| {
            let dbs: BTreeSet<SourceDb> = entries.iter().map(|e| e.0).collect();
            if dbs.len() < 2 {
                return None;
            }
            let mut values: Vec<f64> = match basis {
                RangeBasis::AllObservations => entries.iter().map(|e| e.1).collect(),
                RangeBasis::DatabaseMeans => dbs
                    .iter()
                    .map(|db| {
                        let mut v: Vec<f64> =
                            entries.iter().filter(|e| e.0 == *db).map(|e| e.1).collect();
                        v.sort_by(f64::total_cmp);
                        mean(&v)
                    })
                    .collect(),
            };
            values.sort_by(f64::total_cmp);
            let min_pp = values[0];
            let max_pp = values[values.len() - 1];
            Some(CellStats {
                country_iso3: country.to_string(),
                year: *year,
                n_obs: entries.len(),
                n_databases: dbs.len(),
                range_pp: max_pp - min_pp,
                sd_pp: sample_sd(&values),
                min_pp,
                max_pp,
            })
        })
        .collect()
}

/// One row of the grouped variability table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariabilityRow {
    pub group: String,
    pub n_obs: usize,
    pub mean_range: Option<f64>,
    pub mean_sd: Option<f64>,
    pub median_range: Option<f64>,
    pub max_range: Option<f64>,
}

fn aggregate(group: &str, cells: &[&CellStats]) -> VariabilityRow {
    if cells.is_empty() {
        return VariabilityRow {
            group: group.to_string(),
            n_obs: 0,
            mean_range: None,
            mean_sd: None,
            median_range: None,
            max_range: None,
        };
    }
    let mut ranges: Vec<f64> = cells.iter().map(|c| c.range_pp).collect();
    let mut sds: Vec<f64> = cells.iter().map(|c| c.sd_pp).collect();
    ranges.sort_by(f64::total_cmp);
    sds.sort_by(f64::total_cmp);
    VariabilityRow {
        group: group.to_string(),
        n_obs: cells.len(),
        mean_range: Some(mean(&ranges)),
        mean_sd: Some(mean(&sds)),
        median_range: Some(quantile_sorted(&ranges, 0.5)),
        max_range: ranges.last().copied(),
    }
}

/// Per-group count, mean range, mean SD, median range and maximum range,
/// followed by a total row over every cell. Empty groups are omitted.
pub fn variability_report(
    cells: &[CellStats],
    meta: &CountryTable,
    group_by: GroupBy,
) -> Vec<VariabilityRow> {
    let mut groups: BTreeMap<&str, Vec<&CellStats>> = BTreeMap::new();
    for c in cells {
        groups
            .entry(group_by.group_of(meta, &c.country_iso3))
            .or_default()
            .push(c);
    }
    let mut rows: Vec<VariabilityRow> = group_by
        .labels()
        .into_iter()
        .filter_map(|label| groups.get(label).map(|g| aggregate(label, g)))
        .collect();
    let all: Vec<&CellStats> = cells.iter().collect();
    rows.push(aggregate(TOTAL, &all));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(db: SourceDb, c: &str, y: i32, g: f64) -> GiniObservation {
        GiniObservation::new(db, c, y, g)
    }

    #[test]
    fn two_database_cell() {
        let cells = cell_variability(
            &[obs(SourceDb::Lis, "COL", 2010, 40.0), obs(SourceDb::Oecd, "COL", 2010, 46.0)],
            RangeBasis::AllObservations,
        );
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].range_pp, 6.0);
        assert_eq!(format!("{:.4}", cells[0].sd_pp), "4.2426");
        assert_eq!(cells[0].n_databases, 2);
    }

    #[test]
    fn single_database_cell_is_skipped() {
        let cells = cell_variability(
            &[obs(SourceDb::Lis, "COL", 2010, 40.0), obs(SourceDb::Lis, "COL", 2010, 44.0)],
            RangeBasis::AllObservations,
        );
        assert!(cells.is_empty());
    }

    #[test]
    fn range_covers_all_observations() {
        let rows = [
            obs(SourceDb::Lis, "COL", 2010, 40.0),
            obs(SourceDb::Oecd, "COL", 2010, 46.0),
            obs(SourceDb::Oecd, "COL", 2010, 50.0),
        ];
        let cells = cell_variability(&rows, RangeBasis::AllObservations);
        assert_eq!(cells[0].n_databases, 2);
        assert_eq!(cells[0].n_obs, 3);
        assert_eq!(cells[0].range_pp, 10.0);

        let cells = cell_variability(&rows, RangeBasis::DatabaseMeans);
        assert_eq!(cells[0].range_pp, 8.0);
    }

    #[test]
    fn grouped_aggregates() {
        let rows = [
            obs(SourceDb::Lis, "COL", 2010, 40.0),
            obs(SourceDb::Oecd, "COL", 2010, 46.0),
            obs(SourceDb::Lis, "BRA", 2010, 40.0),
            obs(SourceDb::Oecd, "BRA", 2010, 50.0),
        ];
        let cells = cell_variability(&rows, RangeBasis::AllObservations);
        let report = variability_report(&cells, CountryTable::builtin(), GroupBy::Region);
        assert_eq!(report.len(), 2);
        assert_eq!(report[0].group, "LCN");
        assert_eq!(report[0].mean_range, Some(8.0));
        assert_eq!(report[0].median_range, Some(8.0));
        assert_eq!(report[0].max_range, Some(10.0));
        assert_eq!(report[1].group, "total");
    }

    #[test]
    fn empty_input_gives_only_total() {
        let report = variability_report(&[], CountryTable::builtin(), GroupBy::IncomeGroup);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].n_obs, 0);
        assert_eq!(report[0].mean_range, None);
    }
}
