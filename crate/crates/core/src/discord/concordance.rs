use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{mean, Collapse};
use crate::model::{GiniObservation, SourceDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NullReason {
    InsufficientOverlap,
    ZeroVariance,
}

/// Agreement between two databases over the country-years both cover.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceCell {
    pub db_a: SourceDb,
    pub db_b: SourceDb,
    pub n_overlap: usize,
    pub pearson: Option<f64>,
    pub mad_pp: Option<f64>,
    pub null_reason: Option<NullReason>,
}

/// Full square matrix over the databases present, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceMatrix {
    pub databases: Vec<SourceDb>,
    pub min_overlap: usize,
    pub cells: Vec<ConcordanceCell>,
}

impl ConcordanceMatrix {
    pub fn get(&self, a: SourceDb, b: SourceDb) -> Option<&ConcordanceCell> {
        let i = self.databases.iter().position(|d| *d == a)?;
        let j = self.databases.iter().position(|d| *d == b)?;
        self.cells.get(i * self.databases.len() + j)
    }
}

type Series = BTreeMap<(String, i32), f64>;

fn collapse_by_database(
    observations: &[GiniObservation],
    collapse: Collapse,
) -> BTreeMap<SourceDb, Series> {
    let mut raw: BTreeMap<SourceDb, BTreeMap<(String, i32), Vec<f64>>> = BTreeMap::new();
    for o in observations {
        raw.entry(o.source_db)
            .or_default()
            .entry((o.country_iso3.clone(), o.year))
            .or_default()
            .push(o.gini_pp);
    }
    raw.into_iter()
        .map(|(db, cells)| {
            let series = cells
                .into_iter()
                .map(|(k, mut v)| (k, collapse.apply(&mut v)))
                .collect();
            (db, series)
        })
        .collect()
}

fn pair_cell(a: SourceDb, b: SourceDb, sa: &Series, sb: &Series, min_overlap: usize) -> ConcordanceCell {
    let (xs, ys): (Vec<f64>, Vec<f64>) = sa
        .iter()
        .filter_map(|(k, x)| sb.get(k).map(|y| (*x, *y)))
        .unzip();
    let n = xs.len();
    let mut cell = ConcordanceCell {
        db_a: a,
        db_b: b,
        n_overlap: n,
        pearson: None,
        mad_pp: None,
        null_reason: None,
    };
    if n < min_overlap || n == 0 {
        cell.null_reason = Some(NullReason::InsufficientOverlap);
        return cell;
    }
    let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).collect();
    cell.mad_pp = Some(mean(&diffs));

    let mx = mean(&xs);
    let my = mean(&ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        cell.null_reason = Some(NullReason::ZeroVariance);
    } else {
        cell.pearson = Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
    }
    cell
}

/// Pearson correlation and mean absolute difference for every pair of
/// databases present in `observations`.
///
/// Each database's observations are first reduced to one value per
/// country-year with `collapse`. Pairs sharing fewer than `min_overlap`
/// country-years get null statistics. Each unordered pair is computed once
/// and mirrored, so the matrix is exactly symmetric.
pub fn pairwise_concordance(
    observations: &[GiniObservation],
    min_overlap: usize,
    collapse: Collapse,
) -> ConcordanceMatrix {
    let series = collapse_by_database(observations, collapse);
    let databases: Vec<SourceDb> = series.keys().copied().collect();
    let k = databases.len();

    let upper: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let computed: Vec<ConcordanceCell> = upper
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (databases[i], databases[j]);
            pair_cell(a, b, &series[&a], &series[&b], min_overlap)
        })
        .collect();
    let lookup: BTreeMap<(usize, usize), &ConcordanceCell> =
        upper.iter().copied().zip(computed.iter()).collect();

    let mut cells = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let a = databases[i];
            let b = databases[j];
            let cell = if i == j {
                let n = series[&a].len();
                let enough = n >= min_overlap && n > 0;
                ConcordanceCell {
                    db_a: a,
                    db_b: a,
                    n_overlap: n,
                    pearson: enough.then_some(1.0),
                    mad_pp: enough.then_some(0.0),
                    null_reason: (!enough).then_some(NullReason::InsufficientOverlap),
                }
            } else {
                let src = lookup[&(i.min(j), i.max(j))];
                ConcordanceCell {
                    db_a: a,
                    db_b: b,
                    ..src.clone()
                }
            };
            cells.push(cell);
        }
    }
    ConcordanceMatrix {
        databases,
        min_overlap,
        cells,
    }
}
