#![allow(dead_code)]

pub mod props;

use std::path::PathBuf;

use ginidb::discord::{self, analysis_filter, AnalysisFilter, Collapse, GroupBy, RangeBasis};
use ginidb::report;
use ginidb::{
    canonical, AreaCoverage, CountryTable, GiniObservation, MetricType, ReferenceUnit, SourceDb,
    Subgroup, WelfareMetric,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn golden() -> Vec<GiniObservation> {
    canonical::read_file(&fixture("golden.csv"), CountryTable::builtin()).unwrap()
}

/// Brute-force weighted Gini in percentage points:
/// Σᵢ Σⱼ wᵢwⱼ|xᵢ − xⱼ| / (2 W² μ).
pub fn oracle_gini(values: &[f64], weights: &[f64]) -> f64 {
    let w_total: f64 = weights.iter().sum();
    let mu = values.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / w_total;
    let mut acc = 0.0;
    for (xi, wi) in values.iter().zip(weights) {
        for (xj, wj) in values.iter().zip(weights) {
            acc += wi * wj * (xi - xj).abs();
        }
    }
    100.0 * acc / (2.0 * w_total * w_total * mu)
}

/// Trapezoid Gini of a Lorenz curve given as cumulative points, computed
/// independently of the kernel.
pub fn oracle_lorenz(points: &[(f64, f64)]) -> f64 {
    let mut prev = (0.0, 0.0);
    let mut area = 0.0;
    for &(p, l) in points {
        area += (p - prev.0) * (l + prev.1);
        prev = (p, l);
    }
    100.0 * (1.0 - area)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

const WELFARE: [WelfareMetric; 4] = [
    WelfareMetric::Income,
    WelfareMetric::Consumption,
    WelfareMetric::Expenditure,
    WelfareMetric::Unknown,
];

/// A random, valid collection. Countries and years are drawn from narrow
/// ranges so that many country-years are covered by several databases.
pub fn synthetic_collection(seed: u64, n: usize) -> Vec<GiniObservation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes: Vec<String> = CountryTable::builtin()
        .iter()
        .map(|m| m.country_iso3.clone())
        .take(80)
        .collect();
    (0..n)
        .map(|_| {
            let db = SourceDb::ALL[rng.gen_range(0..SourceDb::ALL.len())];
            let country = &codes[rng.gen_range(0..codes.len())];
            let year = rng.gen_range(1990..=2020);
            let gini = rng.gen_range(200_000..=650_000) as f64 / 10_000.0;
            let welfare = WELFARE[rng.gen_range(0..WELFARE.len())];
            let metric_type = if welfare.is_spending() {
                MetricType::NotApplicable
            } else {
                [MetricType::Gross, MetricType::Net, MetricType::Unknown][rng.gen_range(0..3)]
            };
            let unit = if db == SourceDb::Wid {
                ReferenceUnit::TaxUnit
            } else {
                [ReferenceUnit::PerCapita, ReferenceUnit::AdultEquivalent][rng.gen_range(0..2)]
            };
            let area = if rng.gen_bool(0.9) {
                AreaCoverage::National
            } else {
                AreaCoverage::Urban
            };
            let subgroup = if rng.gen_bool(0.95) {
                Subgroup::Overall
            } else {
                Subgroup::Quintile
            };
            let mut obs = GiniObservation::new(db, country, year, gini)
                .with_welfare(welfare, metric_type)
                .with_coverage(area, subgroup);
            obs.reference_unit = unit;
            if rng.gen_bool(0.3) {
                obs.survey_name = Some(format!("S{}", rng.gen_range(0..5)));
            }
            obs
        })
        .collect()
}

/// Every report the toolkit produces, concatenated.
pub fn all_reports(observations: &[GiniObservation], meta: &CountryTable) -> Vec<u8> {
    let obs = analysis_filter(observations, &AnalysisFilter::default());
    let mut out = Vec::new();
    let cells = discord::cell_variability(&obs, RangeBasis::AllObservations);
    out.extend(report::cells_table(&cells).to_csv_bytes());
    for g in [GroupBy::Region, GroupBy::IncomeGroup] {
        let rows = discord::variability_report(&cells, meta, g);
        out.extend(report::variability_table(&rows, g).to_csv_bytes());
        let gaps = discord::income_consumption_gaps(&obs, meta, g, Collapse::Mean);
        out.extend(report::gaps_table(&gaps, g).to_csv_bytes());
    }
    for c in [Collapse::Mean, Collapse::Median] {
        let m = discord::pairwise_concordance(&obs, 20, c);
        out.extend(report::concordance_table(&m).to_csv_bytes());
        let mut json = Vec::new();
        report::concordance_table(&m).write_json(&mut json).unwrap();
        out.extend(json);
    }
    out.extend(report::summary_table(&discord::dataset_summary(&obs)).to_csv_bytes());
    out.extend(report::metric_map_table(&discord::prevalent_metric(&obs)).to_csv_bytes());
    let pairs = discord::income_consumption_pairs(&obs, Collapse::Mean);
    out.extend(report::scatter_table(&pairs).to_csv_bytes());
    out.extend(report::sankey_table(&ginidb::ingest::provenance_edges(observations)).to_csv_bytes());
    out.extend(canonical::to_bytes(&ginidb::ingest::dedup(observations.to_vec())));
    out
}

/// Runs `f` on a dedicated rayon pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}
