use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{self, csv_writer};
use crate::country::CountryTable;
use crate::error::IngestError;
use crate::model::{sort_canonical, GiniObservation, SourceDb};

/// Observation count flowing from one origin into one database.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ProvenanceEdge {
    pub origin: String,
    pub destination: SourceDb,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutput {
    /// Rows across all inputs before duplicates were removed.
    pub input_rows: usize,
    pub observations: Vec<GiniObservation>,
    pub edges: Vec<ProvenanceEdge>,
}

/// Collapses rows that agree on every field except the survey name.
///
/// The result is in canonical order. Of a collapsed group, the first
/// non-empty survey name in that order is kept.
pub fn dedup(mut observations: Vec<GiniObservation>) -> Vec<GiniObservation> {
    sort_canonical(&mut observations);
    let mut out: Vec<GiniObservation> = Vec::with_capacity(observations.len());
    for obs in observations {
        match out.last_mut() {
            Some(prev) if prev.identity_key() == obs.identity_key() => {
                if prev.survey_name.is_none() {
                    prev.survey_name = obs.survey_name;
                }
            }
            _ => out.push(obs),
        }
    }
    out
}

pub fn provenance_edges(observations: &[GiniObservation]) -> Vec<ProvenanceEdge> {
    let mut counts: BTreeMap<(&str, SourceDb), usize> = BTreeMap::new();
    for obs in observations {
        *counts
            .entry((obs.provenance_origin.as_str(), obs.source_db))
            .or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((origin, destination), weight)| ProvenanceEdge {
            origin: origin.to_string(),
            destination,
            weight,
        })
        .collect()
}

/// Concatenates collections, removes duplicates, sorts, and counts
/// provenance edges over the result.
pub fn merge(collections: Vec<Vec<GiniObservation>>) -> MergeOutput {
    let input_rows = collections.iter().map(Vec::len).sum();
    let observations = dedup(collections.into_iter().flatten().collect());
    let edges = provenance_edges(&observations);
    MergeOutput {
        input_rows,
        observations,
        edges,
    }
}

/// Reads canonical files (concurrently) and merges them. The first invalid
/// file in argument order aborts the merge.
pub fn merge_files(paths: &[PathBuf], meta: &CountryTable) -> Result<MergeOutput, IngestError> {
    let parsed: Vec<Result<Vec<GiniObservation>, IngestError>> = paths
        .par_iter()
        .map(|p| {
            canonical::read_file(p, meta).map_err(|source| IngestError::Canonical {
                path: p.clone(),
                source,
            })
        })
        .collect();
    let collections = parsed.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(merge(collections))
}

pub const PROVENANCE_COLUMNS: [&str; 3] = ["origin", "destination", "weight"];

pub fn write_edges<W: Write>(out: W, edges: &[ProvenanceEdge]) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(out);
    wtr.write_record(PROVENANCE_COLUMNS)?;
    for e in edges {
        wtr.write_record([
            e.origin.as_str(),
            e.destination.as_str(),
            &e.weight.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_edges_file(path: &Path, edges: &[ProvenanceEdge]) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_edges(std::io::BufWriter::new(file), edges)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn obs(db: SourceDb, c: &str, y: i32, g: f64) -> GiniObservation {
        GiniObservation::new(db, c, y, g).with_welfare(WelfareMetric::Income, MetricType::Net)
    }

    #[test]
    fn identical_rows_collapse() {
        let a = obs(SourceDb::Lis, "COL", 2010, 40.0);
        assert_eq!(dedup(vec![a.clone(), a]).len(), 1);
    }

    #[test]
    fn different_gini_is_not_a_duplicate() {
        let a = obs(SourceDb::Lis, "COL", 2010, 40.0);
        let b = obs(SourceDb::Lis, "COL", 2010, 40.1);
        assert_eq!(dedup(vec![a, b]).len(), 2);
    }

    #[test]
    fn source_db_is_part_of_identity() {
        let a = obs(SourceDb::Lis, "COL", 2010, 40.0);
        let b = obs(SourceDb::Oecd, "COL", 2010, 40.0);
        assert_eq!(dedup(vec![a, b]).len(), 2);
    }

    #[test]
    fn survey_name_does_not_split_duplicates() {
        let a = obs(SourceDb::Lis, "COL", 2010, 40.0).with_survey("ECV");
        let b = obs(SourceDb::Lis, "COL", 2010, 40.0).with_survey("GEIH");
        let c = obs(SourceDb::Lis, "COL", 2010, 40.0);
        let out = dedup(vec![b, c, a]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].survey_name.as_deref(), Some("ECV"));
    }

    #[test]
    fn provenance_edges_count_per_origin() {
        let nsa = |y| {
            obs(SourceDb::WbPip, "COL", y, 50.0).with_origin(ProvenanceOrigin::NsaSurvey)
        };
        let rows = vec![
            nsa(2010),
            nsa(2011),
            obs(SourceDb::WbPip, "BRA", 2010, 52.0)
                .with_origin(ProvenanceOrigin::SecondaryDatabase),
        ];
        let out = merge(vec![rows]);
        assert_eq!(
            out.edges,
            vec![
                ProvenanceEdge {
                    origin: "nsa_survey".into(),
                    destination: SourceDb::WbPip,
                    weight: 2
                },
                ProvenanceEdge {
                    origin: "secondary_database".into(),
                    destination: SourceDb::WbPip,
                    weight: 1
                },
            ]
        );
    }

    #[test]
    fn disjoint_union_and_idempotence() {
        let make = |db, n: i32| (0..n).map(|i| obs(db, "COL", 1950 + i, 40.0)).collect::<Vec<_>>();
        let (a, b, c) = (make(SourceDb::Lis, 10), make(SourceDb::Oecd, 20), make(SourceDb::Wid, 30));
        assert_eq!(merge(vec![a.clone(), b, c]).observations.len(), 60);
        let (twice, once) = (merge(vec![a.clone(), a.clone()]), merge(vec![a]));
        assert_eq!((twice.observations, twice.edges), (once.observations, once.edges));
        assert_eq!((twice.input_rows, once.input_rows), (20, 10));
    }

    #[test]
    fn edge_file_layout() {
        let mut buf = Vec::new();
        write_edges(
            &mut buf,
            &[ProvenanceEdge {
                origin: "nsa_survey".into(),
                destination: SourceDb::WbPip,
                weight: 2,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "origin,destination,weight\nnsa_survey,WBPIP,2\n");
    }
}
