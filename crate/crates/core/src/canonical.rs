//! Reading and writing the canonical observation file.
//!
//! The file is comma-separated UTF-8 with LF line endings, one header row,
//! and the Gini printed with exactly four decimals. Writers always emit rows
//! in canonical order.

use std::io::{Read, Write};
use std::path::Path;

use crate::country::CountryTable;
use crate::error::CanonicalError;
use crate::model::{
    describe_violations, sort_canonical, validate_observation, GiniObservation,
};

pub const COLUMNS: [&str; 12] = [
    "source_db",
    "country_iso3",
    "year",
    "gini_pp",
    "welfare_metric",
    "metric_type",
    "reference_unit",
    "equivalence_scale",
    "area_coverage",
    "subgroup",
    "provenance_origin",
    "survey_name",
];

/// Field values of one observation, in column order.
pub fn record_fields(obs: &GiniObservation) -> [String; 12] {
    [
        obs.source_db.to_string(),
        obs.country_iso3.clone(),
        obs.year.to_string(),
        obs.gini_token(),
        obs.welfare_metric.to_string(),
        obs.metric_type.to_string(),
        obs.reference_unit.to_string(),
        obs.equivalence_scale.to_string(),
        obs.area_coverage.to_string(),
        obs.subgroup.to_string(),
        obs.provenance_origin.to_string(),
        obs.survey_name.clone().unwrap_or_default(),
    ]
}

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes `observations` in canonical order. The input slice is not
/// reordered; a sorted copy is written if needed.
pub fn write_observations<W: Write>(
    out: W,
    observations: &[GiniObservation],
) -> Result<(), CanonicalError> {
    let mut sorted;
    let rows = if observations
        .windows(2)
        .all(|w| w[0].sort_key() <= w[1].sort_key())
    {
        observations
    } else {
        sorted = observations.to_vec();
        sort_canonical(&mut sorted);
        &sorted
    };
    let mut wtr = csv_writer(out);
    wtr.write_record(COLUMNS)?;
    for obs in rows {
        wtr.write_record(record_fields(obs))?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_bytes(observations: &[GiniObservation]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_observations(&mut buf, observations).expect("writing to memory cannot fail");
    buf
}

pub fn write_file(path: &Path, observations: &[GiniObservation]) -> Result<(), CanonicalError> {
    let file = std::fs::File::create(path).map_err(|source| CanonicalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_observations(std::io::BufWriter::new(file), observations)
}

/// One parsed row with its physical line number.
#[derive(Debug, Clone)]
pub struct CanonicalRow {
    pub line: u64,
    pub observation: GiniObservation,
}

fn parse_record(record: &csv::StringRecord) -> Result<GiniObservation, String> {
    if record.len() != COLUMNS.len() {
        return Err(format!(
            "expected {} fields, found {}",
            COLUMNS.len(),
            record.len()
        ));
    }
    let f = |i: usize| record.get(i).unwrap_or("");
    let e = |err: crate::error::VocabularyError| err.to_string();
    let year = f(2)
        .parse::<i32>()
        .map_err(|_| format!("year '{}' is not an integer", f(2)))?;
    let gini_pp = f(3)
        .parse::<f64>()
        .map_err(|_| format!("gini_pp '{}' is not a number", f(3)))?;
    let survey = f(11);
    Ok(GiniObservation {
        source_db: f(0).parse().map_err(e)?,
        country_iso3: f(1).to_string(),
        year,
        gini_pp,
        welfare_metric: f(4).parse().map_err(e)?,
        metric_type: f(5).parse().map_err(e)?,
        reference_unit: f(6).parse().map_err(e)?,
        equivalence_scale: f(7).parse().map_err(e)?,
        area_coverage: f(8).parse().map_err(e)?,
        subgroup: f(9).parse().map_err(e)?,
        provenance_origin: f(10).parse().map_err(e)?,
        survey_name: (!survey.is_empty()).then(|| survey.to_string()),
    })
}

/// Parses a canonical file without checking observation invariants.
///
/// Syntax problems (wrong header, bad field count, non-vocabulary tokens)
/// are errors carrying the line number.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<CanonicalRow>, CanonicalError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found.is_empty() && rdr.is_done() {
        return Ok(Vec::new());
    }
    if found != COLUMNS {
        return Err(CanonicalError::Header {
            expected: COLUMNS.join(","),
            found: found.join(","),
        });
    }
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let observation =
            parse_record(&record).map_err(|message| CanonicalError::Row { line, message })?;
        rows.push(CanonicalRow { line, observation });
    }
    Ok(rows)
}

/// Parses a canonical file and rejects it at the first row that violates an
/// observation invariant.
pub fn read_observations<R: Read>(
    input: R,
    meta: &CountryTable,
) -> Result<Vec<GiniObservation>, CanonicalError> {
    read_rows(input)?
        .into_iter()
        .map(|row| {
            let violations = validate_observation(&row.observation, meta);
            if violations.is_empty() {
                Ok(row.observation)
            } else {
                Err(CanonicalError::Row {
                    line: row.line,
                    message: describe_violations(&violations),
                })
            }
        })
        .collect()
}

pub fn read_file(path: &Path, meta: &CountryTable) -> Result<Vec<GiniObservation>, CanonicalError> {
    let file = std::fs::File::open(path).map_err(|source| CanonicalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_observations(std::io::BufReader::new(file), meta)
}
