use std::io::{Read, Write};

use crate::canonical::{csv_writer, COLUMNS};
use crate::country::CountryTable;
use crate::error::IngestError;
use crate::ingest::config::{fold_token, Field, GiniScale, SourceConfig};
use crate::model::{
    describe_violations, validate_observation, AreaCoverage, EqScale, GiniObservation, MetricType,
    ReferenceUnit, Subgroup, WelfareMetric,
};

/// A source row that did not become an observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    /// Physical line of the row in the input file (the header is line 1).
    pub row_number: u64,
    /// Raw values for the canonical columns, as far as they could be read.
    pub fields: [String; 12],
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub accepted: Vec<GiniObservation>,
    pub rejects: Vec<Reject>,
    pub input_rows: usize,
}

/// Parses a year cell. Ranges spanning two calendar years (`2010-2011`,
/// `2010/11`) resolve to the later year.
pub fn parse_year(raw: &str) -> Option<i32> {
    let t = raw.trim();
    if let Ok(y) = t.parse::<i32>() {
        return Some(y);
    }
    if let Ok(f) = t.parse::<f64>() {
        if f.fract() == 0.0 && f.abs() < 1e5 {
            return Some(f as i32);
        }
        return None;
    }
    let (first, second) = t.split_once(['-', '/'])?;
    let first: i32 = first.trim().parse().ok()?;
    let second_str = second.trim();
    let second: i32 = second_str.parse().ok()?;
    let later = match second_str.len() {
        4 => second,
        1 | 2 => {
            let century = first - first.rem_euclid(100);
            let y = century + second;
            if y < first {
                y + 100
            } else {
                y
            }
        }
        _ => return None,
    };
    (later >= first).then_some(later)
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

struct Columns {
    index: Vec<(Field, usize)>,
}

impl Columns {
    fn resolve(config: &SourceConfig, headers: &csv::StringRecord) -> Result<Columns, IngestError> {
        let mut index = Vec::new();
        for (field, column) in &config.column_map {
            let pos = headers
                .iter()
                .position(|h| h.trim() == column)
                .ok_or_else(|| IngestError::MissingColumn {
                    field: field.to_string(),
                    column: column.clone(),
                })?;
            index.push((*field, pos));
        }
        Ok(Columns { index })
    }

    fn raw<'r>(&self, field: Field, record: &'r csv::StringRecord) -> Option<&'r str> {
        self.index
            .iter()
            .find(|(f, _)| *f == field)
            .and_then(|(_, i)| record.get(*i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }
}

struct RowParser<'a> {
    config: &'a SourceConfig,
    meta: &'a CountryTable,
    columns: Columns,
}

impl RowParser<'_> {
    /// Cell value, falling back to the configured default.
    fn value<'r>(&'r self, field: Field, record: &'r csv::StringRecord) -> Option<&'r str> {
        self.columns
            .raw(field, record)
            .or_else(|| self.config.defaults.get(&field).map(String::as_str))
    }

    /// Canonical token for a vocabulary field and whether the row itself
    /// supplied it (as opposed to a default or the `unknown` fallback).
    fn vocabulary<T: std::str::FromStr>(
        &self,
        field: Field,
        record: &csv::StringRecord,
        fallback: T,
        errors: &mut Vec<String>,
    ) -> (T, bool) {
        if let Some(raw) = self.columns.raw(field, record) {
            let mapped = self
                .config
                .value_map
                .get(&field)
                .and_then(|m| m.get(&fold_token(raw)));
            match mapped.map(String::as_str).unwrap_or(raw).parse::<T>() {
                Ok(v) => return (v, true),
                Err(_) => {
                    errors.push(format!("unrecognized {field} token '{raw}'"));
                    return (fallback, true);
                }
            }
        }
        match self.config.defaults.get(&field) {
            Some(d) => (d.parse::<T>().unwrap_or(fallback), false),
            None => (fallback, false),
        }
    }

    fn raw_fields(&self, record: &csv::StringRecord) -> [String; 12] {
        let get = |f: Field| self.value(f, record).unwrap_or("").to_string();
        [
            self.config.source_db.to_string(),
            get(Field::Country),
            get(Field::Year),
            get(Field::Gini),
            get(Field::WelfareMetric),
            get(Field::MetricType),
            get(Field::ReferenceUnit),
            get(Field::EquivalenceScale),
            get(Field::AreaCoverage),
            get(Field::Subgroup),
            get(Field::ProvenanceOrigin),
            get(Field::SurveyName),
        ]
    }

    fn parse(&self, record: &csv::StringRecord) -> Result<GiniObservation, String> {
        let mut errors = Vec::new();
        let db = self.config.source_db;

        let country = match self.value(Field::Country, record) {
            None => {
                errors.push("missing country".to_string());
                String::new()
            }
            Some(token) => match self.meta.normalize_country(token) {
                Some(code) => code.to_string(),
                None => {
                    errors.push(format!("unknown country '{token}'"));
                    String::new()
                }
            },
        };

        let year = match self.value(Field::Year, record) {
            None => {
                errors.push("missing year".to_string());
                0
            }
            Some(raw) => parse_year(raw).unwrap_or_else(|| {
                errors.push(format!("invalid year '{raw}'"));
                0
            }),
        };

        let gini_pp = match self.value(Field::Gini, record) {
            None => {
                errors.push("missing gini".to_string());
                f64::NAN
            }
            Some(raw) => match raw.parse::<f64>() {
                Ok(g) if g.is_finite() => match self.config.gini_scale {
                    GiniScale::UnitInterval => round4(g * 100.0),
                    GiniScale::Percent => {
                        if g <= 1.0 && !self.config.allow_low_percent {
                            errors.push(format!(
                                "gini {raw} <= 1.0 from a percent-scale source (unit-interval data mislabeled?)"
                            ));
                        }
                        round4(g)
                    }
                },
                _ => {
                    errors.push(format!("invalid gini '{raw}'"));
                    f64::NAN
                }
            },
        };

        let (welfare_metric, _) =
            self.vocabulary(Field::WelfareMetric, record, WelfareMetric::Unknown, &mut errors);
        let (mut metric_type, explicit_type) =
            self.vocabulary(Field::MetricType, record, MetricType::Unknown, &mut errors);
        if welfare_metric.is_spending() && !explicit_type {
            metric_type = MetricType::NotApplicable;
        }
        let (reference_unit, _) =
            self.vocabulary(Field::ReferenceUnit, record, ReferenceUnit::Unknown, &mut errors);
        let (equivalence_scale, _) =
            self.vocabulary(Field::EquivalenceScale, record, EqScale::Unknown, &mut errors);
        let (area_coverage, _) =
            self.vocabulary(Field::AreaCoverage, record, AreaCoverage::Unknown, &mut errors);
        let (subgroup, _) = self.vocabulary(Field::Subgroup, record, Subgroup::Unknown, &mut errors);
        let (provenance_origin, _) = self.vocabulary(
            Field::ProvenanceOrigin,
            record,
            db.default_origin(),
            &mut errors,
        );
        let survey_name = self.value(Field::SurveyName, record).map(String::from);

        if !errors.is_empty() {
            return Err(errors.join("; "));
        }

        let obs = GiniObservation {
            source_db: db,
            country_iso3: country,
            year,
            gini_pp,
            welfare_metric,
            metric_type,
            reference_unit,
            equivalence_scale,
            area_coverage,
            subgroup,
            provenance_origin,
            survey_name,
        };
        let violations = validate_observation(&obs, self.meta);
        if violations.is_empty() {
            Ok(obs)
        } else {
            Err(describe_violations(&violations))
        }
    }
}

/// Turns a source export into canonical observations.
///
/// Every data row ends up either accepted or rejected with a reason; only a
/// missing mapped column or an unreadable file fails the whole input.
pub fn parse_export<R: Read>(
    config: &SourceConfig,
    input: R,
    meta: &CountryTable,
) -> Result<ParseOutcome, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let parser = RowParser {
        config,
        meta,
        columns: Columns::resolve(config, &headers)?,
    };

    let mut outcome = ParseOutcome::default();
    for result in rdr.records() {
        let record = result?;
        outcome.input_rows += 1;
        let row_number = record.position().map(|p| p.line()).unwrap_or(0);
        let parsed = if record.len() != headers.len() {
            Err(format!(
                "row has {} fields, header has {}",
                record.len(),
                headers.len()
            ))
        } else {
            parser.parse(&record)
        };
        match parsed {
            Ok(obs) => outcome.accepted.push(obs),
            Err(reason) => outcome.rejects.push(Reject {
                row_number,
                fields: parser.raw_fields(&record),
                reason,
            }),
        }
    }
    Ok(outcome)
}

pub const REJECT_COLUMNS: [&str; 2] = ["row_number", "reason"];

/// Writes the reject sidecar: canonical columns plus `row_number,reason`.
pub fn write_rejects<W: Write>(out: W, rejects: &[Reject]) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(out);
    wtr.write_record(COLUMNS.iter().chain(REJECT_COLUMNS.iter()))?;
    for r in rejects {
        let mut row: Vec<String> = r.fields.to_vec();
        row.push(r.row_number.to_string());
        row.push(r.reason.clone());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
