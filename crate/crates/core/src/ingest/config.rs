//! Declarative per-source mapping configs.
//!
//! A config is a small key-value file:
//!
//! ```text
//! source_db = "WBPIP"
//! gini_scale = "unit_interval"
//!
//! [columns]
//! country = "country_code"
//! year = "reporting_year"
//! gini = "gini"
//! welfare_metric = "welfare_type"
//!
//! [values.welfare_metric]
//! "cons" = "consumption"
//!
//! [defaults]
//! reference_unit = "per_capita"
//! ```
//!
//! Keys under `[columns]`, `[values.*]` and `[defaults]` are canonical field
//! names. Value-map keys are source tokens (matched case-insensitively) and
//! the values are canonical vocabulary members.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use toml::{Table, Value};

use crate::error::{ConfigError, VocabularyError};
use crate::model::{
    AreaCoverage, EqScale, MetricType, ProvenanceOrigin, ReferenceUnit, SourceDb, Subgroup,
    WelfareMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Country,
    Year,
    Gini,
    WelfareMetric,
    MetricType,
    ReferenceUnit,
    EquivalenceScale,
    AreaCoverage,
    Subgroup,
    ProvenanceOrigin,
    SurveyName,
}

impl Field {
    pub const ALL: [Field; 11] = [
        Field::Country,
        Field::Year,
        Field::Gini,
        Field::WelfareMetric,
        Field::MetricType,
        Field::ReferenceUnit,
        Field::EquivalenceScale,
        Field::AreaCoverage,
        Field::Subgroup,
        Field::ProvenanceOrigin,
        Field::SurveyName,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Country => "country",
            Field::Year => "year",
            Field::Gini => "gini",
            Field::WelfareMetric => "welfare_metric",
            Field::MetricType => "metric_type",
            Field::ReferenceUnit => "reference_unit",
            Field::EquivalenceScale => "equivalence_scale",
            Field::AreaCoverage => "area_coverage",
            Field::Subgroup => "subgroup",
            Field::ProvenanceOrigin => "provenance_origin",
            Field::SurveyName => "survey_name",
        }
    }

    /// Fields whose values come from a controlled vocabulary.
    pub fn is_vocabulary(self) -> bool {
        !matches!(
            self,
            Field::Country | Field::Year | Field::Gini | Field::SurveyName
        )
    }

    /// Checks that `token` is a member of this field's vocabulary.
    pub fn check_token(self, token: &str) -> Result<(), VocabularyError> {
        fn check<T: FromStr<Err = VocabularyError>>(t: &str) -> Result<(), VocabularyError> {
            T::from_str(t).map(|_| ())
        }
        match self {
            Field::WelfareMetric => check::<WelfareMetric>(token),
            Field::MetricType => check::<MetricType>(token),
            Field::ReferenceUnit => check::<ReferenceUnit>(token),
            Field::EquivalenceScale => check::<EqScale>(token),
            Field::AreaCoverage => check::<AreaCoverage>(token),
            Field::Subgroup => check::<Subgroup>(token),
            Field::ProvenanceOrigin => check::<ProvenanceOrigin>(token),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Field::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownField(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiniScale {
    /// Values on [0, 1], multiplied by 100 at ingestion.
    UnitInterval,
    /// Values already in percentage points.
    Percent,
}

impl FromStr for GiniScale {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit_interval" => Ok(GiniScale::UnitInterval),
            "percent" => Ok(GiniScale::Percent),
            other => Err(ConfigError::Invalid {
                field: "gini_scale".into(),
                message: format!("'{other}' is not unit_interval or percent"),
            }),
        }
    }
}

/// Validated ingestion rules for one source export.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub source_db: SourceDb,
    pub gini_scale: GiniScale,
    pub delimiter: u8,
    /// Admits Ginis at or below 1.0 from a percent-scale source.
    pub allow_low_percent: bool,
    pub column_map: BTreeMap<Field, String>,
    /// Per field: folded source token to canonical token.
    pub value_map: BTreeMap<Field, BTreeMap<String, String>>,
    pub defaults: BTreeMap<Field, String>,
}

pub(crate) fn fold_token(token: &str) -> String {
    token.trim().to_lowercase()
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Finds the line of `key = ...` inside `[section]` for error messages.
fn locate(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut in_section = section.is_none();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            in_section = section.is_some_and(|s| line.trim_matches(|c| c == '[' || c == ']').trim() == s);
            continue;
        }
        if in_section {
            let lhs = line.split('=').next().unwrap_or("").trim().trim_matches('"');
            if lhs == key {
                return i + 1;
            }
        }
    }
    0
}

fn as_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        _ => None,
    }
}

impl SourceConfig {
    pub fn load(path: &Path) -> Result<SourceConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        SourceConfig::parse(&text)
    }

    /// The reference config shipped for `db`, with Table-1 style defaults.
    pub fn reference(db: SourceDb) -> SourceConfig {
        SourceConfig::parse(reference_text(db)).expect("shipped configs are valid")
    }

    pub fn parse(text: &str) -> Result<SourceConfig, ConfigError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;

        let mut source_db = None;
        let mut gini_scale = None;
        let mut delimiter = b',';
        let mut allow_low_percent = false;
        let mut column_map = BTreeMap::new();
        let mut value_map = BTreeMap::new();
        let mut defaults = BTreeMap::new();

        let invalid = |key: &str, message: String| ConfigError::Parse {
            line: locate(text, None, key),
            message: format!("{key}: {message}"),
        };

        for (key, value) in &table {
            match key.as_str() {
                "source_db" => {
                    let s = value
                        .as_str()
                        .ok_or_else(|| invalid(key, "expected a string".into()))?;
                    source_db = Some(s.parse::<SourceDb>()?);
                }
                "gini_scale" => {
                    let s = value
                        .as_str()
                        .ok_or_else(|| invalid(key, "expected a string".into()))?;
                    gini_scale = Some(s.parse::<GiniScale>()?);
                }
                "delimiter" => {
                    let s = value.as_str().unwrap_or("");
                    if s.len() != 1 {
                        return Err(invalid(key, "expected a single-byte string".into()));
                    }
                    delimiter = s.as_bytes()[0];
                }
                "allow_low_percent" => {
                    allow_low_percent = value
                        .as_bool()
                        .ok_or_else(|| invalid(key, "expected true or false".into()))?;
                }
                "columns" => {
                    let section = value
                        .as_table()
                        .ok_or_else(|| invalid(key, "expected a section".into()))?;
                    for (field, column) in section {
                        let f: Field = field.parse()?;
                        let column = column.as_str().ok_or_else(|| ConfigError::Parse {
                            line: locate(text, Some("columns"), field),
                            message: format!("columns.{field}: expected a column name"),
                        })?;
                        column_map.insert(f, column.to_string());
                    }
                }
                "values" => {
                    let section = value
                        .as_table()
                        .ok_or_else(|| invalid(key, "expected a section".into()))?;
                    for (field, entries) in section {
                        let f: Field = field.parse()?;
                        if !f.is_vocabulary() {
                            return Err(ConfigError::Invalid {
                                field: field.clone(),
                                message: "value maps apply to vocabulary fields only".into(),
                            });
                        }
                        let header = format!("values.{field}");
                        let entries = entries.as_table().ok_or_else(|| ConfigError::Parse {
                            line: locate(text, None, "values"),
                            message: format!("{header}: expected a section"),
                        })?;
                        let mut map = BTreeMap::new();
                        for (source_token, target) in entries {
                            let target = target.as_str().ok_or_else(|| ConfigError::Parse {
                                line: locate(text, Some(&header), source_token),
                                message: format!("{header}.{source_token}: expected a string"),
                            })?;
                            f.check_token(target)?;
                            if map
                                .insert(fold_token(source_token), target.trim().to_lowercase())
                                .is_some()
                            {
                                return Err(ConfigError::Parse {
                                    line: locate(text, Some(&header), source_token),
                                    message: format!(
                                        "{header}: '{source_token}' mapped twice (case-insensitive)"
                                    ),
                                });
                            }
                        }
                        value_map.insert(f, map);
                    }
                }
                "defaults" => {
                    let section = value
                        .as_table()
                        .ok_or_else(|| invalid(key, "expected a section".into()))?;
                    for (field, v) in section {
                        let f: Field = field.parse()?;
                        let v = as_string(v).ok_or_else(|| ConfigError::Parse {
                            line: locate(text, Some("defaults"), field),
                            message: format!("defaults.{field}: expected a scalar"),
                        })?;
                        validate_default(f, &v)?;
                        defaults.insert(f, v);
                    }
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }

        let source_db = source_db.ok_or(ConfigError::Unmapped("source_db"))?;
        let gini_scale = gini_scale.ok_or(ConfigError::Unmapped("gini_scale"))?;
        for required in [Field::Country, Field::Year, Field::Gini] {
            if !column_map.contains_key(&required) && !defaults.contains_key(&required) {
                return Err(ConfigError::Unmapped(required.as_str()));
            }
        }

        Ok(SourceConfig {
            source_db,
            gini_scale,
            delimiter,
            allow_low_percent,
            column_map,
            value_map,
            defaults,
        })
    }
}

fn validate_default(field: Field, value: &str) -> Result<(), ConfigError> {
    let invalid = |message: String| ConfigError::Invalid {
        field: field.as_str().into(),
        message,
    };
    match field {
        Field::Year => value
            .trim()
            .parse::<i32>()
            .map(|_| ())
            .map_err(|_| invalid(format!("'{value}' is not a year"))),
        Field::Gini => value
            .trim()
            .parse::<f64>()
            .map(|_| ())
            .map_err(|_| invalid(format!("'{value}' is not a number"))),
        Field::Country | Field::SurveyName => Ok(()),
        f => Ok(f.check_token(value)?),
    }
}

macro_rules! reference_configs {
    ($($db:ident => $file:literal),+ $(,)?) => {
        fn reference_text(db: SourceDb) -> &'static str {
            match db {
                $(SourceDb::$db => include_str!(concat!("../../configs/", $file)),)+
            }
        }
    };
}

reference_configs! {
    Adb => "adb.toml",
    Afristat => "afristat.toml",
    Atg => "atg.toml",
    Cepal => "cepal.toml",
    Eurostat => "eurostat.toml",
    Idb => "idb.toml",
    Lis => "lis.toml",
    Oecd => "oecd.toml",
    Sedlac => "sedlac.toml",
    Swiid => "swiid.toml",
    UnuWider => "unuwider.toml",
    WbPip => "wbpip.toml",
    Wid => "wid.toml",
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = SourceConfig::parse(
            r#"
source_db = "LIS"
gini_scale = "percent"

[columns]
country = "iso"
year = "yr"
gini = "gini"
"#,
        )
        .unwrap();
        assert_eq!(cfg.source_db, SourceDb::Lis);
        assert_eq!(cfg.gini_scale, GiniScale::Percent);
        assert_eq!(cfg.column_map[&Field::Country], "iso");
        assert_eq!(cfg.delimiter, b',');
    }

    #[test]
    fn missing_gini_mapping_is_an_error() {
        let err = SourceConfig::parse(
            r#"
source_db = "LIS"
gini_scale = "percent"
[columns]
country = "iso"
year = "yr"
"#,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "gini unmapped");
    }

    #[test]
    fn default_can_stand_in_for_a_column() {
        let cfg = SourceConfig::parse(
            r#"
source_db = "IDB"
gini_scale = "percent"
[columns]
year = "yr"
gini = "g"
[defaults]
country = "Colombia"
"#,
        )
        .unwrap();
        assert_eq!(cfg.defaults[&Field::Country], "Colombia");
    }

    #[test]
    fn value_map_accepts_vocabulary_members() {
        let cfg = SourceConfig::parse(
            r#"
source_db = "ADB"
gini_scale = "unit_interval"
[columns]
country = "c"
year = "y"
gini = "g"
welfare_metric = "w"
[values.welfare_metric]
"cons" = "consumption"
"Inc" = "income"
"#,
        )
        .unwrap();
        let map = &cfg.value_map[&Field::WelfareMetric];
        assert_eq!(map["cons"], "consumption");
        assert_eq!(map["inc"], "income");
    }

    #[test]
    fn unknown_enum_target_is_rejected() {
        let err = SourceConfig::parse(
            r#"
source_db = "ADB"
gini_scale = "percent"
[columns]
country = "c"
year = "y"
gini = "g"
[values.welfare_metric]
"cons" = "spending"
"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownTarget(_)), "{err}");
    }

    #[test]
    fn unknown_canonical_field_is_rejected() {
        let err = SourceConfig::parse(
            r#"
source_db = "ADB"
gini_scale = "percent"
[columns]
country = "c"
year = "y"
gini = "g"
theil = "t"
"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownField(ref f) if f == "theil"));
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let err = SourceConfig::parse("source_db = \"ADB\"\ngini_scale = \n[columns]\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_folded_tokens_are_rejected() {
        let err = SourceConfig::parse(
            r#"
source_db = "ADB"
gini_scale = "percent"
[columns]
country = "c"
year = "y"
gini = "g"
[values.welfare_metric]
"Cons" = "consumption"
"cons" = "consumption"
"#,
        )
        .unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_default_is_rejected() {
        let err = SourceConfig::parse(
            r#"
source_db = "ADB"
gini_scale = "percent"
[columns]
country = "c"
year = "y"
gini = "g"
[defaults]
reference_unit = "per_household"
"#,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownTarget(_)));
    }

    #[test]
    fn every_reference_config_loads() {
        for db in SourceDb::ALL {
            let cfg = SourceConfig::reference(*db);
            assert_eq!(cfg.source_db, *db);
        }
        assert_eq!(
            SourceConfig::reference(SourceDb::Wid).defaults[&Field::ReferenceUnit],
            "tax_unit"
        );
        let lis = SourceConfig::reference(SourceDb::Lis);
        assert_eq!(lis.defaults[&Field::WelfareMetric], "income");
        assert_eq!(lis.defaults[&Field::ReferenceUnit], "adult_equivalent");
    }
}
