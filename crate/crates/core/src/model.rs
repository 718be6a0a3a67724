//! Canonical observation schema and the controlled vocabularies used to
//! describe how each Gini value was measured.
//!
//! Every descriptor is a closed enum. Missing metadata is represented by an
//! explicit `Unknown` member and is never an empty string.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::country::CountryTable;

/// Declares a closed vocabulary enum with its canonical tokens.
///
/// Tokens are matched case-insensitively when parsing and always printed in
/// their canonical spelling.
macro_rules! vocabulary {
    (
        $(#[$meta:meta])*
        $name:ident, $label:literal {
            $( $(#[$vmeta:meta])* $variant:ident => $token:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash,
            ::serde::Serialize, ::serde::Deserialize,
        )]
        pub enum $name {
            $( $(#[$vmeta])* #[serde(rename = $token)] $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            pub const FIELD: &'static str = $label;

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::VocabularyError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                $(
                    if t.eq_ignore_ascii_case($token) {
                        return Ok($name::$variant);
                    }
                )+
                Err($crate::error::VocabularyError {
                    field: $label,
                    token: s.to_string(),
                })
            }
        }
    };
}

vocabulary! {
    /// The databases merged into the unified collection. Variants are declared
    /// in token order so the derived `Ord` matches the canonical sort.
    SourceDb, "source_db" {
        Adb => "ADB",
        Afristat => "AFRISTAT",
        Atg => "ATG",
        Cepal => "CEPAL",
        Eurostat => "EUROSTAT",
        Idb => "IDB",
        Lis => "LIS",
        Oecd => "OECD",
        Sedlac => "SEDLAC",
        Swiid => "SWIID",
        UnuWider => "UNUWIDER",
        WbPip => "WBPIP",
        Wid => "WID",
    }
}

impl SourceDb {
    /// Primary databases compute their Ginis from microdata; secondary ones
    /// compile them from other publications.
    pub fn is_primary(self) -> bool {
        matches!(
            self,
            SourceDb::Lis
                | SourceDb::WbPip
                | SourceDb::Wid
                | SourceDb::Cepal
                | SourceDb::Sedlac
                | SourceDb::Idb
                | SourceDb::Eurostat
        )
    }

    /// Provenance assumed for a row when the export does not say otherwise.
    pub fn default_origin(self) -> ProvenanceOrigin {
        if self.is_primary() {
            ProvenanceOrigin::NsaSurvey
        } else {
            ProvenanceOrigin::SecondaryDatabase
        }
    }
}

vocabulary! {
    WelfareMetric, "welfare_metric" {
        Income => "income",
        Consumption => "consumption",
        Expenditure => "expenditure",
        Unknown => "unknown",
    }
}

impl WelfareMetric {
    /// Consumption and expenditure aggregates both measure spending.
    pub fn is_spending(self) -> bool {
        matches!(self, WelfareMetric::Consumption | WelfareMetric::Expenditure)
    }
}

vocabulary! {
    MetricType, "metric_type" {
        Gross => "gross",
        Net => "net",
        Mixed => "mixed",
        NotApplicable => "not_applicable",
        Unknown => "unknown",
    }
}

vocabulary! {
    ReferenceUnit, "reference_unit" {
        PerCapita => "per_capita",
        AdultEquivalent => "adult_equivalent",
        Household => "household",
        TaxUnit => "tax_unit",
        Unknown => "unknown",
    }
}

vocabulary! {
    EqScale, "equivalence_scale" {
        PerCapita => "per_capita",
        OecdModified => "oecd_modified",
        SquareRoot => "square_root",
        Other => "other",
        NotApplicable => "not_applicable",
        Unknown => "unknown",
    }
}

vocabulary! {
    AreaCoverage, "area_coverage" {
        National => "national",
        Urban => "urban",
        Rural => "rural",
        MainCities => "main_cities",
        Other => "other",
        Unknown => "unknown",
    }
}

vocabulary! {
    Subgroup, "subgroup" {
        Overall => "overall",
        Gender => "gender",
        Age => "age",
        Ethnicity => "ethnicity",
        Quintile => "quintile",
        Other => "other",
        Unknown => "unknown",
    }
}

vocabulary! {
    ProvenanceOrigin, "provenance_origin" {
        NsaSurvey => "nsa_survey",
        SecondaryDatabase => "secondary_database",
        Administrative => "administrative",
        Unknown => "unknown",
    }
}

/// One harmonized Gini data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniObservation {
    pub source_db: SourceDb,
    pub country_iso3: String,
    pub year: i32,
    /// Percentage points on [0, 100].
    pub gini_pp: f64,
    pub welfare_metric: WelfareMetric,
    pub metric_type: MetricType,
    pub reference_unit: ReferenceUnit,
    pub equivalence_scale: EqScale,
    pub area_coverage: AreaCoverage,
    pub subgroup: Subgroup,
    pub provenance_origin: ProvenanceOrigin,
    pub survey_name: Option<String>,
}

impl GiniObservation {
    /// A national, overall-population observation with every other
    /// descriptor unknown.
    pub fn new(source_db: SourceDb, country_iso3: &str, year: i32, gini_pp: f64) -> Self {
        GiniObservation {
            source_db,
            country_iso3: country_iso3.to_string(),
            year,
            gini_pp,
            welfare_metric: WelfareMetric::Unknown,
            metric_type: MetricType::Unknown,
            reference_unit: ReferenceUnit::Unknown,
            equivalence_scale: EqScale::Unknown,
            area_coverage: AreaCoverage::National,
            subgroup: Subgroup::Overall,
            provenance_origin: source_db.default_origin(),
            survey_name: None,
        }
    }

    pub fn with_welfare(mut self, metric: WelfareMetric, metric_type: MetricType) -> Self {
        self.welfare_metric = metric;
        self.metric_type = metric_type;
        self
    }

    pub fn with_reference(mut self, unit: ReferenceUnit, scale: EqScale) -> Self {
        self.reference_unit = unit;
        self.equivalence_scale = scale;
        self
    }

    pub fn with_coverage(mut self, area: AreaCoverage, subgroup: Subgroup) -> Self {
        self.area_coverage = area;
        self.subgroup = subgroup;
        self
    }

    pub fn with_origin(mut self, origin: ProvenanceOrigin) -> Self {
        self.provenance_origin = origin;
        self
    }

    pub fn with_survey(mut self, name: &str) -> Self {
        self.survey_name = Some(name.to_string());
        self
    }

    /// The printed Gini, which is what identity and ordering are defined on.
    pub fn gini_token(&self) -> String {
        format!("{:.4}", self.gini_pp)
    }

    /// Canonical ordering key, extended past the published sort columns so
    /// that the order is total.
    pub(crate) fn sort_key(&self) -> SortKey<'_> {
        (
            self.source_db.as_str(),
            self.country_iso3.as_str(),
            self.year,
            self.welfare_metric.as_str(),
            self.metric_type.as_str(),
            self.reference_unit.as_str(),
            self.area_coverage.as_str(),
            self.subgroup.as_str(),
            self.equivalence_scale.as_str(),
            self.provenance_origin.as_str(),
            self.gini_token(),
            self.survey_name.as_deref().unwrap_or(""),
        )
    }

    /// Everything except the survey name.
    pub(crate) fn identity_key(&self) -> IdentityKey<'_> {
        let k = self.sort_key();
        (k.0, k.1, k.2, k.3, k.4, k.5, k.6, k.7, k.8, k.9, k.10)
    }
}

pub(crate) type SortKey<'a> = (
    &'a str,
    &'a str,
    i32,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    String,
    &'a str,
);

pub(crate) type IdentityKey<'a> = (
    &'a str,
    &'a str,
    i32,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    &'a str,
    String,
);

/// Sorts observations into canonical file order.
pub fn sort_canonical(observations: &mut [GiniObservation]) {
    let mut order: Vec<usize> = (0..observations.len()).collect();
    {
        let keys: Vec<SortKey<'_>> = observations.iter().map(GiniObservation::sort_key).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    }
    let sorted: Vec<GiniObservation> = order.iter().map(|&i| observations[i].clone()).collect();
    observations.clone_from_slice(&sorted);
}

/// Index of the first row that sorts before its predecessor.
pub fn first_out_of_order(observations: &[GiniObservation]) -> Option<usize> {
    observations
        .windows(2)
        .position(|w| w[0].sort_key() > w[1].sort_key())
        .map(|i| i + 1)
}

pub const MIN_YEAR: i32 = 1800;

/// One broken invariant on an observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    GiniOutOfRange,
    YearOutOfRange { year: i32, max_year: i32 },
    MalformedCountryCode(String),
    UnknownCountry(String),
    MetricTypeMustBeNotApplicable,
    TaxUnitOutsideWid,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GiniOutOfRange => f.write_str("gini_pp out of [0,100]"),
            Violation::YearOutOfRange { year, max_year } => {
                write!(f, "year {year} out of [{MIN_YEAR},{max_year}]")
            }
            Violation::MalformedCountryCode(c) => {
                write!(f, "country_iso3 '{c}' is not three uppercase letters")
            }
            Violation::UnknownCountry(c) => write!(f, "unknown country '{c}'"),
            Violation::MetricTypeMustBeNotApplicable => {
                f.write_str("metric_type must be not_applicable")
            }
            Violation::TaxUnitOutsideWid => {
                f.write_str("reference_unit tax_unit is only permitted for WID")
            }
        }
    }
}

/// Joins violations into a single reject reason.
pub fn describe_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn current_year() -> i32 {
    use chrono::Datelike;
    chrono::Utc::now().year()
}

/// Checks every invariant of `obs` against the current calendar year.
///
/// Returns all violations, not only the first; an empty list means the
/// observation can be stored.
pub fn validate_observation(obs: &GiniObservation, meta: &CountryTable) -> Vec<Violation> {
    validate_observation_until(obs, meta, current_year())
}

/// As [`validate_observation`] with an explicit upper bound on the year.
pub fn validate_observation_until(
    obs: &GiniObservation,
    meta: &CountryTable,
    max_year: i32,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(0.0..=100.0).contains(&obs.gini_pp) {
        out.push(Violation::GiniOutOfRange);
    }
    if obs.year < MIN_YEAR || obs.year > max_year {
        out.push(Violation::YearOutOfRange {
            year: obs.year,
            max_year,
        });
    }
    let code = &obs.country_iso3;
    if code.len() != 3 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
        out.push(Violation::MalformedCountryCode(code.clone()));
    } else if meta.get(code).is_none() {
        out.push(Violation::UnknownCountry(code.clone()));
    }
    if obs.welfare_metric.is_spending() && obs.metric_type != MetricType::NotApplicable {
        out.push(Violation::MetricTypeMustBeNotApplicable);
    }
    if obs.reference_unit == ReferenceUnit::TaxUnit && obs.source_db != SourceDb::Wid {
        out.push(Violation::TaxUnitOutsideWid);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colombia() -> GiniObservation {
        GiniObservation::new(SourceDb::WbPip, "COL", 2010, 54.7)
            .with_welfare(WelfareMetric::Income, MetricType::Net)
            .with_reference(ReferenceUnit::PerCapita, EqScale::PerCapita)
            .with_origin(ProvenanceOrigin::NsaSurvey)
            .with_survey("GEIH")
    }

    #[test]
    fn valid_observation_has_no_violations() {
        let table = CountryTable::builtin();
        assert!(validate_observation(&colombia(), table).is_empty());
    }

    #[test]
    fn gini_above_100_is_reported() {
        let table = CountryTable::builtin();
        let mut obs = colombia();
        obs.gini_pp = 101.0;
        let v = validate_observation(&obs, table);
        assert_eq!(v, vec![Violation::GiniOutOfRange]);
        assert_eq!(v[0].to_string(), "gini_pp out of [0,100]");
    }

    #[test]
    fn consumption_requires_not_applicable_metric_type() {
        let table = CountryTable::builtin();
        let obs = colombia().with_welfare(WelfareMetric::Consumption, MetricType::Gross);
        let v = validate_observation(&obs, table);
        assert_eq!(v, vec![Violation::MetricTypeMustBeNotApplicable]);
        assert_eq!(v[0].to_string(), "metric_type must be not_applicable");
    }

    #[test]
    fn all_violations_are_collected() {
        let table = CountryTable::builtin();
        let mut obs = colombia().with_reference(ReferenceUnit::TaxUnit, EqScale::Unknown);
        obs.gini_pp = f64::NAN;
        obs.year = 1700;
        obs.country_iso3 = "col".into();
        let v = validate_observation(&obs, table);
        assert_eq!(v.len(), 4, "{v:?}");
    }

    #[test]
    fn unknown_and_malformed_countries_differ() {
        let table = CountryTable::builtin();
        let mut obs = colombia();
        obs.country_iso3 = "QQQ".into();
        assert_eq!(
            validate_observation(&obs, table),
            vec![Violation::UnknownCountry("QQQ".into())]
        );
        obs.country_iso3 = "CO".into();
        assert!(matches!(
            validate_observation(&obs, table)[0],
            Violation::MalformedCountryCode(_)
        ));
    }

    #[test]
    fn tax_unit_allowed_for_wid_only() {
        let table = CountryTable::builtin();
        let mut obs = GiniObservation::new(SourceDb::Wid, "FRA", 1900, 60.0)
            .with_reference(ReferenceUnit::TaxUnit, EqScale::NotApplicable);
        assert!(validate_observation(&obs, table).is_empty());
        obs.source_db = SourceDb::Lis;
        assert_eq!(
            validate_observation(&obs, table),
            vec![Violation::TaxUnitOutsideWid]
        );
    }

    #[test]
    fn year_bounds() {
        let table = CountryTable::builtin();
        let mut obs = colombia();
        obs.year = 1867;
        assert!(validate_observation_until(&obs, table, 2024).is_empty());
        obs.year = 2025;
        assert!(!validate_observation_until(&obs, table, 2024).is_empty());
    }

    #[test]
    fn vocabulary_tokens_round_trip() {
        for db in SourceDb::ALL {
            assert_eq!(db.as_str().parse::<SourceDb>().unwrap(), *db);
        }
        assert_eq!(SourceDb::ALL.len(), 13);
        assert_eq!("Consumption".parse::<WelfareMetric>().unwrap(), WelfareMetric::Consumption);
        assert!("".parse::<WelfareMetric>().is_err());
        let err = "cons".parse::<WelfareMetric>().unwrap_err();
        assert_eq!(err.field, "welfare_metric");
    }

    #[test]
    fn source_db_order_matches_tokens() {
        let mut tokens: Vec<_> = SourceDb::ALL.iter().map(|d| d.as_str()).collect();
        let declared = tokens.clone();
        tokens.sort();
        assert_eq!(tokens, declared);
    }
}
