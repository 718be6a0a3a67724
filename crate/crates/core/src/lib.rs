//! Harmonized cross-database Gini collection: ingestion, a weighted Gini
//! kernel, and discordance statistics.

#[macro_use]
mod model;

pub mod canonical;
pub mod country;
pub mod discord;
pub mod error;
pub mod ingest;
pub mod kernel;
pub mod manifest;
pub mod report;

pub use country::{CountryMeta, CountryTable, IncomeGroup, Region7};
pub use error::{
    CanonicalError, ConfigError, CountryTableError, DiscordError, IngestError, KernelError,
    VocabularyError,
};
pub use model::{
    current_year, describe_violations, first_out_of_order, sort_canonical, validate_observation,
    validate_observation_until, AreaCoverage, EqScale, GiniObservation, MetricType,
    ProvenanceOrigin, ReferenceUnit, SourceDb, Subgroup, Violation, WelfareMetric, MIN_YEAR,
};
