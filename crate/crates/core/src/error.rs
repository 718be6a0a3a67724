use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// A token that is not a member of a controlled vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("'{token}' is not a valid {field}")]
pub struct VocabularyError {
    pub field: &'static str,
    pub token: String,
}

#[derive(Debug, Error)]
pub enum CountryTableError {
    #[error("reading country table {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("country table line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("country table: duplicate iso3 {0}")]
    DuplicateCode(String),
    #[error("country table: alias '{alias}' maps to both {first} and {second}")]
    AmbiguousAlias {
        alias: String,
        first: String,
        second: String,
    },
}

/// Errors reading or writing the canonical observation file.
#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected '{expected}', found '{found}'")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

/// Errors loading a declarative source mapping.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown canonical field '{0}'")]
    UnknownField(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("{0}")]
    UnknownTarget(#[from] VocabularyError),
    #[error("{0} unmapped")]
    Unmapped(&'static str),
    #[error("invalid value for {field}: {message}")]
    Invalid { field: String, message: String },
}

/// Whole-file failures while parsing a source export. Row-level problems are
/// rejects, not errors.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("input is missing mapped column '{column}' (for {field})")]
    MissingColumn { field: String, column: String },
    #[error("{path}: {source}")]
    Canonical {
        path: PathBuf,
        #[source]
        source: CanonicalError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("at least 2 records are required, got {0}")]
    TooFewRecords(usize),
    #[error("weights must be positive and finite (record {0})")]
    InvalidWeight(usize),
    #[error("welfare must be finite (record {0})")]
    NonFiniteWelfare(usize),
    #[error("negative welfare at record {0}; apply bottom treatment first")]
    NegativeWelfare(usize),
    #[error("undefined Gini: mean welfare {0} is not positive")]
    UndefinedGini(f64),
    #[error("invalid Lorenz curve: {0}")]
    InvalidLorenz(String),
    #[error("household_size must be at least 1")]
    InvalidHouseholdSize,
    #[error("oecd_modified requires household composition with at least one adult")]
    MissingComposition,
    #[error("equivalence scale '{0}' cannot be applied")]
    UnsupportedScale(String),
    #[error("top-coding cap must be positive, got {0}")]
    InvalidCap(f64),
    #[error("bottom floor must be non-negative, got {0}")]
    InvalidFloor(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscordError {
    #[error("country '{0}' has no observations in the collection")]
    UnknownCountry(String),
}
