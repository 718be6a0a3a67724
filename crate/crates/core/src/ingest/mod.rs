//! Ingestion of per-source exports into the canonical collection.

pub mod config;
pub mod merge;
pub mod parse;

pub use config::{Field, GiniScale, SourceConfig};
pub use merge::{dedup, merge, merge_files, provenance_edges, MergeOutput, ProvenanceEdge};
pub use parse::{parse_export, parse_year, write_rejects, ParseOutcome, Reject};
