mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ginidb::discord::{Collapse, GroupBy};
use ginidb::{AreaCoverage, EqScale, SourceDb, Subgroup};

/// Harmonized cross-database Gini collection tools.
#[derive(Debug, Parser)]
#[command(name = "ginidb", version)]
pub struct Cli {
    /// Output file; standard output when omitted. A manifest is written
    /// next to it as <out>.manifest.json.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Country reference table (CSV); the bundled table when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub meta: Option<PathBuf>,

    /// Area coverage admitted by stats and exports, or `any`. Default: national.
    #[arg(long, global = true, value_name = "TOKEN")]
    pub filter_coverage: Option<Choice<AreaCoverage>>,

    /// Subgroup admitted by stats and exports, or `any`. Default: overall.
    #[arg(long, global = true, value_name = "TOKEN")]
    pub filter_subgroup: Option<Choice<Subgroup>>,

    /// Suppress progress messages on standard error.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a source export into the canonical format.
    Ingest {
        #[arg(long)]
        source: SourceDb,
        /// Mapping config; the bundled config for the source when omitted.
        #[arg(long, value_name = "PATH")]
        mapping: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
    /// Merge canonical files, dropping duplicates.
    Merge {
        #[arg(required = true, value_name = "FILE")]
        inputs: Vec<PathBuf>,
    },
    /// Check a canonical file against the observation invariants.
    Validate {
        #[arg(value_name = "FILE")]
        input: PathBuf,
    },
    /// Discordance statistics.
    Stats {
        #[command(subcommand)]
        kind: StatsCommand,
    },
    /// Figure-ready data files.
    Export {
        #[command(subcommand)]
        kind: ExportCommand,
    },
    /// Gini coefficient of a single distribution.
    Gini {
        #[command(subcommand)]
        mode: GiniCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Within-country-year dispersion grouped by region or income group.
    Variability {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value = "region")]
        group_by: GroupBy,
        /// Take ranges over all observations or over per-database means.
        #[arg(long, value_enum, default_value_t = Basis::All)]
        basis: Basis,
        /// Also write the per-cell statistics to this file.
        #[arg(long, value_name = "PATH")]
        cells: Option<PathBuf>,
        #[command(flatten)]
        render: Render,
    },
    /// Pairwise correlation and mean absolute difference between databases.
    Concordance {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        min_overlap: usize,
        #[arg(long, default_value = "mean")]
        collapse: Collapse,
        #[command(flatten)]
        render: Render,
    },
    /// Income minus consumption Gini gaps.
    Gaps {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value = "region")]
        group_by: GroupBy,
        #[arg(long, default_value = "mean")]
        collapse: Collapse,
        #[command(flatten)]
        render: Render,
    },
    /// Observation counts and mean Gini per database.
    Summary {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[command(flatten)]
        render: Render,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Provenance edges origin -> database.
    Sankey {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[command(flatten)]
        render: Render,
    },
    /// Prevalent welfare metric per country.
    MetricMap {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[command(flatten)]
        render: Render,
    },
    /// Paired income and consumption Ginis per country-year.
    ScatterIncomeConsumption {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[arg(long, default_value = "mean")]
        collapse: Collapse,
        #[command(flatten)]
        render: Render,
    },
    /// Per-year five-number summaries for one country.
    Series {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        #[arg(long)]
        country: String,
        #[command(flatten)]
        render: Render,
    },
}

#[derive(Debug, Subcommand)]
pub enum GiniCommand {
    /// Unit records: welfare[,weight,household_size,adults,children].
    Micro {
        #[arg(value_name = "FILE")]
        input: PathBuf,
        /// Equivalence scale: per_capita, oecd_modified or square_root.
        #[arg(long)]
        scale: Option<EqScale>,
        /// Bottom treatment, `pip` or `pip:FLOOR`.
        #[arg(long, value_name = "RULE")]
        bottom: Option<Bottom>,
        #[arg(long, value_name = "CAP")]
        top_code: Option<f64>,
        /// Multiply by n/(n-1).
        #[arg(long)]
        small_sample: bool,
    },
    /// Grouped data: p,l points or share[,population] rows.
    Lorenz {
        #[arg(value_name = "FILE")]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Render {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    All,
    DbMeans,
}

/// A filter value: one vocabulary token, or `any`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice<T>(pub Option<T>);

impl<T: FromStr> FromStr for Choice<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("any") {
            return Ok(Choice(None));
        }
        s.parse().map(|v| Choice(Some(v))).map_err(|e: T::Err| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bottom {
    pub floor: f64,
}

impl FromStr for Bottom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (rule, floor) = match s.split_once(':') {
            Some((rule, floor)) => (rule, Some(floor)),
            None => (s, None),
        };
        if rule != "pip" {
            return Err(format!("unknown bottom rule '{rule}'"));
        }
        let floor = match floor {
            None => ginidb::kernel::PIP_FLOOR,
            Some(f) => f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| format!("invalid floor '{f}'"))?,
        };
        Ok(Bottom { floor })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let argv: Vec<String> = std::env::args().collect();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| commands::run(&cli, argv))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(failure)) => {
            eprintln!("ginidb: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
        Err(_) => ExitCode::from(2),
    }
}
