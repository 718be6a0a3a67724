use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use ginidb::canonical;
use ginidb::discord::{self, analysis_filter, AnalysisFilter, RangeBasis};
use ginidb::error::{CanonicalError, IngestError, KernelError};
use ginidb::ingest::{self, SourceConfig};
use ginidb::kernel::{self, GiniOptions, Transforms};
use ginidb::manifest::{manifest_path, sidecar_path, RunManifest};
use ginidb::report::{self, Table};
use ginidb::{CountryTable, GiniObservation, SourceDb};

use crate::{Basis, Cli, Command, ExportCommand, Format, GiniCommand, StatsCommand};

/// A failed command. Data failures exit 1, environment and configuration
/// failures exit 2.
#[derive(Debug)]
pub enum Failure {
    Data(anyhow::Error),
    Env(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 1,
            Failure::Env(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Data(e) | Failure::Env(e) => e,
        }
    }
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn env(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Env(e.into())
}

type Outcome = Result<(), Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    meta: &'a CountryTable,
    manifest: RunManifest,
    extra_outputs: Vec<PathBuf>,
}

pub fn run(cli: &Cli, argv: Vec<String>) -> Outcome {
    let loaded;
    let meta = match &cli.meta {
        Some(path) => {
            loaded = CountryTable::load(path)
                .with_context(|| format!("loading country table {}", path.display()))
                .map_err(env)?;
            &loaded
        }
        None => CountryTable::builtin(),
    };
    let mut ctx = Ctx {
        cli,
        meta,
        manifest: RunManifest::start(argv),
        extra_outputs: Vec::new(),
    };
    if let Some(path) = &cli.meta {
        ctx.input(path)?;
    }
    match &cli.command {
        Command::Ingest {
            source,
            mapping,
            input,
        } => ctx.ingest(*source, mapping.as_deref(), input),
        Command::Merge { inputs } => ctx.merge(inputs),
        Command::Validate { input } => ctx.validate(input),
        Command::Stats { kind } => ctx.stats(kind),
        Command::Export { kind } => ctx.export(kind),
        Command::Gini { mode } => ctx.gini(mode),
    }
}

impl Ctx<'_> {
    fn info(&self, message: &str) {
        if !self.cli.quiet {
            eprintln!("{message}");
        }
    }

    fn input(&mut self, path: &Path) -> Outcome {
        self.manifest
            .add_input(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(env)
    }

    /// Writes the primary output to `--out` (plus its manifest) or to
    /// standard output.
    fn emit(&mut self, bytes: &[u8]) -> Outcome {
        match &self.cli.out {
            Some(out) => {
                fs::write(out, bytes)
                    .with_context(|| format!("writing {}", out.display()))
                    .map_err(env)?;
                self.manifest.add_output(out).map_err(env)?;
                for extra in &self.extra_outputs {
                    self.manifest.add_output(extra).map_err(env)?;
                }
                let path = manifest_path(out);
                self.manifest
                    .write(&path)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(env)
            }
            None => {
                let mut stdout = io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .context("writing standard output")
                    .map_err(env)
            }
        }
    }

    fn emit_table(&mut self, table: &Table, format: Format) -> Outcome {
        let bytes = encode(table, format);
        self.emit(&bytes)
    }

    fn write_extra(&mut self, path: &Path, bytes: &[u8]) -> Outcome {
        fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(env)?;
        self.extra_outputs.push(path.to_path_buf());
        Ok(())
    }

    fn read_canonical(&mut self, path: &Path) -> Result<Vec<GiniObservation>, Failure> {
        self.input(path)?;
        let rows = canonical::read_file(path, self.meta)
            .with_context(|| format!("reading {}", path.display()));
        let rows = rows.map_err(|e| match e.downcast_ref::<CanonicalError>() {
            Some(CanonicalError::Io { .. }) => env(e),
            _ => data(e),
        })?;
        self.manifest.rows_in = Some(rows.len() as u64);
        Ok(rows)
    }

    /// Filter for the discordance statistics: national and overall unless
    /// overridden.
    fn analysis_filter(&self) -> AnalysisFilter {
        let defaults = AnalysisFilter::default();
        AnalysisFilter {
            coverage: self.cli.filter_coverage.map_or(defaults.coverage, |c| c.0),
            subgroup: self.cli.filter_subgroup.map_or(defaults.subgroup, |c| c.0),
        }
    }

    /// Filter for descriptive exports: everything unless overridden.
    fn descriptive_filter(&self) -> AnalysisFilter {
        AnalysisFilter {
            coverage: self.cli.filter_coverage.and_then(|c| c.0),
            subgroup: self.cli.filter_subgroup.and_then(|c| c.0),
        }
    }

    fn analysed(&mut self, path: &Path, filter: AnalysisFilter) -> Result<Vec<GiniObservation>, Failure> {
        let rows = self.read_canonical(path)?;
        let kept = analysis_filter(&rows, &filter);
        self.info(&format!("{} of {} observations pass the filter", kept.len(), rows.len()));
        Ok(kept)
    }

    fn ingest(&mut self, source: SourceDb, mapping: Option<&Path>, input: &Path) -> Outcome {
        let config = match mapping {
            Some(path) => {
                self.input(path)?;
                SourceConfig::load(path)
                    .with_context(|| format!("loading mapping {}", path.display()))
                    .map_err(env)?
            }
            None => SourceConfig::reference(source),
        };
        if config.source_db != source {
            return Err(env(anyhow!(
                "mapping is for {}, not {source}",
                config.source_db
            )));
        }
        self.input(input)?;
        let file = File::open(input)
            .with_context(|| format!("opening {}", input.display()))
            .map_err(env)?;
        let outcome = ingest::parse_export(&config, BufReader::new(file), self.meta)
            .with_context(|| format!("parsing {}", input.display()))
            .map_err(|e| match e.downcast_ref::<IngestError>() {
                Some(IngestError::Csv(c)) if !c.is_io_error() => data(e),
                _ => env(e),
            })?;

        let mut accepted = outcome.accepted;
        ginidb::sort_canonical(&mut accepted);
        self.manifest.rows_in = Some(outcome.input_rows as u64);
        self.manifest.rows_out = Some(accepted.len() as u64);
        self.manifest.rows_rejected = Some(outcome.rejects.len() as u64);

        if let Some(out) = self.cli.out.clone() {
            let path = sidecar_path(&out, "rejects.csv");
            let mut buf = Vec::new();
            ingest::write_rejects(&mut buf, &outcome.rejects).map_err(env)?;
            self.write_extra(&path, &buf)?;
        } else {
            for r in outcome.rejects.iter().take(20) {
                self.info(&format!("row {}: {}", r.row_number, r.reason));
            }
        }
        self.emit(&canonical::to_bytes(&accepted))?;
        self.info(&format!(
            "{source}: {} rows, {} accepted, {} rejected",
            outcome.input_rows,
            accepted.len(),
            outcome.rejects.len()
        ));
        if accepted.is_empty() {
            return Err(data(anyhow!("no rows accepted from {}", input.display())));
        }
        Ok(())
    }

    fn merge(&mut self, inputs: &[PathBuf]) -> Outcome {
        for path in inputs {
            self.input(path)?;
        }
        let merged = ingest::merge_files(inputs, self.meta).map_err(|e| match &e {
            IngestError::Canonical {
                source: CanonicalError::Io { .. },
                ..
            } => env(e),
            _ => data(e),
        })?;
        self.manifest.rows_in = Some(merged.input_rows as u64);
        self.manifest.rows_out = Some(merged.observations.len() as u64);
        if let Some(out) = self.cli.out.clone() {
            let mut buf = Vec::new();
            ingest::merge::write_edges(&mut buf, &merged.edges).map_err(env)?;
            self.write_extra(&sidecar_path(&out, "provenance.csv"), &buf)?;
        }
        self.emit(&canonical::to_bytes(&merged.observations))?;
        self.info(&format!(
            "merged {} files: {} rows in, {} after removing duplicates",
            inputs.len(),
            merged.input_rows,
            merged.observations.len()
        ));
        Ok(())
    }

    fn validate(&mut self, input: &Path) -> Outcome {
        self.input(input)?;
        let file = File::open(input)
            .with_context(|| format!("opening {}", input.display()))
            .map_err(env)?;
        let rows = canonical::read_rows(BufReader::new(file))
            .with_context(|| format!("reading {}", input.display()))
            .map_err(|e| match e.downcast_ref::<CanonicalError>() {
                Some(CanonicalError::Csv(c)) if c.is_io_error() => env(e),
                _ => data(e),
            })?;

        let mut problems = Table::new(&["line", "reason"]);
        let mut line_problem = |line: u64, reason: String| {
            problems.push(vec![report::Cell::Int(line as i64), report::Cell::Text(reason)]);
        };
        for row in &rows {
            let violations = ginidb::validate_observation(&row.observation, self.meta);
            if !violations.is_empty() {
                line_problem(row.line, ginidb::describe_violations(&violations));
            }
        }
        let observations: Vec<GiniObservation> = rows.iter().map(|r| r.observation.clone()).collect();
        if let Some(i) = ginidb::first_out_of_order(&observations) {
            line_problem(rows[i].line, "row is out of canonical order".to_string());
        }
        let distinct = ingest::dedup(observations.clone()).len();
        if distinct < observations.len() {
            line_problem(0, format!("{} duplicate rows", observations.len() - distinct));
        }

        self.manifest.rows_in = Some(rows.len() as u64);
        self.emit_table(&problems, Format::Csv)?;
        let n = problems.rows.len();
        if n > 0 {
            return Err(data(anyhow!("{n} problems in {} rows", rows.len())));
        }
        self.info(&format!("{} rows valid", rows.len()));
        Ok(())
    }

    fn stats(&mut self, kind: &StatsCommand) -> Outcome {
        let filter = self.analysis_filter();
        match kind {
            StatsCommand::Variability {
                input,
                group_by,
                basis,
                cells,
                render,
            } => {
                let obs = self.analysed(input, filter)?;
                let basis = match basis {
                    Basis::All => RangeBasis::AllObservations,
                    Basis::DbMeans => RangeBasis::DatabaseMeans,
                };
                let cell_stats = discord::cell_variability(&obs, basis);
                if let Some(path) = cells {
                    let bytes = encode(&report::cells_table(&cell_stats), render.format);
                    self.write_extra(path, &bytes)?;
                }
                let rows = discord::variability_report(&cell_stats, self.meta, *group_by);
                self.manifest.rows_out = Some(cell_stats.len() as u64);
                self.emit_table(&report::variability_table(&rows, *group_by), render.format)
            }
            StatsCommand::Concordance {
                input,
                min_overlap,
                collapse,
                render,
            } => {
                let obs = self.analysed(input, filter)?;
                let matrix = discord::pairwise_concordance(&obs, *min_overlap, *collapse);
                self.emit_table(&report::concordance_table(&matrix), render.format)
            }
            StatsCommand::Gaps {
                input,
                group_by,
                collapse,
                render,
            } => {
                let obs = self.analysed(input, filter)?;
                let pairs = discord::income_consumption_pairs(&obs, *collapse);
                self.manifest.rows_out = Some(pairs.len() as u64);
                let rows = discord::gap_report(&pairs, self.meta, *group_by);
                self.emit_table(&report::gaps_table(&rows, *group_by), render.format)
            }
            StatsCommand::Summary { input, render } => {
                let obs = self.analysed(input, filter)?;
                let rows = discord::dataset_summary(&obs);
                self.emit_table(&report::summary_table(&rows), render.format)
            }
        }
    }

    fn export(&mut self, kind: &ExportCommand) -> Outcome {
        match kind {
            ExportCommand::Sankey { input, render } => {
                let obs = self.analysed(input, self.descriptive_filter())?;
                let edges = ingest::provenance_edges(&obs);
                self.emit_table(&report::sankey_table(&edges), render.format)
            }
            ExportCommand::MetricMap { input, render } => {
                let obs = self.analysed(input, self.analysis_filter())?;
                let rows = discord::prevalent_metric(&obs);
                self.emit_table(&report::metric_map_table(&rows), render.format)
            }
            ExportCommand::ScatterIncomeConsumption {
                input,
                collapse,
                render,
            } => {
                let obs = self.analysed(input, self.analysis_filter())?;
                let pairs = discord::income_consumption_pairs(&obs, *collapse);
                self.emit_table(&report::scatter_table(&pairs), render.format)
            }
            ExportCommand::Series {
                input,
                country,
                render,
            } => {
                let obs = self.analysed(input, self.analysis_filter())?;
                let iso3 = self
                    .meta
                    .normalize_country(country)
                    .map(str::to_string)
                    .unwrap_or_else(|| country.to_uppercase());
                let rows = discord::country_series(&obs, &iso3).map_err(data)?;
                self.emit_table(&report::series_table(&iso3, &rows), render.format)
            }
        }
    }

    fn gini(&mut self, mode: &GiniCommand) -> Outcome {
        let value = match mode {
            GiniCommand::Micro {
                input,
                scale,
                bottom,
                top_code,
                small_sample,
            } => {
                let file = self.open(input)?;
                let records = kernel::read_microdata(file)
                    .with_context(|| format!("reading {}", input.display()))
                    .map_err(data)?;
                self.manifest.rows_in = Some(records.len() as u64);
                let transforms = Transforms {
                    bottom_floor: bottom.map(|b| b.floor),
                    scale: *scale,
                    top_cap: *top_code,
                };
                let records = kernel::apply_transforms(&records, &transforms).map_err(kernel_failure)?;
                let options = GiniOptions {
                    small_sample_correction: *small_sample,
                };
                kernel::gini_microdata_with(&records, options).map_err(kernel_failure)?
            }
            GiniCommand::Lorenz { input } => {
                let file = self.open(input)?;
                let points = kernel::read_lorenz(file).map_err(kernel_failure)?;
                self.manifest.rows_in = Some(points.len() as u64);
                kernel::gini_lorenz(&points).map_err(kernel_failure)?
            }
        };
        self.emit(format!("{value:.4}\n").as_bytes())
    }

    fn open(&mut self, path: &Path) -> Result<BufReader<File>, Failure> {
        self.input(path)?;
        File::open(path)
            .map(BufReader::new)
            .with_context(|| format!("opening {}", path.display()))
            .map_err(env)
    }
}

/// Bad transform parameters come from flags; everything else is the data.
fn kernel_failure(e: KernelError) -> Failure {
    match e {
        KernelError::InvalidCap(_) | KernelError::InvalidFloor(_) | KernelError::UnsupportedScale(_) => {
            env(e)
        }
        _ => data(e),
    }
}

fn encode(table: &Table, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => table.to_csv_bytes(),
        Format::Json => {
            let mut buf = Vec::new();
            table.write_json(&mut buf).expect("writing to memory");
            buf
        }
    }
}
