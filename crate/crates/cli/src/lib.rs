//! Command-line front end for the torsion pipeline: fetch, validate,
//! analyze, and survey, rendered as text, CSV, or structured records, with
//! stable exit codes for scripting.

use clap::{Parser, Subcommand, ValueEnum};
use modtors::engine::{analyze_record, survey, BoundPolicy, Survey, TorsionAnalysis};
use modtors::newform::{
    fetch_newforms, parse_dataset_path, serialize_record, validate_record, DatasetManifest,
    DatasetSource, FetchOptions, NewformRecord, ValidationReport,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// The normative CSV header; scripts may rely on it never changing.
pub const CSV_HEADER: &str = "label,level,dim,bound,G,T,sharp,stabilized";

#[derive(Debug, Parser)]
#[command(
    name = "modtors",
    version,
    about = "Torsion-order prediction for modular abelian varieties over Q"
)]
pub struct Cli {
    /// Directory holding newforms.jsonl and manifest.json.
    #[arg(long, global = true, default_value = "data")]
    pub data_dir: PathBuf,

    /// Cache directory for raw API responses; defaults to the
    /// MODTORS_CACHE_DIR environment variable, then <data-dir>/cache.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Window bound: "auto" (the Sturm bound, minimally extended so at
    /// least two primes are admitted) or an explicit integer.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_bound)]
    pub prime_bound: BoundArg,

    /// Admit p = 2 into prime windows (excluded by default).
    #[arg(long, global = true)]
    pub include_p2: bool,

    /// Seed for internal randomized subroutines. Factorizations are
    /// reported in a canonical order, so no output depends on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download newform data from the LMFDB into the cache and write the
    /// dataset files.
    Fetch {
        #[arg(long, default_value = "https://www.lmfdb.org")]
        base_url: String,
        #[arg(long, default_value_t = 1)]
        min_level: u32,
        #[arg(long, default_value_t = 500)]
        max_level: u32,
        #[arg(long, default_value_t = 1)]
        min_dim: u32,
        #[arg(long, default_value_t = 3)]
        max_dim: u32,
        /// Minimum spacing between live HTTP requests, in milliseconds.
        #[arg(long, default_value_t = 500)]
        rate_limit_ms: u64,
        /// Serve everything from the cache; a cache miss is an error.
        #[arg(long)]
        offline: bool,
    },
    /// Check dataset coverage and norm positivity.
    Validate {
        /// Restrict to one record.
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 1)]
        min_level: u32,
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Analyze one record: G, T, sharpness, and the per-ell breakdown.
    Analyze {
        #[arg(long)]
        label: String,
    },
    /// Aggregate every record of one dimension.
    Survey {
        #[arg(long)]
        dim: u32,
        #[arg(long, default_value_t = 1)]
        min_level: u32,
        #[arg(long)]
        max_level: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Structured,
}

/// Parsed --prime-bound value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundArg {
    Auto,
    Explicit(u64),
}

impl BoundArg {
    pub fn policy(self) -> BoundPolicy {
        match self {
            BoundArg::Auto => BoundPolicy::Auto,
            BoundArg::Explicit(bound) => BoundPolicy::Explicit(bound),
        }
    }
}

fn parse_bound(text: &str) -> Result<BoundArg, String> {
    if text == "auto" {
        return Ok(BoundArg::Auto);
    }
    text.parse::<u64>()
        .map(BoundArg::Explicit)
        .map_err(|_| format!("expected \"auto\" or an integer, got {text:?}"))
}

/// Maps library errors to the stable exit codes: 2 for data and argument
/// problems, 3 for fetch failures, 4 for internal-consistency violations.
/// (0 is success and 1 is reserved for command-line usage errors.)
pub fn exit_code(error: &modtors::Error) -> i32 {
    use modtors::Error::*;
    match error {
        InvalidArgument(_) | InvalidField(_) | MissingData(_) | CorruptData(_)
        | InvalidWindow(_) | EmptyDataset | Io(_) => 2,
        Fetch { .. } => 3,
        InternalConsistency(_) | InfiniteValuation | LiftingFailure(_) => 4,
    }
}

/// Flag beats environment beats the default under the data directory.
pub fn resolve_cache_dir(
    flag: Option<PathBuf>,
    env: Option<PathBuf>,
    data_dir: &Path,
) -> PathBuf {
    flag.or(env).unwrap_or_else(|| data_dir.join("cache"))
}

/// Executes the parsed command, writing data to stdout and warnings to
/// stderr.
pub fn run(cli: &Cli) -> modtors::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match &cli.command {
        Command::Fetch {
            base_url,
            min_level,
            max_level,
            min_dim,
            max_dim,
            rate_limit_ms,
            offline,
        } => {
            let cache_dir = resolve_cache_dir(
                cli.cache_dir.clone(),
                std::env::var_os("MODTORS_CACHE_DIR").map(PathBuf::from),
                &cli.data_dir,
            );
            let options = FetchOptions {
                base_url: base_url.clone(),
                cache_dir,
                levels: (*min_level, *max_level),
                dimensions: (*min_dim, *max_dim),
                rate_limit: std::time::Duration::from_millis(*rate_limit_ms),
                offline: *offline,
            };
            let outcome = fetch_newforms(&options)?;
            for diagnostic in &outcome.diagnostics {
                eprintln!("warning: {diagnostic}");
            }
            std::fs::create_dir_all(&cli.data_dir)?;
            let mut dataset = String::new();
            for record in &outcome.records {
                dataset.push_str(&serialize_record(record));
                dataset.push('\n');
            }
            std::fs::write(cli.data_dir.join("newforms.jsonl"), dataset)?;
            let manifest = DatasetManifest::summarize(
                &outcome.records,
                DatasetSource::LmfdbCache,
                "lmfdb-maxp",
            );
            std::fs::write(
                cli.data_dir.join("manifest.json"),
                serde_json::to_string(&manifest).expect("manifest serialization cannot fail"),
            )?;
            write!(
                stdout,
                "{}",
                render_fetch(&manifest, outcome.network_requests, outcome.cache_hits, cli.format)
            )?;
            Ok(())
        }
        Command::Validate {
            label,
            min_level,
            max_level,
        } => {
            let records = load_records(&cli.data_dir)?;
            let selected: Vec<&NewformRecord> = records
                .iter()
                .filter(|r| label.as_deref().is_none_or(|l| r.label() == l))
                .filter(|r| r.level() >= *min_level)
                .filter(|r| max_level.is_none_or(|m| r.level() <= m))
                .collect();
            if let Some(wanted) = label {
                if selected.is_empty() {
                    return Err(modtors::Error::MissingData(format!(
                        "record not found: {wanted}"
                    )));
                }
            }
            let reports: Vec<ValidationReport> = selected
                .iter()
                .map(|r| {
                    let required = match cli.prime_bound {
                        BoundArg::Auto => r.data_bound(),
                        BoundArg::Explicit(bound) => bound,
                    };
                    validate_record(r, required)
                })
                .collect();
            write!(stdout, "{}", render_validation(&reports, cli.format))?;
            let dirty = reports.iter().filter(|r| !r.is_clean()).count();
            if dirty > 0 {
                return Err(modtors::Error::CorruptData(format!(
                    "validation failed for {dirty} of {} records",
                    reports.len()
                )));
            }
            Ok(())
        }
        Command::Analyze { label } => {
            let records = load_records(&cli.data_dir)?;
            let record = records
                .iter()
                .find(|r| r.label() == label.as_str())
                .ok_or_else(|| {
                    modtors::Error::MissingData(format!("record not found: {label}"))
                })?;
            let analysis = analyze_record(record, cli.prime_bound.policy(), cli.include_p2)?;
            write!(stdout, "{}", render_analysis(&analysis, cli.format))?;
            Ok(())
        }
        Command::Survey {
            dim,
            min_level,
            max_level,
        } => {
            let records = load_records(&cli.data_dir)?;
            let selected: Vec<NewformRecord> = records
                .into_iter()
                .filter(|r| r.level() >= *min_level)
                .filter(|r| max_level.is_none_or(|m| r.level() <= m))
                .collect();
            let survey = survey(&selected, *dim, cli.prime_bound.policy(), cli.include_p2)?;
            for (label, reason) in &survey.failures {
                eprintln!("warning: {label}: {reason}");
            }
            write!(stdout, "{}", render_survey(&survey, cli.format))?;
            Ok(())
        }
    }
}

fn load_records(data_dir: &Path) -> modtors::Result<Vec<NewformRecord>> {
    let (records, diagnostics) = parse_dataset_path(&data_dir.join("newforms.jsonl"))?;
    for diagnostic in &diagnostics {
        eprintln!("warning: {diagnostic}");
    }
    Ok(records)
}

/// Structured (JSON) form of one analysis; the field names are normative
/// and the representation round-trips through serde exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredReport {
    pub label: String,
    pub level: u32,
    pub dimension: u32,
    pub bound: u64,
    #[serde(rename = "G")]
    pub gcd_order: String,
    #[serde(rename = "T")]
    pub predicted_order: String,
    pub sharp: String,
    pub stabilization: bool,
    pub per_ell: Vec<StructuredEll>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredEll {
    pub ell: u64,
    pub unresolved: bool,
    pub entries: Vec<StructuredEntry>,
    pub predicted_exponent: u32,
    pub gcd_exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredEntry {
    pub e: u32,
    pub f: u32,
    pub n: u64,
}

impl From<&TorsionAnalysis> for StructuredReport {
    fn from(analysis: &TorsionAnalysis) -> Self {
        StructuredReport {
            label: analysis.label.clone(),
            level: analysis.level,
            dimension: analysis.dimension,
            bound: analysis.bound,
            gcd_order: analysis.gcd_order.to_string(),
            predicted_order: analysis.predicted_order.to_string(),
            sharp: analysis.sharp.to_string(),
            stabilization: analysis.stabilized,
            per_ell: analysis
                .reports
                .iter()
                .map(|r| StructuredEll {
                    ell: r.ell,
                    unresolved: r.unresolved,
                    entries: r
                        .entries
                        .iter()
                        .map(|entry| StructuredEntry {
                            e: entry.e,
                            f: entry.f,
                            n: entry.n,
                        })
                        .collect(),
                    predicted_exponent: r.predicted_exponent,
                    gcd_exponent: r.gcd_exponent,
                })
                .collect(),
        }
    }
}

pub fn render_analysis(analysis: &TorsionAnalysis, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "label: {}", analysis.label);
            let _ = writeln!(out, "level: {}", analysis.level);
            let _ = writeln!(out, "dimension: {}", analysis.dimension);
            let _ = writeln!(out, "bound: {}", analysis.bound);
            let _ = writeln!(out, "window: {}", join(&analysis.window_primes));
            let _ = writeln!(out, "G: {}", analysis.gcd_order);
            let _ = writeln!(out, "T: {}", analysis.predicted_order);
            let _ = writeln!(out, "sharp: {}", analysis.sharp);
            let _ = writeln!(out, "stabilized: {}", analysis.stabilized);
            for report in &analysis.reports {
                if report.unresolved {
                    let _ = writeln!(
                        out,
                        "ell {}: unresolved (index divisor), predicted_exponent 0, \
                         gcd_exponent {}",
                        report.ell, report.gcd_exponent
                    );
                } else {
                    let entries: Vec<String> = report
                        .entries
                        .iter()
                        .map(|entry| format!("(e={}, f={}, n={})", entry.e, entry.f, entry.n))
                        .collect();
                    let _ = writeln!(
                        out,
                        "ell {}: predicted_exponent {}, gcd_exponent {}, entries: {}",
                        report.ell,
                        report.predicted_exponent,
                        report.gcd_exponent,
                        entries.join(" ")
                    );
                }
            }
            out
        }
        Format::Csv => format!("{CSV_HEADER}\n{}\n", csv_row(analysis)),
        Format::Structured => {
            let report = StructuredReport::from(analysis);
            let mut out =
                serde_json::to_string(&report).expect("report serialization cannot fail");
            out.push('\n');
            out
        }
    }
}

fn csv_row(analysis: &TorsionAnalysis) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        analysis.label,
        analysis.level,
        analysis.dimension,
        analysis.bound,
        analysis.gcd_order,
        analysis.predicted_order,
        analysis.sharp,
        analysis.stabilized
    )
}

pub fn render_survey(survey: &Survey, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "dimension: {}", survey.dimension);
            let _ = writeln!(
                out,
                "analyzed: {} (failures: {})",
                survey.analyses.len(),
                survey.failures.len()
            );
            let orders: Vec<String> = survey
                .predicted_orders
                .iter()
                .map(|(t, count)| format!("{t} x{count}"))
                .collect();
            let _ = writeln!(out, "predicted orders: {}", orders.join(", "));
            let sharp: Vec<String> = survey.sharp_orders.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(out, "sharp orders: {}", sharp.join(" "));
            let closure: Vec<String> = survey
                .divisor_closure
                .iter()
                .map(|d| d.to_string())
                .collect();
            let _ = writeln!(out, "divisor closure: {}", closure.join(" "));
            let _ = writeln!(
                out,
                "primes: {}",
                join(&survey.primes.iter().copied().collect::<Vec<_>>())
            );
            let _ = writeln!(
                out,
                "sharp count: {} of {}",
                survey.sharp_count,
                survey.analyses.len()
            );
            out
        }
        Format::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for analysis in &survey.analyses {
                out.push_str(&csv_row(analysis));
                out.push('\n');
            }
            out
        }
        Format::Structured => {
            let analyses: Vec<StructuredReport> =
                survey.analyses.iter().map(StructuredReport::from).collect();
            let value = serde_json::json!({
                "dimension": survey.dimension,
                "analyses": analyses,
                "predicted_orders": survey
                    .predicted_orders
                    .iter()
                    .map(|(t, count)| serde_json::json!([t.to_string(), count]))
                    .collect::<Vec<_>>(),
                "divisor_closure": survey
                    .divisor_closure
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>(),
                "primes": survey.primes.iter().copied().collect::<Vec<_>>(),
                "sharp_orders": survey
                    .sharp_orders
                    .iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>(),
                "sharp_count": survey.sharp_count,
                "failures": survey.failures,
            });
            let mut out = value.to_string();
            out.push('\n');
            out
        }
    }
}

pub fn render_validation(reports: &[ValidationReport], format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            for report in reports {
                if report.is_clean() {
                    let _ = writeln!(out, "{}: ok", report.label);
                } else {
                    let _ = writeln!(
                        out,
                        "{}: missing primes [{}], positivity failures [{}], squarefree {}",
                        report.label,
                        join(&report.missing_primes),
                        join(&report.positivity_failures),
                        report.field_squarefree
                    );
                }
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("label,missing_primes,positivity_failures,field_squarefree\n");
            for report in reports {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    report.label,
                    join_with(&report.missing_primes, ";"),
                    join_with(&report.positivity_failures, ";"),
                    report.field_squarefree
                );
            }
            out
        }
        Format::Structured => {
            let value: Vec<serde_json::Value> = reports
                .iter()
                .map(|report| {
                    serde_json::json!({
                        "label": report.label,
                        "missing_primes": report.missing_primes,
                        "positivity_failures": report.positivity_failures,
                        "field_squarefree": report.field_squarefree,
                        "clean": report.is_clean(),
                    })
                })
                .collect();
            let mut out = serde_json::Value::Array(value).to_string();
            out.push('\n');
            out
        }
    }
}

fn render_fetch(
    manifest: &DatasetManifest,
    network_requests: usize,
    cache_hits: usize,
    format: Format,
) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "fetched {} records ({} network requests, {} cache hits)",
                manifest.record_count, network_requests, cache_hits
            );
            for (dim, count) in &manifest.per_dimension {
                let _ = writeln!(out, "dimension {dim}: {count}");
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("dimension,count\n");
            for (dim, count) in &manifest.per_dimension {
                let _ = writeln!(out, "{dim},{count}");
            }
            out
        }
        Format::Structured => {
            let mut out =
                serde_json::to_string(manifest).expect("manifest serialization cannot fail");
            out.push('\n');
            out
        }
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    join_with(items, " ")
}

fn join_with<T: std::fmt::Display>(items: &[T], separator: &str) -> String {
    items
        .iter()
        .map(|item| item.to_string())
        .collect::<Vec<_>>()
        .join(separator)
}
