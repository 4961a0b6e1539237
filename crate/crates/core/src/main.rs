use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vital_core::integrate::MergePolicy;
use vital_core::model::{DateSpan, LocalTimestamp, WindowGrid};
use vital_core::pipeline::{run_pipeline, PipelineError, PipelineOptions};
use vital_core::quality::{apply_filter, assess, FilterSpec};
use vital_core::service::{parse_priority, select_rows, serve, App, AppConfig, Granularity};
use vital_core::store::{
    export_canonical_csv, import_canonical_csv, read_dataset_dir, read_source_dir,
    write_dataset_dir, write_filter, write_report, ImportOptions, Manifest, StoredDataset,
};
use vital_core::synth;

#[derive(Parser)]
#[command(
    name = "vital",
    version,
    about = "Wearable export integration and data-quality management"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse every `.csv` export under a directory and write an integrated dataset directory
    Integrate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "UTC")]
        tz: String,
        #[arg(long, default_value_t = 10)]
        interval: u32,
        /// Comma-separated vendor priority, highest first
        #[arg(long)]
        priority: Option<String>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the quality report of a dataset directory
    Quality {
        dataset: PathBuf,
        #[arg(long)]
        lookback_days: Option<i64>,
        /// Reference time for recency, `YYYY-MM-DD HH:MM:SS`
        #[arg(long)]
        reference: Option<String>,
        /// FilterSpec JSON with the plausibility thresholds
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Also write the report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Apply day filters; print the retention summary and optionally export
    Filter {
        dataset: PathBuf,
        #[arg(long)]
        min_wear_hours: Option<f64>,
        #[arg(long, conflicts_with = "min_wear_hours")]
        min_wear_minutes: Option<u32>,
        #[arg(long)]
        min_steps: Option<u64>,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        /// FilterSpec JSON; flags override its fields
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Save the spec in the dataset under this name
        #[arg(long)]
        save_as: Option<String>,
        /// Write the filtered canonical CSV here (`-` for stdout)
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Write the canonical CSV of a dataset directory
    Export {
        dataset: PathBuf,
        /// Name of a saved filter to apply
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Print window frames or daily summaries as JSON
    Frames {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = GranularityArg::Window)]
        granularity: GranularityArg,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
    },
    /// Turn a canonical CSV back into a dataset directory
    Import {
        csv: PathBuf,
        #[arg(long, default_value_t = 10)]
        interval: u32,
        #[arg(long, default_value = "UTC")]
        tz: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic export set into a directory
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP API
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "VITAL_DATA_DIR", default_value = "vital-data")]
        data_dir: PathBuf,
        #[arg(long, env = "VITAL_TOKEN", hide_env_values = true)]
        token: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Window,
    Daily,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// 19 days averaging 15,466 steps and 4 h of sleep
    Demo,
    /// Three days worn 17, 18 and 19 hours
    Wear,
    /// One day exercising each aggregation rule
    Rules,
}

type CliResult = Result<(), String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| e.to_string())
}

fn write_output(path: &Path, text: &str) -> CliResult {
    if path.as_os_str() == "-" {
        std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string())
    } else {
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn read_spec(path: Option<&Path>) -> Result<FilterSpec, String> {
    match path {
        None => Ok(FilterSpec::default()),
        Some(p) => {
            let text = fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_slice(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn load(dir: &Path) -> Result<StoredDataset, String> {
    read_dataset_dir(dir).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct IntegrateSummary<'a> {
    dataset_id: &'a str,
    out: String,
    interval_minutes: u32,
    frame_count: usize,
    collection_span: Option<DateSpan>,
    conflicts: usize,
    files: &'a [vital_core::pipeline::FileSummary],
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Integrate {
            input,
            tz,
            interval,
            priority,
            id,
            out,
        } => {
            let grid = WindowGrid::new(interval).map_err(|e| e.to_string())?;
            let policy = match priority {
                None => MergePolicy::default(),
                Some(p) => parse_priority(&p).map_err(|e| e.message)?,
            };
            let files = read_source_dir(&input).map_err(|e| e.to_string())?;
            if files.is_empty() {
                return Err(format!("{}: no files to integrate", input.display()));
            }
            let dataset_id = id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
            let opts = PipelineOptions {
                dataset_id: dataset_id.clone(),
                timezone: tz,
                grid,
                policy,
                ..Default::default()
            };
            let output = match run_pipeline(&files, &opts) {
                Ok(o) => o,
                Err(PipelineError::NoRecords { files, diagnostics }) => {
                    for d in &diagnostics {
                        eprintln!("{d}");
                    }
                    return Err(format!("no usable records in {files} file(s)"));
                }
                Err(e) => return Err(e.to_string()),
            };
            for d in output.files.iter().flat_map(|f| &f.diagnostics) {
                eprintln!("{d}");
            }
            let mut sources = files;
            for (s, f) in sources.iter_mut().zip(&output.files) {
                s.vendor = f.vendor;
                s.item = f.item;
            }
            let stored = StoredDataset {
                manifest: Manifest::describe(&output.dataset, &sources),
                dataset: output.dataset,
                report: None,
                filters: BTreeMap::new(),
            };
            write_dataset_dir(&out, &stored, &sources).map_err(|e| e.to_string())?;
            print_json(&IntegrateSummary {
                dataset_id: &dataset_id,
                out: out.display().to_string(),
                interval_minutes: interval,
                frame_count: stored.dataset.frames.len(),
                collection_span: stored.dataset.collection_span,
                conflicts: output.conflicts.len(),
                files: &output.files,
            })
        }
        Command::Quality {
            dataset,
            lookback_days,
            reference,
            spec,
            report,
        } => {
            let stored = load(&dataset)?;
            let mut spec = read_spec(spec.as_deref())?;
            if let Some(l) = lookback_days {
                spec.recency_lookback_days = l;
            }
            let reference = reference
                .map(|r| r.parse::<LocalTimestamp>().map_err(|e| e.to_string()))
                .transpose()?;
            let rep = assess(&stored.dataset, &spec, reference).map_err(|e| e.to_string())?;
            write_report(&dataset, &rep).map_err(|e| e.to_string())?;
            if let Some(path) = report {
                let text = serde_json::to_string_pretty(&rep).map_err(|e| e.to_string())?;
                write_output(&path, &(text + "\n"))?;
            }
            print_json(&rep)
        }
        Command::Filter {
            dataset,
            min_wear_hours,
            min_wear_minutes,
            min_steps,
            from,
            to,
            spec,
            save_as,
            export,
        } => {
            let stored = load(&dataset)?;
            let mut spec = read_spec(spec.as_deref())?;
            if let Some(h) = min_wear_hours {
                if !(0.0..=24.0).contains(&h) {
                    return Err(format!("--min-wear-hours must be within 0..=24, got {h}"));
                }
                spec.min_wear_minutes_per_day = Some((h * 60.0).round() as u32);
            }
            if min_wear_minutes.is_some() {
                spec.min_wear_minutes_per_day = min_wear_minutes;
            }
            if min_steps.is_some() {
                spec.min_steps_per_day = min_steps;
            }
            if from.is_some() || to.is_some() {
                let first = from.or(stored.dataset.collection_span.map(|s| s.first));
                let last = to.or(stored.dataset.collection_span.map(|s| s.last));
                if let (Some(first), Some(last)) = (first, last) {
                    spec.date_range = Some(DateSpan::new(first, last).map_err(|e| e.to_string())?);
                }
            }
            let outcome = apply_filter(&stored.dataset, &spec).map_err(|e| e.to_string())?;
            if let Some(name) = save_as {
                write_filter(&dataset, &name, &spec).map_err(|e| e.to_string())?;
            }
            if let Some(path) = export {
                write_output(&path, &export_canonical_csv(&outcome.dataset))?;
                if path.as_os_str() == "-" {
                    return Ok(());
                }
            }
            print_json(&outcome.retention)
        }
        Command::Export {
            dataset,
            filter,
            out,
        } => {
            let stored = load(&dataset)?;
            let csv = match filter {
                None => export_canonical_csv(&stored.dataset),
                Some(name) => {
                    let spec = stored
                        .filters
                        .get(&name)
                        .ok_or_else(|| format!("no saved filter {name:?}"))?;
                    let outcome = apply_filter(&stored.dataset, spec).map_err(|e| e.to_string())?;
                    export_canonical_csv(&outcome.dataset)
                }
            };
            write_output(&out, &csv)
        }
        Command::Frames {
            dataset,
            granularity,
            from,
            to,
        } => {
            let stored = load(&dataset)?;
            let g = match granularity {
                GranularityArg::Window => Granularity::Window,
                GranularityArg::Daily => Granularity::Daily,
            };
            let rows = select_rows(&stored.dataset, g, from, to).map_err(|e| e.message)?;
            print_json(&rows)
        }
        Command::Import {
            csv,
            interval,
            tz,
            id,
            out,
        } => {
            let bytes = fs::read(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
            let opts = ImportOptions {
                dataset_id: id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string()),
                timezone: tz,
                grid: WindowGrid::new(interval).map_err(|e| e.to_string())?,
            };
            let ds = import_canonical_csv(&bytes, &opts)
                .map_err(|e| format!("{}: {e}", csv.display()))?;
            let stored = StoredDataset {
                manifest: Manifest::describe(&ds, &[]),
                dataset: ds,
                report: None,
                filters: BTreeMap::new(),
            };
            write_dataset_dir(&out, &stored, &[]).map_err(|e| e.to_string())?;
            print_json(&stored.manifest)
        }
        Command::Synth { kind, out } => {
            let fixture = match kind {
                SynthKind::Demo => synth::demo_fixture(),
                SynthKind::Wear => synth::wear_fixture(&[17, 18, 19]),
                SynthKind::Rules => synth::rules_fixture(),
            };
            fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for f in &fixture.files {
                let path = out.join(&f.name);
                fs::write(&path, &f.bytes).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(())
        }
        Command::Serve {
            addr,
            data_dir,
            token,
        } => {
            let app = App::new(AppConfig {
                data_dir,
                token: token.filter(|t| !t.is_empty()),
            })
            .map_err(|e| e.to_string())?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            eprintln!("listening on http://{addr}");
            rt.block_on(serve(addr, Arc::new(app)))
                .map_err(|e| e.to_string())
        }
    }
}
