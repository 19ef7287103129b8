//! Command-line front end.
//!
//! Failures print a single line `error: <category>: <message>` on stderr and
//! return a nonzero exit code (2 for usage errors, 1 otherwise).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use toml::{Table, Value};

use crate::config::{parse_document, render_config, set_key, spec_from_table};
use crate::csvio::{
    read_run_csv, run_file_name, run_files, summary_csv_bytes, write_run_csv, write_summary_csv, CONFIG_FILE,
    SUMMARY_FILE,
};
use crate::experiments::{run_experiment, summarize, ExperimentOutcome, ExperimentSpec};
use crate::presets;

#[derive(Debug, Parser)]
#[command(name = "benchtwin", version, about = "Simulated actuator test bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its records.
    Run {
        config: PathBuf,
        /// Output directory (default: runs/<experiment name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed; overrides sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of runs; overrides experiment.runs.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// List the built-in presets.
    Presets {
        /// Print the full configuration document of one preset.
        #[arg(long, value_name = "NAME")]
        render: Option<String>,
    },
    /// Recompute the statistics of an output directory from its CSV files.
    Summarize { dir: PathBuf },
    /// Run an experiment once per value of one configuration key.
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. plant.coulomb_force_n.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        /// Write each point's records to <out>/<param>=<value>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Debug)]
struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn new(category: &'static str, message: impl ToString) -> Self {
        Self {
            category,
            message: message.to_string(),
        }
    }

    fn code(&self) -> i32 {
        if self.category == "usage" {
            2
        } else {
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the CLI with `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let _ = writeln!(err, "error: usage: {}", one_line(first));
            return 2;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}: {}", f.category, one_line(&f.message));
            f.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            out: dir,
            seed,
            runs,
        } => {
            let doc = load_document(&config)?;
            let spec = resolve(&doc, seed, runs)?;
            let dir = dir.unwrap_or_else(|| Path::new("runs").join(&spec.name));
            let outcome = run_experiment(&spec).map_err(|e| Failure::new("experiment", e))?;
            write_output(&dir, &spec, &outcome)?;
            emit(out, &summary_csv_bytes(&outcome.summary.metrics()))?;
            Ok(())
        }
        Command::Presets { render } => match render {
            Some(name) => {
                let spec = presets::by_name(&name).ok_or_else(|| {
                    Failure::new(
                        "usage",
                        format!("unknown preset `{name}` (known: {})", presets::NAMES.join(", ")),
                    )
                })?;
                emit(out, render_config(&spec).as_bytes())
            }
            None => {
                let mut text = String::new();
                for name in presets::NAMES {
                    text.push_str(&format!("{name}\t{}\n", presets::description(name)));
                }
                emit(out, text.as_bytes())
            }
        },
        Command::Summarize { dir } => {
            let metrics = summarize_dir(&dir)?;
            let pairs: Vec<(&str, f64)> = metrics.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            emit(out, &summary_csv_bytes(&pairs))
        }
        Command::Sweep {
            config,
            param,
            values,
            out: dir,
            seed,
            runs,
        } => sweep(&config, &param, &values, dir.as_deref(), seed, runs, out),
    }
}

fn emit(out: &mut dyn Write, bytes: &[u8]) -> Result<(), Failure> {
    out.write_all(bytes)
        .map_err(|e| Failure::new("io", format!("stdout: {e}")))
}

fn load_document(path: &Path) -> Result<Table, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new("io", format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))
}

fn resolve(doc: &Table, seed: Option<u64>, runs: Option<usize>) -> Result<ExperimentSpec, Failure> {
    let mut spec = spec_from_table(doc).map_err(|e| Failure::new("config", e))?;
    if let Some(s) = seed {
        spec.sim.seed = s;
    }
    if let Some(r) = runs {
        spec.runs = r;
    }
    spec.validate().map_err(|e| Failure::new("config", e))?;
    Ok(spec)
}

/// Writes run records, the summary and the resolved configuration.
pub fn write_output_dir(dir: &Path, spec: &ExperimentSpec, outcome: &ExperimentOutcome) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    for stale in run_files(dir).map_err(|e| e.to_string())? {
        fs::remove_file(&stale).map_err(|e| format!("cannot remove {}: {e}", stale.display()))?;
    }
    outcome
        .runs
        .par_iter()
        .enumerate()
        .try_for_each(|(i, s)| write_run_csv(s, &dir.join(run_file_name(i))))
        .map_err(|e| e.to_string())?;
    write_summary_csv(&outcome.summary.metrics(), &dir.join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
    let cfg = dir.join(CONFIG_FILE);
    fs::write(&cfg, render_config(spec)).map_err(|e| format!("cannot write {}: {e}", cfg.display()))
}

fn write_output(dir: &Path, spec: &ExperimentSpec, outcome: &ExperimentOutcome) -> Result<(), Failure> {
    write_output_dir(dir, spec, outcome).map_err(|e| Failure::new("io", e))
}

/// Statistics recomputed from the files of an output directory.
pub fn summarize_directory(dir: &Path) -> Result<Vec<(String, f64)>, String> {
    summarize_dir(dir).map_err(|f| format!("{}: {}", f.category, f.message))
}

fn summarize_dir(dir: &Path) -> Result<Vec<(String, f64)>, Failure> {
    let doc = load_document(&dir.join(CONFIG_FILE))?;
    let spec = resolve(&doc, None, None)?;
    let files = run_files(dir).map_err(|e| Failure::new("io", e))?;
    if files.is_empty() {
        return Err(Failure::new("io", format!("no run_*.csv files in {}", dir.display())));
    }
    let runs = files
        .iter()
        .map(|p| read_run_csv(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new("io", e))?;
    let summary = summarize(&spec, &runs).map_err(|e| Failure::new("experiment", e))?;
    Ok(summary.metrics().into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn sweep_value(text: &str) -> Value {
    let t = text.trim();
    if let Ok(i) = t.parse::<i64>() {
        Value::Integer(i)
    } else if let Ok(f) = t.parse::<f64>() {
        Value::Float(f)
    } else if let Ok(b) = t.parse::<bool>() {
        Value::Boolean(b)
    } else {
        Value::String(t.to_string())
    }
}

fn sweep(
    config: &Path,
    param: &str,
    values: &str,
    dir: Option<&Path>,
    seed: Option<u64>,
    runs: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let base = load_document(config)?;
    let points: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if points.is_empty() {
        return Err(Failure::new("usage", "--values is empty"));
    }
    // Validate every point before running any of them.
    let mut specs = Vec::with_capacity(points.len());
    for v in &points {
        let mut doc = base.clone();
        set_key(&mut doc, param, sweep_value(v)).map_err(|e| Failure::new("usage", e))?;
        let spec =
            resolve(&doc, seed, runs).map_err(|f| Failure::new(f.category, format!("{param}={v}: {}", f.message)))?;
        specs.push(spec);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for (i, (v, spec)) in points.iter().zip(&specs).enumerate() {
        let outcome = run_experiment(spec).map_err(|e| Failure::new("experiment", format!("{param}={v}: {e}")))?;
        if let Some(d) = dir {
            write_output(&d.join(format!("{param}={v}")), spec, &outcome)?;
        }
        let metrics = outcome.summary.metrics();
        if i == 0 {
            let mut header = vec![param.to_string()];
            header.extend(metrics.iter().map(|(k, _)| k.to_string()));
            w.write_record(&header).map_err(|e| Failure::new("io", e))?;
        }
        let mut row = vec![v.to_string()];
        row.extend(metrics.iter().map(|(_, x)| crate::csvio::format_f64(*x)));
        w.write_record(&row).map_err(|e| Failure::new("io", e))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new("io", e.into_error()))?;
    emit(out, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("benchtwin").chain(args.iter().copied());
        let code = cli_main(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn presets_lists_all_builtins() {
        let (code, out, _) = run(&["presets"]);
        assert_eq!(code, 0);
        assert!(out.lines().count() >= 4);
    }

    #[test]
    fn unknown_flag_is_one_line_usage_error() {
        let (code, _, err) = run(&["run", "x.cfg", "--bogus"]);
        assert_eq!(code, 2);
        assert_eq!(err.lines().count(), 1);
        assert!(err.starts_with("error: usage:"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let (code, _, err) = run(&["run", "/nonexistent/x.cfg"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: io:"), "{err}");
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn config_errors_are_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.cfg");
        fs::write(
            &p,
            "[experiment]\npreset = \"hydraulic-repeatability\"\n[actuator]\nsupply_pressure_pa = 25e6\nfoo = 1\n",
        )
        .unwrap();
        let (code, _, err) = run(&["run", p.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert_eq!(err.lines().count(), 1);
        assert!(
            err.contains("exceeds HPU limit 20.7e6") && err.contains("actuator.foo"),
            "{err}"
        );
    }

    #[test]
    fn sweep_values_are_typed() {
        assert_eq!(sweep_value("3"), Value::Integer(3));
        assert_eq!(sweep_value("2.5"), Value::Float(2.5));
        assert_eq!(sweep_value("true"), Value::Boolean(true));
        assert_eq!(sweep_value("E024"), Value::String("E024".into()));
    }
}
