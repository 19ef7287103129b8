//! Run records and summaries on disk.
//!
//! A run record has a `time_s` column followed by the recorder channels, one
//! row per control tick. Floats use the shortest decimal form that parses
//! back to the same bits; the flags channel is written as an integer.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::CH_FLAGS;
use crate::error::IoError;
use crate::sim::{Channel, TimeSeries};

pub const TIME_COLUMN: &str = "time_s";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn format_cell(channel: &str, v: f64) -> String {
    if channel == CH_FLAGS && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format_f64(v)
    }
}

fn write_err(path: &Path, e: impl Into<std::io::Error>) -> IoError {
    IoError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn csv_write_err(path: &Path, e: csv::Error) -> IoError {
    write_err(path, std::io::Error::other(e.to_string()))
}

/// Serialises a run record to CSV bytes.
pub fn run_csv_bytes(series: &TimeSeries) -> Result<Vec<u8>, IoError> {
    if series.is_empty() {
        return Err(IoError::Empty);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec![TIME_COLUMN];
    header.extend(series.channel_names());
    let mem = Path::new("<memory>");
    w.write_record(&header).map_err(|e| csv_write_err(mem, e))?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..series.len() {
        row.clear();
        row.push(format_f64(series.time[i]));
        for c in &series.channels {
            row.push(format_cell(&c.name, c.data[i]));
        }
        w.write_record(&row).map_err(|e| csv_write_err(mem, e))?;
    }
    w.into_inner().map_err(|e| write_err(mem, e.into_error()))
}

pub fn write_run_csv(series: &TimeSeries, path: &Path) -> Result<(), IoError> {
    let bytes = run_csv_bytes(series)?;
    fs::write(path, bytes).map_err(|e| write_err(path, e))
}

fn malformed(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Malformed {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_cell(path: &Path, line: u64, column: &str, text: &str) -> Result<f64, IoError> {
    text.trim().parse::<f64>().map_err(|_| {
        malformed(
            path,
            format!("line {line}, column `{column}`: `{text}` is not a number"),
        )
    })
}

pub fn parse_run_csv(text: &str, path: &Path) -> Result<TimeSeries, IoError> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| malformed(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some(TIME_COLUMN) {
        return Err(malformed(path, format!("first column must be `{TIME_COLUMN}`")));
    }
    let mut time = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        time.push(parse_cell(path, line, TIME_COLUMN, &rec[0])?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_cell(path, line, &header[j + 1], &rec[j + 1])?);
        }
    }
    if time.is_empty() {
        return Err(IoError::Empty);
    }
    let channels = header[1..]
        .iter()
        .zip(columns)
        .map(|(name, data)| Channel {
            name: name.clone(),
            data,
        })
        .collect();
    TimeSeries::new(time, channels).map_err(|e| malformed(path, e.to_string()))
}

pub fn read_run_csv(path: &Path) -> Result<TimeSeries, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_run_csv(&text, path)
}

pub fn run_file_name(run: usize) -> String {
    format!("run_{run:03}.csv")
}

/// Run records of an output directory in run order.
pub fn run_files(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::Read {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn summary_csv_bytes(metrics: &[(&str, f64)]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writes into a Vec cannot fail.
    w.write_record(["metric", "value"]).expect("in-memory write");
    for (k, v) in metrics {
        w.write_record([k.to_string(), format_f64(*v)])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_summary_csv(metrics: &[(&str, f64)], path: &Path) -> Result<(), IoError> {
    fs::write(path, summary_csv_bytes(metrics)).map_err(|e| write_err(path, e))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| malformed(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(malformed(path, format!("line {line}: expected metric,value")));
        }
        out.push((rec[0].to_string(), parse_cell(path, line, "value", &rec[1])?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::channel_names;

    fn series(hydraulic: bool, n: usize) -> TimeSeries {
        let time: Vec<f64> = (0..n).map(|i| i as f64 * 1e-3).collect();
        let channels = channel_names(hydraulic)
            .into_iter()
            .enumerate()
            .map(|(j, name)| Channel {
                name: name.into(),
                data: time
                    .iter()
                    .map(|t| {
                        if name == CH_FLAGS {
                            (j % 3) as f64
                        } else {
                            (t * 7.3 + j as f64).sin() / 3.0
                        }
                    })
                    .collect(),
            })
            .collect();
        TimeSeries::new(time, channels).unwrap()
    }

    #[test]
    fn line_count_is_samples_plus_header() {
        let bytes = run_csv_bytes(&series(false, 1001)).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1002);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn bit_exact_round_trip() {
        let s = series(true, 50);
        let back = parse_run_csv(&String::from_utf8(run_csv_bytes(&s).unwrap()).unwrap(), Path::new("x")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pressure_columns_only_for_hydraulic() {
        let h = String::from_utf8(run_csv_bytes(&series(true, 2)).unwrap()).unwrap();
        let e = String::from_utf8(run_csv_bytes(&series(false, 2)).unwrap()).unwrap();
        assert!(h.lines().next().unwrap().contains("p_a_pa,p_b_pa"));
        assert!(!e.lines().next().unwrap().contains("p_a_pa"));
    }

    #[test]
    fn empty_series_rejected() {
        let s = TimeSeries::new(vec![], vec![]).unwrap();
        assert!(matches!(run_csv_bytes(&s), Err(IoError::Empty)));
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "time_s,a\n0.0,1.0\n0.001\n";
        assert!(parse_run_csv(text, Path::new("x")).is_err());
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(SUMMARY_FILE);
        let m = [("slope_n_per_m", 5999.125_f64), ("correlation_r", 0.999_978_5)];
        write_summary_csv(&m, &p).unwrap();
        let back = read_summary_csv(&p).unwrap();
        assert_eq!(
            back,
            vec![
                ("slope_n_per_m".to_string(), 5999.125),
                ("correlation_r".to_string(), 0.999_978_5)
            ]
        );
    }
}
