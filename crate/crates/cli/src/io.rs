//! CSV datasets.
//!
//! A dataset directory holds `observations.csv` (`series_id,variable,time,value`),
//! `labels.csv` (`series_id,label`) and optionally `signal_times.csv`
//! (`series_id,signal_time`). The labels file defines which series exist
//! and in what order.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, WriterBuilder};
use earlyclass_core::{Dataset, IrregularSeries, Observation};

use crate::error::{CliError, Result};

pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SIGNAL_TIMES_FILE: &str = "signal_times.csv";

const OBSERVATIONS_HEADER: [&str; 4] = ["series_id", "variable", "time", "value"];
const LABELS_HEADER: [&str; 2] = ["series_id", "label"];
const SIGNAL_TIMES_HEADER: [&str; 2] = ["series_id", "signal_time"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub horizon: f64,
    /// Defaults to one more than the largest variable index seen.
    pub num_variables: Option<usize>,
    /// Defaults to one more than the largest label, and at least 2.
    pub num_classes: Option<usize>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            num_variables: None,
            num_classes: None,
        }
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Rows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl Rows {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(CliError::io(path))?;
        let mut reader = ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let found = reader.headers().map_err(|e| parse_error(path, 1, e))?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            reader,
        })
    }

    /// Calls `f(line, record)` for each data row.
    fn for_each(mut self, mut f: impl FnMut(u64, &StringRecord) -> std::result::Result<(), String>) -> Result<()> {
        let mut record = StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_error(&self.path, line, e)
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            f(line, &record).map_err(|message| CliError::Parse {
                path: self.path.clone(),
                line,
                message,
            })?;
        }
    }
}

fn parse_error(path: &Path, line: u64, e: impl ToString) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn field<T: std::str::FromStr>(record: &StringRecord, i: usize, name: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(i).ok_or_else(|| format!("missing field `{name}`"))?;
    raw.parse().map_err(|e| format!("invalid {name} `{raw}`: {e}"))
}

fn finite(v: f64, name: &str) -> std::result::Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be finite, got {v}"))
    }
}

/// Loads a dataset from explicit file paths.
pub fn load_csv(
    observations: &Path,
    labels: &Path,
    signal_times: Option<&Path>,
    options: &LoadOptions,
) -> Result<Dataset> {
    let horizon = options.horizon;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CliError::Usage(format!("horizon must be positive, got {horizon}")));
    }

    let mut order: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    Rows::open(labels, &LABELS_HEADER)?.for_each(|_, r| {
        let id: String = field(r, 0, "series_id")?;
        let label: usize = field(r, 1, "label")?;
        if index.insert(id.clone(), order.len()).is_some() {
            return Err(format!("duplicate label for series `{id}`"));
        }
        order.push((id, label));
        Ok(())
    })?;

    let mut signal: Vec<Option<f64>> = vec![None; order.len()];
    if let Some(path) = signal_times {
        Rows::open(path, &SIGNAL_TIMES_HEADER)?.for_each(|_, r| {
            let id: String = field(r, 0, "series_id")?;
            let t = finite(field(r, 1, "signal_time")?, "signal_time")?;
            let &i = index.get(&id).ok_or_else(|| format!("unknown series `{id}`"))?;
            if signal[i].replace(t).is_some() {
                return Err(format!("duplicate signal_time for series `{id}`"));
            }
            Ok(())
        })?;
    }

    let mut per_series: Vec<Vec<Observation>> = vec![Vec::new(); order.len()];
    let mut seen: HashSet<(usize, usize, u64)> = HashSet::new();
    let mut max_variable = None;
    Rows::open(observations, &OBSERVATIONS_HEADER)?.for_each(|_, r| {
        let id: String = field(r, 0, "series_id")?;
        let variable: usize = field(r, 1, "variable")?;
        let time = finite(field(r, 2, "time")?, "time")?;
        let value = finite(field(r, 3, "value")?, "value")?;
        let &i = index.get(&id).ok_or_else(|| format!("series `{id}` has no label"))?;
        if !(0.0..=horizon).contains(&time) {
            return Err(format!("time {time} outside [0, {horizon}]"));
        }
        if let Some(d) = options.num_variables {
            if variable >= d {
                return Err(format!("variable {variable} out of range for {d} variables"));
            }
        }
        // Canonicalise -0.0 so it collides with 0.0.
        if !seen.insert((i, variable, (time + 0.0).to_bits())) {
            return Err(format!("duplicate observation of variable {variable} at time {time} in `{id}`"));
        }
        max_variable = max_variable.max(Some(variable));
        per_series[i].push(Observation { variable, time, value });
        Ok(())
    })?;

    let num_variables = options
        .num_variables
        .unwrap_or_else(|| max_variable.map_or(1, |v| v + 1));
    let num_classes = options
        .num_classes
        .unwrap_or_else(|| order.iter().map(|(_, l)| l + 1).max().unwrap_or(0).max(2));
    let series = order
        .into_iter()
        .zip(per_series)
        .zip(signal)
        .map(|(((id, label), obs), st)| IrregularSeries::new(id, num_variables, obs, label, horizon, st))
        .collect::<earlyclass_core::Result<Vec<_>>>()?;
    Ok(Dataset::new(series, num_variables, num_classes)?)
}

/// Loads `observations.csv`, `labels.csv` and, if present,
/// `signal_times.csv` from `dir`.
pub fn load_dir(dir: &Path, options: &LoadOptions) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("data directory {} does not exist", dir.display())));
    }
    let signal = dir.join(SIGNAL_TIMES_FILE);
    load_csv(
        &dir.join(OBSERVATIONS_FILE),
        &dir.join(LABELS_FILE),
        signal.exists().then_some(signal.as_path()),
        options,
    )
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(CliError::io(path))?;
    Ok(WriterBuilder::new().from_writer(file))
}

fn csv_write_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::format(path, e)
}

/// Writes the dataset's CSV files. The signal-time file is written only when
/// `signal_times` is given and every series has a signal time.
pub fn save_csv(ds: &Dataset, observations: &Path, labels: &Path, signal_times: Option<&Path>) -> Result<()> {
    let mut w = writer(labels)?;
    let err = csv_write_error(labels);
    w.write_record(LABELS_HEADER).map_err(&err)?;
    for s in &ds.series {
        w.write_record([s.id.as_str(), &s.label.to_string()]).map_err(&err)?;
    }
    w.flush().map_err(CliError::io(labels))?;

    let mut w = writer(observations)?;
    let err = csv_write_error(observations);
    w.write_record(OBSERVATIONS_HEADER).map_err(&err)?;
    for s in &ds.series {
        let mut obs: Vec<&Observation> = s.observations().collect();
        obs.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.variable.cmp(&b.variable)));
        for o in obs {
            w.write_record([s.id.as_str(), &o.variable.to_string(), &format_f64(o.time), &format_f64(o.value)])
                .map_err(&err)?;
        }
    }
    w.flush().map_err(CliError::io(observations))?;

    if let Some(path) = signal_times {
        if ds.series.iter().all(|s| s.signal_time.is_some()) {
            let mut w = writer(path)?;
            let err = csv_write_error(path);
            w.write_record(SIGNAL_TIMES_HEADER).map_err(&err)?;
            for s in &ds.series {
                w.write_record([s.id.as_str(), &format_f64(s.signal_time.unwrap_or_default())])
                    .map_err(&err)?;
            }
            w.flush().map_err(CliError::io(path))?;
        }
    }
    Ok(())
}

pub fn save_dir(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    save_csv(
        ds,
        &dir.join(OBSERVATIONS_FILE),
        &dir.join(LABELS_FILE),
        Some(&dir.join(SIGNAL_TIMES_FILE)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_sorted_and_infers_shape() {
        let dir = tempfile::tempdir().unwrap();
        let obs = write(dir.path(), "o.csv", "series_id,variable,time,value\na,0,0.3,1\na,0,0.1,2\nb,2,0.5,-1\n");
        let lab = write(dir.path(), "l.csv", "series_id,label\na,1\nb,0\n");
        let ds = load_csv(&obs, &lab, None, &LoadOptions::default()).unwrap();
        assert_eq!((ds.num_variables, ds.num_classes, ds.len()), (3, 2, 2));
        let times: Vec<f64> = ds.series[0].variable(0).iter().map(|o| o.time).collect();
        assert_eq!(times, vec![0.1, 0.3]);
    }

    #[test]
    fn empty_observations_give_empty_series() {
        let dir = tempfile::tempdir().unwrap();
        let obs = write(dir.path(), "o.csv", "series_id,variable,time,value\n");
        let lab = write(dir.path(), "l.csv", "series_id,label\na,0\nb,1\n");
        let ds = load_csv(&obs, &lab, None, &LoadOptions::default()).unwrap();
        assert!(ds.series.iter().all(|s| s.num_observations() == 0));
    }

    fn load_error(obs_body: &str) -> String {
        let dir = tempfile::tempdir().unwrap();
        let obs = write(dir.path(), "o.csv", obs_body);
        let lab = write(dir.path(), "l.csv", "series_id,label\na,0\n");
        load_csv(&obs, &lab, None, &LoadOptions::default()).unwrap_err().to_string()
    }

    #[test]
    fn row_errors_name_the_line() {
        let e = load_error("series_id,variable,time,value\na,0,0.1,1\na,0,1.2,1\n");
        assert!(e.contains(":3:") && e.contains("outside"), "{e}");
        let e = load_error("series_id,variable,time,value\na,0,0.1,1\na,0,0.1,2\n");
        assert!(e.contains(":3:") && e.contains("duplicate"), "{e}");
        let e = load_error("series_id,variable,time,value\na,0,abc,1\n");
        assert!(e.contains(":2:") && e.contains("invalid time"), "{e}");
        let e = load_error("series_id,variable,time,value\nz,0,0.1,1\n");
        assert!(e.contains("no label"), "{e}");
        let e = load_error("id,variable,time,value\n");
        assert!(e.contains(":1:") && e.contains("header"), "{e}");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 5e-324] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
