//! Artifact formats: CSV tables with headers and pretty-printed JSON sidecars.
//!
//! Floats are written in their shortest round-tripping form, so every file
//! reloads to identical values; non-finite values use `inf`, `-inf`, `nan`.

pub mod ext;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{DatasetSummary, SyntheticDataset, TruthConfig};
use crate::filtering::{BandRow, Innovation, ObservationSeries};
use crate::selection::ModelComparison;

pub const DATA_FILE: &str = "data.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const TRUTH_FILE: &str = "truth.csv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Writes `bytes`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| ext::format(*v)).collect()
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Reads a headed numeric CSV; returns the header and rows.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let head: Vec<String> = r
        .headers()
        .map_err(|e| format_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let row = rec
            .iter()
            .map(|f| ext::parse(f).ok_or_else(|| format_err(path, format!("row {}: bad number `{f}`", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((head, rows))
}

/// Observation table `t,d`.
pub fn observations_csv(obs: &ObservationSeries) -> String {
    csv_string(
        &header(&["t", "d"]),
        obs.times().iter().zip(obs.values()).map(|(t, d)| floats(&[*t, *d])),
    )
}

/// Sidecar describing how a dataset was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub case: Option<u8>,
    pub seed: u64,
    pub noise_std: f64,
    pub truth: TruthConfig,
    pub summary: DatasetSummary,
}

/// Writes `data.csv`, `truth.csv` and `provenance.json` into `dir`.
pub fn write_dataset(dir: &Path, case: Option<u8>, ds: &SyntheticDataset) -> Result<()> {
    write_file(&dir.join(DATA_FILE), observations_csv(&ds.observations).as_bytes())?;
    let t = &ds.truth;
    let truth = csv_string(
        &header(&["t", "u", "v", "K"]),
        (0..t.times.len()).map(|i| floats(&[t.times[i], t.displacement[i], t.velocity[i], t.stiffness[i]])),
    );
    write_file(&dir.join(TRUTH_FILE), truth.as_bytes())?;
    write_json(
        &dir.join(PROVENANCE_FILE),
        &DatasetProvenance {
            case,
            seed: ds.config.seed,
            noise_std: ds.config.noise_std,
            truth: ds.config,
            summary: ds.summary(),
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dir: PathBuf,
    pub observations: ObservationSeries,
    pub provenance: DatasetProvenance,
}

/// Loads a dataset directory written by [`write_dataset`].
pub fn read_dataset(dir: &Path) -> Result<LoadedDataset> {
    let provenance: DatasetProvenance = read_json(&dir.join(PROVENANCE_FILE))?;
    let data_path = dir.join(DATA_FILE);
    let (head, rows) = read_numeric_csv(&data_path)?;
    if head != ["t", "d"] {
        return Err(format_err(&data_path, format!("expected header t,d, got {}", head.join(","))));
    }
    let (times, values) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
    let observations =
        ObservationSeries::new(times, values, provenance.noise_std).map_err(|e| format_err(&data_path, e))?;
    Ok(LoadedDataset {
        dir: dir.to_path_buf(),
        observations,
        provenance,
    })
}

/// Posterior samples with one column per parameter plus `log_lik`.
pub fn posterior_csv(names: &[String], samples: &[Vec<f64>], log_liks: &[f64]) -> String {
    let mut head = names.to_vec();
    head.push("log_lik".into());
    csv_string(
        &head,
        samples.iter().zip(log_liks).map(|(x, l)| {
            let mut row = floats(x);
            row.push(ext::format(*l));
            row
        }),
    )
}

pub fn band_csv(rows: &[BandRow]) -> String {
    csv_string(
        &header(&["t", "mean", "lo3", "hi3"]),
        rows.iter().map(|r| floats(&[r.t, r.mean, r.lo3, r.hi3])),
    )
}

pub fn innovations_csv(rows: &[Innovation]) -> String {
    csv_string(
        &header(&["t", "residual", "variance"]),
        rows.iter().map(|r| floats(&[r.t, r.residual, r.variance])),
    )
}

/// Comparison table: one row per model with log evidence, average data fit,
/// expected information gain and probability (%), plus a probability column
/// per subset row (blank where the model is excluded).
pub fn comparison_csv(cmp: &ModelComparison) -> String {
    let mut head = header(&["model", "log_evidence", "avg_data_fit", "info_gain", "probability_pct"]);
    head.extend(cmp.subsets.iter().map(|s| format!("probability_pct_{}", s.label)));
    let rows = cmp.entries.iter().enumerate().map(|(i, e)| {
        let mut row = vec![e.model.clone()];
        row.extend(floats(&[
            e.report.log_evidence,
            e.report.avg_data_fit,
            e.report.info_gain,
            100.0 * e.probability,
        ]));
        row.extend(
            cmp.subsets
                .iter()
                .map(|s| s.probabilities[i].map(|p| ext::format(100.0 * p)).unwrap_or_default()),
        );
        row
    });
    csv_string(&head, rows)
}
