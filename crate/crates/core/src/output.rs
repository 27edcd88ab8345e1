//! CSV and manifest files written by a run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Leading columns are fixed; later ones are appended extras.
pub const DIAGNOSTICS_COLUMNS: [&str; 9] = [
    "step",
    "time",
    "sup_field",
    "energy",
    "grid_half_length",
    "valid_half_width",
    "monitor_sup_field",
    "max_speed",
    "steady_error",
];

/// Grid state at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub step: usize,
    pub time: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub field: Vec<f64>,
}

impl FieldSnapshot {
    pub fn file_name(&self) -> String {
        format!("field_{}.csv", self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Rendered run configuration; parses back to the same config.
    pub config: String,
    pub scenario: String,
    pub total_steps: usize,
    pub exhaustion_step: Option<usize>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
    /// SHA-256 over the output files, in listed order.
    pub checksum: String,
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn diagnostics_csv(series: &DiagnosticsSeries) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |source| Error::Csv {
        path: PathBuf::from(DIAGNOSTICS_FILE),
        source,
    };
    w.write_record(DIAGNOSTICS_COLUMNS).map_err(wrap)?;
    for i in 0..series.len() {
        let r = series.record(i);
        w.write_record([
            r.step.to_string(),
            r.time.to_string(),
            optional(r.sup_field),
            r.energy.to_string(),
            r.grid_half_length.to_string(),
            r.valid_half_width.to_string(),
            r.monitor_sup_field.to_string(),
            r.max_speed.to_string(),
            optional(r.steady_error),
        ])
        .map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::Format {
        path: PathBuf::from(DIAGNOSTICS_FILE),
        message: e.to_string(),
    })
}

pub fn snapshot_csv(snapshot: &FieldSnapshot) -> Result<Vec<u8>> {
    let path = PathBuf::from(snapshot.file_name());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "rho", "E"])
        .map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
    for ((x, rho), e) in snapshot.x.iter().zip(&snapshot.rho).zip(&snapshot.field) {
        w.write_record([x.to_string(), rho.to_string(), e.to_string()])
            .map_err(|source| Error::Csv {
                path: path.clone(),
                source,
            })?;
    }
    w.into_inner().map_err(|e| Error::Format {
        path,
        message: e.to_string(),
    })
}

/// Writes `diagnostics.csv`, one `field_<step>.csv` per snapshot and `manifest.json` into `dir`.
///
/// Returns the manifest with output paths and checksum filled in.
pub fn emit_outputs(
    series: &DiagnosticsSeries,
    snapshots: &[FieldSnapshot],
    manifest: &RunManifest,
    dir: &Path,
) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![(dir.join(DIAGNOSTICS_FILE), diagnostics_csv(series)?)];
    for snapshot in snapshots {
        files.push((dir.join(snapshot.file_name()), snapshot_csv(snapshot)?));
    }

    let mut hasher = Sha256::new();
    let mut outputs = Vec::with_capacity(files.len() + 1);
    for (path, bytes) in &files {
        write_file(path, bytes)?;
        hasher.update(bytes);
        outputs.push(path.clone());
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        outputs,
        checksum: hex::encode(hasher.finalize()),
        ..manifest.clone()
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Format {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    write_file(&manifest_path, &json)?;
    Ok(manifest)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Reads a diagnostics CSV back into a series. Only the leading six columns are required.
pub fn read_diagnostics(path: &Path) -> Result<DiagnosticsSeries> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut index = Vec::new();
    for name in &DIAGNOSTICS_COLUMNS[..6] {
        index.push(column(name).ok_or_else(|| format_err(format!("missing column `{name}`")))?);
    }
    let monitor = column("monitor_sup_field");
    let speed = column("max_speed");
    let steady = column("steady_error");

    let mut series = DiagnosticsSeries::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let cell = |i: usize| record.get(i).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            cell(i)
                .parse::<f64>()
                .map_err(|e| format_err(format!("row {}: column {i}: {e}", row + 1)))
        };
        let maybe = |i: Option<usize>| -> Result<Option<f64>> {
            match i.map(cell) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| format_err(format!("row {}: {e}", row + 1))),
            }
        };
        let step = cell(index[0])
            .parse::<usize>()
            .map_err(|e| format_err(format!("row {}: step: {e}", row + 1)))?;
        series.steps.push(step);
        series.times.push(number(index[1])?);
        series.sup_field.push(maybe(Some(index[2]))?);
        series.energy.push(number(index[3])?);
        series.grid_half_length.push(number(index[4])?);
        series.valid_half_width.push(number(index[5])?);
        series
            .monitor_sup_field
            .push(maybe(monitor)?.unwrap_or(f64::NAN));
        series.max_speed.push(maybe(speed)?.unwrap_or(f64::NAN));
        series.steady_error.push(maybe(steady)?);
    }
    Ok(series)
}
