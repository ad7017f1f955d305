//! File formats: headerless count CSVs, single-column epoch CSVs, JSON
//! models/configs and provenance sidecars.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{CountMatrix, CountVector, EpochList, Horizon};

fn ingest(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        column,
        message: message.into(),
    }
}

/// Reads one day per row of nonnegative integer counts. A first row whose
/// first cell is not numeric is taken as a header and skipped. Row and
/// column numbers in errors are 1-based.
pub fn read_counts<R: Read>(reader: R, hours: f64) -> Result<CountMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<CountVector> = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if i == 0 && rec.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(ingest(row, rec.len().min(w) + 1, format!("expected {w} columns, found {}", rec.len())))
            }
            _ => {}
        }
        let counts = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<u64>()
                    .map_err(|_| ingest(row, j + 1, format!("{cell:?} is not a nonnegative integer count")))
            })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(CountVector(counts));
    }
    let p = width.ok_or_else(|| ingest(1, 1, "no data rows"))?;
    CountMatrix::new(Horizon::new(hours, p)?, rows)
}

pub fn read_counts_path(path: impl AsRef<Path>, hours: f64) -> Result<CountMatrix> {
    read_counts(BufReader::new(File::open(path)?), hours)
}

pub fn write_counts<W: Write>(writer: W, data: &CountMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in data.rows() {
        w.write_record(row.0.iter().map(|c| c.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_counts_path(path: impl AsRef<Path>, data: &CountMatrix) -> Result<()> {
    write_counts(BufWriter::new(File::create(path)?), data)
}

/// One arrival time per line.
pub fn write_epochs<W: Write>(mut writer: W, epochs: &EpochList) -> Result<()> {
    for t in epochs.times() {
        writeln!(writer, "{t}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_epochs<R: Read>(reader: R) -> Result<EpochList> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut times = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(t) if t.is_finite() => times.push(t),
            _ if i == 0 => continue,
            _ => return Err(ingest(i + 1, 1, format!("{cell:?} is not a time"))),
        }
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ingest(1, 1, "epochs are not sorted"));
    }
    Ok(EpochList(times))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Short SHA-256 of a value's JSON encoding.
pub fn json_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("value serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
}

impl Sidecar {
    pub fn new<T: Serialize>(command: &str, seed: u64, config: &T) -> Self {
        Sidecar {
            command: command.to_string(),
            config_hash: json_hash(config),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
        }
    }

    /// Writes `<output>.meta.json`.
    pub fn write_beside(&self, output: impl AsRef<Path>) -> Result<()> {
        let mut name = output.as_ref().as_os_str().to_owned();
        name.push(".meta.json");
        write_json(Path::new(&name), self)
    }
}
