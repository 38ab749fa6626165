use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use pmiprof::PairedSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    /// Shortest round-trip formatting for numbers.
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => {
                serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into)
            }
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                Ok(w.into_inner().context("flushing csv")?)
            }
            Format::Json => {
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect()
                    })
                    .collect();
                json_bytes(&records)
            }
        }
    }
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sample_table(sample: &PairedSample) -> Table {
    let header = (1..=sample.dim_x())
        .map(|i| format!("x{i}"))
        .chain((1..=sample.dim_y()).map(|j| format!("y{j}")));
    let mut table = Table::new(header);
    for i in 0..sample.len() {
        table.push(
            sample
                .x(i)
                .iter()
                .chain(sample.y(i))
                .map(|&v| Cell::Num(v))
                .collect(),
        );
    }
    table
}

/// Reads a sample CSV with header `x1..xm,y1..yn`.
pub fn read_sample(path: &Path) -> Result<PairedSample> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = reader.headers()?.clone();
    let dim_x = header.iter().take_while(|h| h.starts_with('x')).count();
    let dim_y = header.len() - dim_x;
    let expected: Vec<String> = (1..=dim_x)
        .map(|i| format!("x{i}"))
        .chain((1..=dim_y).map(|j| format!("y{j}")))
        .collect();
    if dim_x == 0 || dim_y == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        bail!(UsageError(format!(
            "{}: header must be x1..xm,y1..yn, got {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>()
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!("{} row {}: bad number {field:?}", path.display(), line + 1)
            })?;
            if j < dim_x {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    Ok(PairedSample::new(dim_x, dim_y, xs, ys)?)
}

/// Bad flag values that clap cannot catch; exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: Vec<String>,
    root_seed: u64,
    version: &'static str,
    outputs: Vec<FileDigest>,
}

/// Main output (file or stdout), sidecars next to it, and the run manifest.
pub struct Output {
    path: Option<PathBuf>,
    written: Vec<(PathBuf, Vec<u8>)>,
}

impl Output {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self {
            path,
            written: Vec::new(),
        }
    }

    pub fn is_file(&self) -> bool {
        self.path.is_some()
    }

    pub fn write(&mut self, bytes: Vec<u8>) -> Result<()> {
        match self.path.clone() {
            Some(p) => self.write_file(p, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    /// Writes `<stem>.<suffix>` next to the main output; requires `--out`.
    pub fn sidecar(&mut self, suffix: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.sidecar_path(suffix)?;
        self.write_file(path, bytes)
    }

    fn sidecar_path(&self, suffix: &str) -> Result<PathBuf> {
        let Some(main) = &self.path else {
            bail!(UsageError(format!(
                "writing the {suffix} sidecar needs --out"
            )));
        };
        let stem = main
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(main.with_file_name(format!("{stem}.{suffix}")))
    }

    fn write_file(&mut self, path: PathBuf, bytes: Vec<u8>) -> Result<()> {
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push((path, bytes));
        Ok(())
    }

    /// Writes `<stem>.manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &[String], seed: u64) -> Result<()> {
        if self.path.is_none() {
            return Ok(());
        }
        let outputs = self
            .written
            .iter()
            .map(|(p, bytes)| FileDigest {
                path: p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: hex::encode(Sha256::digest(bytes)),
            })
            .collect();
        let manifest = RunManifest {
            command: command.to_vec(),
            root_seed: seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs,
        };
        let path = self.sidecar_path("manifest.json")?;
        let bytes = json_bytes(&manifest)?;
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.clear();
        Ok(())
    }
}
