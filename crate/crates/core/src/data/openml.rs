//! OpenML download with an on-disk cache keyed by dataset ID.
//!
//! Cache layout under `<cache_dir>/<id>/`:
//! `description.json` and `raw.csv` are the downloaded bytes; `canonical.csv`
//! holds the feature columns followed by a `target` column and is what every
//! call (cold or warm) parses, so repeated loads are bit-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::data::{read_csv, LabelColumn, TabularDataset};
use crate::error::{Error, Result};

const CANONICAL_LABEL: &str = "target";

#[derive(Debug)]
pub enum TransportError {
    NotFound,
    Failed(String),
}

/// Blocking HTTP GET. Swappable so tests can count or forbid network calls.
pub trait Transport {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, TransportError>;
}

pub struct HttpTransport;

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, TransportError> {
        match ureq::get(url).call() {
            Ok(resp) => resp
                .into_body()
                .read_to_vec()
                .map_err(|e| TransportError::Failed(e.to_string())),
            Err(ureq::Error::StatusCode(404 | 412)) => Err(TransportError::NotFound),
            Err(e) => Err(TransportError::Failed(e.to_string())),
        }
    }
}

pub struct OpenMlFetcher<T: Transport = HttpTransport> {
    cache_dir: PathBuf,
    transport: T,
    api_base: String,
}

impl OpenMlFetcher<HttpTransport> {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self::with_transport(cache_dir, HttpTransport)
    }
}

impl<T: Transport> OpenMlFetcher<T> {
    pub fn with_transport(cache_dir: impl Into<PathBuf>, transport: T) -> Self {
        Self {
            cache_dir: cache_dir.into(),
            transport,
            api_base: "https://api.openml.org".to_string(),
        }
    }

    pub fn entry_dir(&self, id: u64) -> PathBuf {
        self.cache_dir.join(id.to_string())
    }

    pub fn fetch(&self, id: u64) -> Result<TabularDataset> {
        let dir = self.entry_dir(id);
        let canonical = dir.join("canonical.csv");
        if !canonical.exists() {
            self.download(id, &dir)?;
        }
        let file = fs::File::open(&canonical)?;
        read_csv(file, &LabelColumn::Name(CANONICAL_LABEL.into()))
    }

    fn download(&self, id: u64, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let desc_bytes = self.get(id, &format!("{}/api/v1/json/data/{id}", self.api_base))?;
        write_atomic(&dir.join("description.json"), &desc_bytes)?;
        let desc: Value = serde_json::from_slice(&desc_bytes)?;
        let meta = &desc["data_set_description"];
        let file_id = json_str(&meta["file_id"]).ok_or(Error::UnknownDataset(id))?;
        let target = json_str(&meta["default_target_attribute"]).ok_or_else(|| {
            Error::InvalidArgument(format!("OpenML dataset {id} has no default target"))
        })?;
        let mut dropped = json_list(&meta["ignore_attribute"]);
        dropped.extend(json_list(&meta["row_id_attribute"]));

        let raw = self.get(id, &format!("{}/data/v1/get_csv/{file_id}", self.api_base))?;
        write_atomic(&dir.join("raw.csv"), &raw)?;
        let canonical = canonicalize(&raw, &target, &dropped)?;
        write_atomic(&dir.join("canonical.csv"), &canonical)
    }

    fn get(&self, id: u64, url: &str) -> Result<Vec<u8>> {
        self.transport.get(url).map_err(|e| match e {
            TransportError::NotFound => Error::UnknownDataset(id),
            TransportError::Failed(message) => Error::Network { id, message },
        })
    }
}

pub fn fetch_openml(dataset_id: u64, cache_dir: impl Into<PathBuf>) -> Result<TabularDataset> {
    OpenMlFetcher::new(cache_dir).fetch(dataset_id)
}

fn json_str(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn json_list(v: &Value) -> Vec<String> {
    match v {
        Value::Array(items) => items.iter().filter_map(json_str).collect(),
        other => json_str(other).into_iter().collect(),
    }
}

/// Rewrites the downloaded table as features-then-`target`, dropping
/// ignored and row-id attributes.
fn canonicalize(raw: &[u8], target: &str, dropped: &[String]) -> Result<Vec<u8>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::MissingLabelColumn(target.to_string()))?;
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_idx && !dropped.contains(&headers[j]))
        .collect();

    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = keep.iter().map(|&j| headers[j].as_str()).collect();
    header.push(CANONICAL_LABEL);
    out.write_record(&header)?;
    for record in rdr.records() {
        let record = record?;
        let mut row: Vec<&str> = keep.iter().map(|&j| &record[j]).collect();
        row.push(&record[target_idx]);
        out.write_record(&row)?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Write to a temporary sibling then rename; concurrent writers race benignly.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
