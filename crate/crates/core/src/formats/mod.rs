//! Interchange formats: ALE, CSV, JSON sidecars and the JSON-lines catalog,
//! clip manifests and PGM/PPM rasters.

pub mod ale;
pub mod csv;
pub mod manifest;
pub mod raster;
pub mod table;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metadata::MetadataRecord;
use crate::profile::{OutputFormat, UserProfile};

pub use ale::{ale_document, parse_ale, records_from_ale, write_ale, AleDocument};
pub use csv::{parse_csv, write_csv};
pub use manifest::{parse_manifest, ClipManifest};
pub use raster::{read_image, read_raster, write_raster, RasterFile};

/// Frame rate given to imported records when neither the file nor the profile names one.
pub const DEFAULT_IMPORT_FPS: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("missing section {0:?}")]
    MissingSection(String),
    #[error("line {line}: expected {expected} cells, got {got}")]
    RowArity { line: usize, expected: usize, got: usize },
    #[error("line {line}: embedded tab or control character")]
    ControlChar { line: usize },
    #[error("profile selects no columns")]
    EmptySelection,
    #[error("cell would break the delimiter grammar: {0}")]
    CellDelimiter(String),
    #[error("header mismatch: expected {expected:?}, got {got:?}")]
    HeaderMismatch { expected: String, got: String },
    #[error("csv line {line}: {message}")]
    CsvSyntax { line: usize, message: String },
    #[error("not a binary PGM/PPM file")]
    BadMagic,
    #[error("payload truncated: expected {expected} samples, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("unsupported max value {0}")]
    UnsupportedMaxValue(u32),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("bad type: {0}")]
    BadType(String),
    #[error("duplicate clip id {0:?}")]
    DuplicateClipId(String),
    #[error("json line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl FormatError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), message: err.to_string() }
    }
}

/// Serializes records as the selected format of `profile`.
pub fn export(records: &[MetadataRecord], profile: &UserProfile) -> Result<String, FormatError> {
    match profile.output_format() {
        OutputFormat::Ale => write_ale(records, profile),
        OutputFormat::Csv => write_csv(records, profile),
        OutputFormat::Json => write_json(records, profile),
    }
}

/// Pretty JSON array of sidecar records, semantic fields restricted to the selection.
pub fn write_json(records: &[MetadataRecord], profile: &UserProfile) -> Result<String, FormatError> {
    if profile.selected_labels().is_empty() {
        return Err(FormatError::EmptySelection);
    }
    let restricted: Vec<MetadataRecord> = records.iter().map(|r| table::restrict(r, profile.selected_labels())).collect();
    let mut text = serde_json::to_string_pretty(&restricted).expect("records serialize");
    text.push('\n');
    Ok(text)
}

pub fn parse_json(text: &str) -> Result<Vec<MetadataRecord>, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Json { line: e.line(), message: e.to_string() })
}

/// Catalog text: one compact record per line, LF terminated.
pub fn write_catalog(records: &[MetadataRecord]) -> Result<String, FormatError> {
    let mut seen = HashSet::new();
    let mut out = String::new();
    for r in records {
        if !seen.insert(r.clip_id.as_str()) {
            return Err(FormatError::DuplicateClipId(r.clip_id.to_string()));
        }
        out.push_str(&r.to_json());
        out.push('\n');
    }
    Ok(out)
}

/// Records in file order. Blank lines are skipped.
pub fn parse_catalog(text: &str) -> Result<Vec<MetadataRecord>, FormatError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = MetadataRecord::from_json(line).map_err(|e| FormatError::Json { line: i + 1, message: e.to_string() })?;
        if !seen.insert(record.clip_id.to_string()) {
            return Err(FormatError::DuplicateClipId(record.clip_id.to_string()));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_catalog(path: &Path) -> Result<Vec<MetadataRecord>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_catalog(&text)
}
