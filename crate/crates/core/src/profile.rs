//! User-demand profile: which labels to export, in which format, under which names,
//! and how competing sources are ranked during fusion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metadata::{Label, Provenance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("profile selects no labels")]
    EmptySelection,
    #[error("bad precedence: {0}")]
    BadPrecedence(String),
    #[error("rename for {0} which is not selected")]
    RenameUnselected(Label),
    #[error("bad column header {0:?}")]
    BadHeader(String),
    #[error("min_confidence {0} outside [0, 1]")]
    BadConfidence(f64),
    #[error("unknown output format {0:?}")]
    UnknownFormat(String),
    #[error("profile json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Ale,
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Ale => "ale",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for OutputFormat {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ale" => Ok(OutputFormat::Ale),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(ProfileError::UnknownFormat(s.to_string())),
        }
    }
}

pub const DEFAULT_PRECEDENCE: [Provenance; 5] =
    [Provenance::Manual, Provenance::SlateOcr, Provenance::Annotator, Provenance::Manifest, Provenance::Camera];

pub const DEFAULT_VIDEO_FORMAT: &str = "1080";

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    selected_labels: Vec<Label>,
    output_format: OutputFormat,
    column_renames: BTreeMap<Label, String>,
    precedence: Vec<Provenance>,
    min_confidence: f64,
    video_format: Option<String>,
    fps: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    selected_labels: Vec<String>,
    #[serde(default)]
    output_format: Option<String>,
    #[serde(default)]
    column_renames: BTreeMap<String, String>,
    #[serde(default)]
    precedence: Option<Vec<String>>,
    #[serde(default)]
    min_confidence: Option<f64>,
    #[serde(default)]
    video_format: Option<String>,
    #[serde(default)]
    fps: Option<f64>,
}

impl UserProfile {
    /// Profile with default precedence, no renames, `min_confidence` 0.
    pub fn new(selected_labels: Vec<Label>, output_format: OutputFormat) -> Result<Self, ProfileError> {
        let profile = Self {
            selected_labels,
            output_format,
            column_renames: BTreeMap::new(),
            precedence: DEFAULT_PRECEDENCE.to_vec(),
            min_confidence: 0.0,
            video_format: None,
            fps: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn with_renames(mut self, renames: BTreeMap<Label, String>) -> Result<Self, ProfileError> {
        self.column_renames = renames;
        self.validate()?;
        Ok(self)
    }

    pub fn with_precedence(mut self, precedence: Vec<Provenance>) -> Result<Self, ProfileError> {
        self.precedence = precedence;
        self.validate()?;
        Ok(self)
    }

    pub fn with_min_confidence(mut self, min_confidence: f64) -> Result<Self, ProfileError> {
        self.min_confidence = min_confidence;
        self.validate()?;
        Ok(self)
    }

    pub fn with_output_format(mut self, format: OutputFormat) -> Self {
        self.output_format = format;
        self
    }

    fn validate(&self) -> Result<(), ProfileError> {
        if self.selected_labels.is_empty() {
            return Err(ProfileError::EmptySelection);
        }
        let mut seen = Vec::new();
        for p in &self.precedence {
            if *p == Provenance::Fused || seen.contains(p) {
                return Err(ProfileError::BadPrecedence(format!("{p} duplicated or not rankable")));
            }
            seen.push(*p);
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(ProfileError::BadConfidence(self.min_confidence));
        }
        for (label, header) in &self.column_renames {
            if !self.selected_labels.contains(label) || *label == Label::Name {
                return Err(ProfileError::RenameUnselected(*label));
            }
            if header.is_empty() || header.contains(|c: char| c.is_control()) {
                return Err(ProfileError::BadHeader(header.clone()));
            }
        }
        let headers: Vec<&str> = self.columns().iter().map(|l| self.header(*l)).collect();
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(ProfileError::BadHeader(h.to_string()));
            }
        }
        Ok(())
    }

    pub fn selected_labels(&self) -> &[Label] {
        &self.selected_labels
    }

    pub fn output_format(&self) -> OutputFormat {
        self.output_format
    }

    pub fn precedence(&self) -> &[Provenance] {
        &self.precedence
    }

    pub fn min_confidence(&self) -> f64 {
        self.min_confidence
    }

    pub fn video_format(&self) -> &str {
        self.video_format.as_deref().unwrap_or(DEFAULT_VIDEO_FORMAT)
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    /// Export columns: `Name` first, then the selection in order.
    pub fn columns(&self) -> Vec<Label> {
        crate::formats::table::columns(&self.selected_labels)
    }

    /// Header text for `label` after renames.
    pub fn header(&self, label: Label) -> &str {
        self.column_renames.get(&label).map(String::as_str).unwrap_or(label.as_str())
    }

    /// Inverse of [`header`](Self::header) over the export columns.
    pub fn label_for_header(&self, header: &str) -> Option<Label> {
        self.columns().into_iter().find(|l| self.header(*l) == header)
    }

    /// Rank of a provenance: 0 is the most trusted. Unlisted sources rank after
    /// listed ones, in default order.
    pub fn precedence_rank(&self, provenance: Provenance) -> usize {
        if let Some(i) = self.precedence.iter().position(|p| *p == provenance) {
            return i;
        }
        let tail = DEFAULT_PRECEDENCE.iter().position(|p| *p == provenance).unwrap_or(DEFAULT_PRECEDENCE.len());
        self.precedence.len() + tail
    }
}

/// Parses and validates a `profile.json`, applying defaults for absent keys.
pub fn load_profile(text: &str) -> Result<UserProfile, ProfileError> {
    let raw: RawProfile = serde_json::from_str(text).map_err(|e| ProfileError::Json(e.to_string()))?;
    let parse_label = |s: &String| s.parse::<Label>().map_err(|_| ProfileError::UnknownLabel(s.clone()));
    let selected_labels = raw.selected_labels.iter().map(parse_label).collect::<Result<Vec<_>, _>>()?;
    let output_format = match raw.output_format {
        Some(f) => f.parse()?,
        None => OutputFormat::Ale,
    };
    let column_renames =
        raw.column_renames.iter().map(|(k, v)| parse_label(k).map(|l| (l, v.clone()))).collect::<Result<BTreeMap<_, _>, _>>()?;
    let precedence = match raw.precedence {
        Some(list) => list
            .iter()
            .map(|s| s.parse::<Provenance>().map_err(|_| ProfileError::BadPrecedence(format!("unknown provenance {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?,
        None => DEFAULT_PRECEDENCE.to_vec(),
    };
    if let Some(fps) = raw.fps {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(ProfileError::Json(format!("fps must be positive, got {fps}")));
        }
    }
    let profile = UserProfile {
        selected_labels,
        output_format,
        column_renames,
        precedence,
        min_confidence: raw.min_confidence.unwrap_or(0.0),
        video_format: raw.video_format,
        fps: raw.fps,
    };
    profile.validate()?;
    Ok(profile)
}
