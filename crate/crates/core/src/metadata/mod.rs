//! Clip metadata schema: camera basics, cinematography labels, provenance.
//!
//! Every extracted value travels as an [`Annotated`] carrying its confidence and
//! the stage that produced it, so that fusion can arbitrate between sources and
//! exports can stay honest about where a number came from.

mod label;
mod predicate;
mod timecode;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use label::Label;
pub use predicate::{parse_predicate, Clause, ClauseValue, PredicateError, QueryPredicate};
pub use timecode::Timecode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetadataError {
    #[error("invalid clip id {0:?}: must be non-empty without tab, newline or comma")]
    InvalidClipId(String),
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
    #[error("{provenance} values must carry confidence 1, got {confidence}")]
    ProvenanceConfidence { provenance: Provenance, confidence: f64 },
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("timecode: {0}")]
    Timecode(String),
    #[error("invalid {kind} value {value:?}")]
    InvalidValue { kind: &'static str, value: String },
}

/// Identifier of one take. Safe to embed verbatim in ALE, CSV and JSON.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClipId(String);

impl ClipId {
    pub fn new(value: impl Into<String>) -> Result<Self, MetadataError> {
        let value = value.into();
        if value.is_empty() || value.contains(['\t', '\n', '\r', ',']) {
            return Err(MetadataError::InvalidClipId(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClipId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ClipId {
    type Error = MetadataError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ClipId::new(value)
    }
}

impl From<ClipId> for String {
    fn from(id: ClipId) -> Self {
        id.0
    }
}

impl FromStr for ClipId {
    type Err = MetadataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClipId::new(s)
    }
}

/// Where a metadata value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Camera,
    SlateOcr,
    Annotator,
    Manifest,
    Manual,
    Fused,
}

impl Provenance {
    pub const ALL: [Provenance; 6] =
        [Provenance::Camera, Provenance::SlateOcr, Provenance::Annotator, Provenance::Manifest, Provenance::Manual, Provenance::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Camera => "camera",
            Provenance::SlateOcr => "slate_ocr",
            Provenance::Annotator => "annotator",
            Provenance::Manifest => "manifest",
            Provenance::Manual => "manual",
            Provenance::Fused => "fused",
        }
    }

    fn requires_full_confidence(self) -> bool {
        matches!(self, Provenance::Camera | Provenance::Manifest)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = MetadataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| MetadataError::InvalidValue { kind: "provenance", value: s.into() })
    }
}

/// A value plus its confidence and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAnnotated<V>", bound(deserialize = "V: Deserialize<'de>", serialize = "V: Serialize"))]
pub struct Annotated<V> {
    value: V,
    confidence: f64,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawAnnotated<V> {
    value: V,
    confidence: f64,
    provenance: Provenance,
}

impl<V> TryFrom<RawAnnotated<V>> for Annotated<V> {
    type Error = MetadataError;

    fn try_from(raw: RawAnnotated<V>) -> Result<Self, Self::Error> {
        Annotated::new(raw.value, raw.confidence, raw.provenance)
    }
}

impl<V> Annotated<V> {
    pub fn new(value: V, confidence: f64, provenance: Provenance) -> Result<Self, MetadataError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(MetadataError::Confidence(confidence));
        }
        if provenance.requires_full_confidence() && confidence != 1.0 {
            return Err(MetadataError::ProvenanceConfidence { provenance, confidence });
        }
        Ok(Self { value, confidence, provenance })
    }

    /// Value at confidence 1 from a source that is trusted outright.
    pub fn certain(value: V, provenance: Provenance) -> Self {
        Self { value, confidence: 1.0, provenance }
    }

    /// Value produced by an annotator or OCR; confidence is clamped into [0, 1].
    pub fn estimated(value: V, confidence: f64, provenance: Provenance) -> Self {
        let confidence = if confidence.is_nan() { 0.0 } else { confidence.clamp(0.0, 1.0) };
        let confidence = if provenance.requires_full_confidence() { 1.0 } else { confidence };
        Self { value, confidence, provenance }
    }

    pub fn value(&self) -> &V {
        &self.value
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn into_value(self) -> V {
        self.value
    }

    pub fn map<U>(self, f: impl FnOnce(V) -> U) -> Annotated<U> {
        Annotated { value: f(self.value), confidence: self.confidence, provenance: self.provenance }
    }
}

/// Camera-recorded basics of a take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBasic")]
pub struct BasicMetadata {
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shutter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso: Option<u32>,
    pub timecode_start: Timecode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<f64>,
}

#[derive(Deserialize)]
struct RawBasic {
    fps: f64,
    #[serde(default)]
    shutter: Option<f64>,
    #[serde(default)]
    aperture: Option<f64>,
    #[serde(default)]
    iso: Option<u32>,
    timecode_start: Timecode,
    #[serde(default)]
    focus: Option<f64>,
}

impl TryFrom<RawBasic> for BasicMetadata {
    type Error = MetadataError;

    fn try_from(raw: RawBasic) -> Result<Self, Self::Error> {
        let basic = BasicMetadata {
            fps: raw.fps,
            shutter: raw.shutter,
            aperture: raw.aperture,
            iso: raw.iso,
            timecode_start: raw.timecode_start,
            focus: raw.focus,
        };
        basic.validate()?;
        Ok(basic)
    }
}

impl BasicMetadata {
    /// Basics with only a frame rate known; timecode starts at zero.
    pub fn with_fps(fps: f64) -> Result<Self, MetadataError> {
        let basic = BasicMetadata {
            fps,
            shutter: None,
            aperture: None,
            iso: None,
            timecode_start: Timecode::zero(nominal_fps_base(fps))?,
            focus: None,
        };
        basic.validate()?;
        Ok(basic)
    }

    pub fn validate(&self) -> Result<(), MetadataError> {
        let positive = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(MetadataError::NonPositive { field, value: v })
            }
        };
        positive("fps", self.fps)?;
        for (field, v) in [("shutter", self.shutter), ("aperture", self.aperture), ("focus", self.focus)] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        if self.iso == Some(0) {
            return Err(MetadataError::NonPositive { field: "iso", value: 0.0 });
        }
        Ok(())
    }
}

/// Integer timecode base for a (possibly fractional) frame rate: 23.976 → 24.
pub fn nominal_fps_base(fps: f64) -> u32 {
    if fps.is_finite() && fps >= 0.5 {
        fps.round() as u32
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraMove {
    Static,
    Pan,
    Tilt,
    Truck,
    Pedestal,
    Dolly,
    Zoom,
    Handheld,
    Unknown,
}

impl CameraMove {
    pub const ALL: [CameraMove; 9] = [
        CameraMove::Static,
        CameraMove::Pan,
        CameraMove::Tilt,
        CameraMove::Truck,
        CameraMove::Pedestal,
        CameraMove::Dolly,
        CameraMove::Zoom,
        CameraMove::Handheld,
        CameraMove::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CameraMove::Static => "static",
            CameraMove::Pan => "pan",
            CameraMove::Tilt => "tilt",
            CameraMove::Truck => "truck",
            CameraMove::Pedestal => "pedestal",
            CameraMove::Dolly => "dolly",
            CameraMove::Zoom => "zoom",
            CameraMove::Handheld => "handheld",
            CameraMove::Unknown => "unknown",
        }
    }
}

/// Framing breadth, ordered broadest to tightest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotType {
    Full,
    MediumFull,
    Medium,
    Close,
    CloseUp,
}

impl ShotType {
    pub const ALL: [ShotType; 5] = [ShotType::Full, ShotType::MediumFull, ShotType::Medium, ShotType::Close, ShotType::CloseUp];

    pub fn as_str(self) -> &'static str {
        match self {
            ShotType::Full => "full",
            ShotType::MediumFull => "medium_full",
            ShotType::Medium => "medium",
            ShotType::Close => "close",
            ShotType::CloseUp => "close_up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DayNight {
    Day,
    Night,
}

impl DayNight {
    pub const ALL: [DayNight; 2] = [DayNight::Day, DayNight::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            DayNight::Day => "Day",
            DayNight::Night => "Night",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SceneType {
    Inside,
    Outside,
}

impl SceneType {
    pub const ALL: [SceneType; 2] = [SceneType::Inside, SceneType::Outside];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneType::Inside => "Inside",
            SceneType::Outside => "Outside",
        }
    }
}

macro_rules! vocabulary {
    ($ty:ident, $kind:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = MetadataError;

            /// Case-insensitive; `-` and `_` are interchangeable.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted = s.trim().to_ascii_lowercase().replace('-', "_");
                $ty::ALL
                    .into_iter()
                    .find(|v| v.as_str().to_ascii_lowercase() == wanted)
                    .ok_or_else(|| MetadataError::InvalidValue { kind: $kind, value: s.into() })
            }
        }
    };
}

vocabulary!(CameraMove, "CameraMove");
vocabulary!(ShotType, "ShotType");
vocabulary!(DayNight, "Time");
vocabulary!(SceneType, "SceneType");

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.contains(|c: char| c == ';' || c.is_control())
}

/// Actor identity from the gallery.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawActor")]
pub struct ActorPid {
    pid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    display_name: Option<String>,
}

#[derive(Deserialize)]
struct RawActor {
    pid: String,
    #[serde(default)]
    display_name: Option<String>,
}

impl TryFrom<RawActor> for ActorPid {
    type Error = MetadataError;

    fn try_from(raw: RawActor) -> Result<Self, Self::Error> {
        ActorPid::new(raw.pid, raw.display_name)
    }
}

impl ActorPid {
    /// `pid` must be non-empty and free of `;` and control characters.
    pub fn new(pid: impl Into<String>, display_name: Option<String>) -> Result<Self, MetadataError> {
        let pid = pid.into();
        if !valid_token(&pid) {
            return Err(MetadataError::InvalidValue { kind: "ActorPID", value: pid });
        }
        Ok(Self { pid, display_name })
    }

    pub fn pid(&self) -> &str {
        &self.pid
    }

    pub fn display_name(&self) -> Option<&str> {
        self.display_name.as_deref()
    }
}

impl fmt::Display for ActorPid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pid)
    }
}

/// Scene, place or object category name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Category(String);

impl Category {
    pub fn new(name: impl Into<String>) -> Result<Self, MetadataError> {
        let name = name.into();
        if !valid_token(&name) {
            return Err(MetadataError::InvalidValue { kind: "category", value: name });
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Category {
    type Error = MetadataError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Category::new(value)
    }
}

impl From<Category> for String {
    fn from(c: Category) -> Self {
        c.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The ten cinematography label classes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_num: Option<Annotated<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_num: Option<Annotated<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub take_num: Option<Annotated<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_move: Option<Annotated<CameraMove>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_type: Option<Annotated<ShotType>>,
    #[serde(rename = "actor_pid", default, skip_serializing_if = "Vec::is_empty")]
    pub actors: Vec<Annotated<ActorPid>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Annotated<DayNight>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_type: Option<Annotated<SceneType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub places: Option<Annotated<Category>>,
    #[serde(rename = "object_type", default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<Annotated<Category>>,
}

/// One clip's fused metadata, the unit of the catalog and of every export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub clip_id: ClipId,
    pub basic: BasicMetadata,
    #[serde(default)]
    pub semantic: SemanticFields,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Keys this version does not know, carried through untouched.
    #[serde(flatten)]
    pub extras: BTreeMap<String, serde_json::Value>,
}

impl MetadataRecord {
    pub fn new(clip_id: ClipId, basic: BasicMetadata) -> Self {
        Self { clip_id, basic, semantic: SemanticFields::default(), notes: None, extras: BTreeMap::new() }
    }

    /// Appends an audit line to `notes` (`; `-separated).
    pub fn push_note(&mut self, note: &str) {
        match &mut self.notes {
            Some(existing) if !existing.is_empty() => {
                existing.push_str("; ");
                existing.push_str(note);
            }
            _ => self.notes = Some(note.to_string()),
        }
    }

    /// Canonical JSON sidecar text (single line).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metadata record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
