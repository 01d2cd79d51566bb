//! Typed result bodies per detector kind.

use serde::{Deserialize, Serialize};

use crate::metadata::SceneType;

/// `[x, y, w, h]` in frame pixels.
pub type BoxXywh = [f64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredBox {
    #[serde(rename = "box")]
    pub bbox: BoxXywh,
    pub confidence: f64,
}

/// `face_detect` and `slate_detect` return a list of these.
pub type BoxList = Vec<ScoredBox>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingResult {
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneResult {
    pub scene_type: SceneType,
    pub place: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectHit {
    pub category: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcrResult {
    pub text: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseHeightResult {
    pub height_px: f64,
    pub confidence: f64,
}
