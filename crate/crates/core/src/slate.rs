//! Slate reading: find the frame showing the board, align it to a registered
//! template by feature matching, then OCR each template field region.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bridge::results::OcrResult;
use crate::bridge::{encode_image, BridgeError, DetectorClient, DetectorKind};
use crate::formats::{read_raster, FormatError, RasterFile};
use crate::geometry::{
    compute_descriptors, detect_corners, fit_transform_ransac, match_descriptors, CornerParams, Descriptor, GeometryError, Point,
    RansacParams, TransformKind, TransformModel,
};
use crate::imaging::{to_grayscale, Image};

/// Smallest side accepted for frames and templates.
pub const MIN_SIDE: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlateError {
    #[error("too few feature matches: {0}")]
    TooFewMatches(usize),
    #[error("alignment rejected: {inliers} inliers, need {needed}")]
    AlignmentRejected { inliers: usize, needed: usize },
    #[error("no slate found in {scanned} frames")]
    NoSlateFound { scanned: usize },
    #[error("image smaller than {MIN_SIDE} px on a side")]
    TooSmall,
    #[error("bad template: {0}")]
    BadTemplate(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("detector unavailable: {0}")]
    DetectorUnavailable(#[from] BridgeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Integer,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlateRegion {
    pub name: String,
    /// `[x, y, w, h]` in template pixels.
    pub rect: [usize; 4],
    pub value_kind: ValueKind,
}

impl SlateRegion {
    /// Corners clockwise from the top-left, on pixel centres.
    pub fn corners(&self) -> [Point<f64>; 4] {
        let [x, y, w, h] = self.rect.map(|v| v as f64);
        [Point::new(x, y), Point::new(x + w - 1.0, y), Point::new(x + w - 1.0, y + h - 1.0), Point::new(x, y + h - 1.0)]
    }
}

#[derive(Debug, Clone)]
pub struct SlateTemplate {
    template_id: String,
    image: Image<f64>,
    regions: Vec<SlateRegion>,
    descriptors: Vec<Descriptor<f64>>,
}

impl SlateTemplate {
    /// Validates the regions and precomputes template features with `corners`.
    pub fn new(template_id: &str, image: Image<f64>, regions: Vec<SlateRegion>, corners: &CornerParams) -> Result<Self, SlateError> {
        let image = if image.channels() == 1 { image } else { to_grayscale(&image) };
        if image.width() < MIN_SIDE || image.height() < MIN_SIDE {
            return Err(SlateError::TooSmall);
        }
        let mut names = HashSet::new();
        for r in &regions {
            let [x, y, w, h] = r.rect;
            if w == 0 || h == 0 || x + w > image.width() || y + h > image.height() {
                return Err(SlateError::BadTemplate(format!("region {:?} lies outside the template", r.name)));
            }
            if !names.insert(r.name.as_str()) {
                return Err(SlateError::BadTemplate(format!("duplicate region {:?}", r.name)));
            }
        }
        let descriptors = compute_descriptors(&image, &detect_corners(&image, corners));
        Ok(Self { template_id: template_id.to_string(), image, regions, descriptors })
    }

    pub fn template_id(&self) -> &str {
        &self.template_id
    }

    pub fn image(&self) -> &Image<f64> {
        &self.image
    }

    pub fn regions(&self) -> &[SlateRegion] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&SlateRegion> {
        self.regions.iter().find(|r| r.name == name)
    }
}

/// Loads `<dir>/<id>.ppm` (or `.pgm`) and `<dir>/<id>.regions.json`.
pub fn load_template(dir: &Path, template_id: &str, cfg: &SlateConfig) -> Result<SlateTemplate, SlateError> {
    let ppm = dir.join(format!("{template_id}.ppm"));
    let image_path = if ppm.exists() { ppm } else { dir.join(format!("{template_id}.pgm")) };
    let image: Image<f64> = read_raster(&image_path)?.to_image();
    let regions_path = dir.join(format!("{template_id}.regions.json"));
    let text = std::fs::read_to_string(&regions_path).map_err(|e| FormatError::io(&regions_path, e))?;
    let regions: Vec<SlateRegion> =
        serde_json::from_str(&text).map_err(|e| SlateError::BadTemplate(format!("{}: {e}", regions_path.display())))?;
    SlateTemplate::new(template_id, image, regions, &cfg.corners)
}

/// Writes a template in registry layout.
pub fn save_template(dir: &Path, template: &SlateTemplate) -> Result<(), SlateError> {
    let raster = RasterFile::from_image(&template.image.to_rgb(), 255)?;
    crate::formats::write_raster(&raster, &dir.join(format!("{}.ppm", template.template_id)))?;
    let path = dir.join(format!("{}.regions.json", template.template_id));
    let text = serde_json::to_string_pretty(&template.regions).expect("regions serialize");
    std::fs::write(&path, text).map_err(|e| FormatError::io(&path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlateConfig {
    pub min_inliers: usize,
    pub scan_frames: usize,
    pub corners: CornerParams,
    pub match_ratio: f64,
    pub ransac_iterations: usize,
    pub ransac_threshold: f64,
    pub seed: u64,
}

impl Default for SlateConfig {
    fn default() -> Self {
        Self {
            min_inliers: 15,
            scan_frames: 48,
            corners: CornerParams { max_corners: 300, min_distance: 4.0, quality: 0.01 },
            match_ratio: 0.85,
            ransac_iterations: 1000,
            ransac_threshold: 2.0,
            seed: 0,
        }
    }
}

/// A frame-to-template homography with its match statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Maps frame pixels to template pixels.
    pub homography: TransformModel<f64>,
    pub matches: usize,
}

impl Alignment {
    pub fn inliers(&self) -> usize {
        self.homography.inliers.len()
    }

    /// Inlier fraction of the putative matches.
    pub fn confidence(&self) -> f64 {
        if self.matches == 0 {
            0.0
        } else {
            self.inliers() as f64 / self.matches as f64
        }
    }
}

/// Aligns `frame` to the template. With `boxes`, only frame corners inside one
/// of the `[x, y, w, h]` proposals take part.
pub fn align_to_template(
    frame: &Image<f64>,
    template: &SlateTemplate,
    cfg: &SlateConfig,
    boxes: Option<&[[f64; 4]]>,
) -> Result<Alignment, SlateError> {
    if frame.width() < MIN_SIDE || frame.height() < MIN_SIDE {
        return Err(SlateError::TooSmall);
    }
    let gray = if frame.channels() == 1 { frame.clone() } else { to_grayscale(frame) };
    let mut corners = detect_corners(&gray, &cfg.corners);
    if let Some(boxes) = boxes {
        corners.retain(|c| boxes.iter().any(|b| c.x >= b[0] && c.y >= b[1] && c.x < b[0] + b[2] && c.y < b[1] + b[3]));
    }
    let descriptors = compute_descriptors(&gray, &corners);
    let matches = match_descriptors(&descriptors, &template.descriptors, cfg.match_ratio);
    let params = RansacParams::new(TransformKind::Homography, cfg.ransac_iterations, cfg.ransac_threshold, cfg.seed);
    let homography = match fit_transform_ransac(&matches, &params) {
        Ok(h) => h,
        Err(GeometryError::TooFewMatches { got, .. }) => return Err(SlateError::TooFewMatches(got)),
        Err(_) => return Err(SlateError::AlignmentRejected { inliers: 0, needed: cfg.min_inliers }),
    };
    if homography.inliers.len() < cfg.min_inliers {
        return Err(SlateError::AlignmentRejected { inliers: homography.inliers.len(), needed: cfg.min_inliers });
    }
    Ok(Alignment { homography, matches: matches.len() })
}

/// Scans the first `scan_frames` frames and keeps the one with the most
/// inliers (earliest on ties). `proposals[i]`, when given, restricts frame `i`.
pub fn find_slate_frame(
    frames: &[Image<f64>],
    template: &SlateTemplate,
    cfg: &SlateConfig,
    proposals: Option<&[Option<Vec<[f64; 4]>>]>,
) -> Result<(usize, Alignment), SlateError> {
    let scanned = frames.len().min(cfg.scan_frames);
    let mut best: Option<(usize, Alignment)> = None;
    for (i, frame) in frames.iter().take(scanned).enumerate() {
        let boxes = proposals.and_then(|p| p.get(i)).and_then(|b| b.as_deref());
        match align_to_template(frame, template, cfg, boxes) {
            Ok(a) => {
                if best.as_ref().is_none_or(|(_, b)| a.inliers() > b.inliers()) {
                    best = Some((i, a));
                }
            }
            Err(SlateError::TooSmall) => return Err(SlateError::TooSmall),
            Err(_) => {}
        }
    }
    best.ok_or(SlateError::NoSlateFound { scanned })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldReading {
    pub raw_text: String,
    /// Present only when the trimmed text is all ASCII digits.
    pub parsed: Option<u32>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlateReading {
    pub frame_index: usize,
    pub homography: TransformModel<f64>,
    pub alignment_inliers: usize,
    pub fields: BTreeMap<String, FieldReading>,
}

impl SlateReading {
    pub fn number(&self, region: &str) -> Option<(u32, f64)> {
        self.fields.get(region).and_then(|f| f.parsed.map(|v| (v, f.confidence)))
    }
}

/// Digits-only parse; anything else (including "12A") stays unparsed.
pub fn parse_slate_integer(text: &str) -> Option<u32> {
    let t = text.trim();
    if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    t.parse().ok()
}

/// Resamples a template region out of the frame (inverse mapping through the
/// homography, bilinear; samples falling outside the frame are 0).
pub fn region_crop(frame: &Image<f64>, alignment: &Alignment, region: &SlateRegion) -> Image<f64> {
    let gray = if frame.channels() == 1 { frame.clone() } else { to_grayscale(frame) };
    let inverse = alignment.homography.inverse();
    let [x0, y0, w, h] = region.rect;
    Image::from_fn(w, h, 1, |x, y, _| {
        let p = Point::new((x0 + x) as f64, (y0 + y) as f64);
        inverse.as_ref().and_then(|m| m.apply(p)).and_then(|q| gray.sample_bilinear(q.x, q.y, 0)).unwrap_or(0.0)
    })
    .expect("region validated non-empty")
}

/// Sends each template region crop to OCR. Regions the backend has no answer
/// for are left out of the reading.
pub fn extract_fields(
    frame: &Image<f64>,
    frame_index: usize,
    alignment: &Alignment,
    template: &SlateTemplate,
    ocr: &mut DetectorClient,
    clip: &str,
) -> Result<SlateReading, SlateError> {
    let mut fields = BTreeMap::new();
    for region in template.regions() {
        let crop = region_crop(frame, alignment, region);
        let payload = json!({
            "region": region.name,
            "template_id": template.template_id(),
            "image": encode_image(&crop),
        });
        let Some(result) = ocr.call_typed::<OcrResult>(DetectorKind::Ocr, clip, frame_index as u32, payload)? else {
            continue;
        };
        let parsed = match region.value_kind {
            ValueKind::Integer => parse_slate_integer(&result.text),
            ValueKind::Text => None,
        };
        let confidence = (result.confidence.clamp(0.0, 1.0) * alignment.confidence()).clamp(0.0, 1.0);
        fields.insert(region.name.clone(), FieldReading { raw_text: result.text, parsed, confidence });
    }
    Ok(SlateReading { frame_index, homography: alignment.homography.clone(), alignment_inliers: alignment.inliers(), fields })
}

/// Mean distance between where `truth` (template → frame) and the alignment
/// (frame → template, inverted) put the region corners, in frame pixels.
pub fn region_corner_error(alignment: &Alignment, truth: &TransformModel<f64>, template: &SlateTemplate) -> Option<f64> {
    let est = alignment.homography.inverse()?;
    let mut total = 0.0;
    let mut n = 0usize;
    for r in template.regions() {
        for c in r.corners() {
            total += est.apply(c)?.distance(truth.apply(c)?);
            n += 1;
        }
    }
    (n > 0).then(|| total / n as f64)
}
