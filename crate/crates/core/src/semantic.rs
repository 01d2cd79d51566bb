//! Shot scale, actor identity, day/night and scene/object labels.
//!
//! Detection and embedding come from the detector bridge; this module only
//! turns those observations into annotated labels.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bridge::results::{BoxList, EmbeddingResult, ObjectHit, PoseHeightResult, SceneResult};
use crate::bridge::{encode_image, BridgeError, DetectorClient, DetectorKind};
use crate::imaging::{rgb_to_hsv, Image};
use crate::metadata::{ActorPid, Annotated, Category, DayNight, Provenance, SceneType, ShotType};

/// Tolerance on the unit norm of gallery and query embeddings.
pub const UNIT_NORM_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticError {
    #[error("no face and no person height to judge shot scale from")]
    NoSubject,
    #[error("embedding has dimension {got}, gallery uses {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no frames to classify")]
    NoFrames,
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("bad actor gallery: {0}")]
    BadGallery(String),
    #[error("detector unavailable: {0}")]
    DetectorUnavailable(String),
}

impl From<BridgeError> for SemanticError {
    fn from(e: BridgeError) -> Self {
        SemanticError::DetectorUnavailable(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub frame_index: u32,
    /// `[x, y, w, h]` in frame pixels.
    pub bbox: [f64; 4],
    pub embedding: Option<Vec<f64>>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleConfig {
    /// Face height ÷ frame height.
    pub face_breaks: [f64; 4],
    /// Extrapolated full-body height ÷ frame height.
    pub body_breaks: [f64; 4],
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self { face_breaks: [0.05, 0.10, 0.20, 0.35], body_breaks: [1.0, 1.4, 2.2, 3.5] }
    }
}

impl ScaleConfig {
    pub fn validate(&self) -> Result<(), SemanticError> {
        for (name, breaks) in [("face_breaks", &self.face_breaks), ("body_breaks", &self.body_breaks)] {
            if breaks.iter().any(|b| !b.is_finite() || *b <= 0.0) || breaks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SemanticError::BadConfig(format!("{name} must be positive and strictly increasing")));
            }
        }
        Ok(())
    }
}

/// Band of `ratio` against four increasing breaks: below the first is
/// `Full`, at or above the last is `CloseUp`.
pub fn band(ratio: f64, breaks: &[f64; 4]) -> ShotType {
    let idx = breaks.iter().take_while(|b| ratio >= **b).count();
    ShotType::ALL[idx]
}

/// Largest face box decides; without faces the person height is used at half
/// its pose confidence.
pub fn estimate_shot_scale(
    faces: &[FaceObservation],
    person: Option<&PoseHeightResult>,
    frame_height: usize,
    cfg: &ScaleConfig,
) -> Result<Annotated<ShotType>, SemanticError> {
    if frame_height == 0 {
        return Err(SemanticError::BadConfig("frame height must be positive".into()));
    }
    let h = frame_height as f64;
    let largest = faces.iter().filter(|f| f.bbox[3].is_finite() && f.bbox[3] > 0.0).fold(None::<&FaceObservation>, |best, f| match best {
        Some(b) if b.bbox[3] >= f.bbox[3] => Some(b),
        _ => Some(f),
    });
    if let Some(face) = largest {
        let shot = band(face.bbox[3] / h, &cfg.face_breaks);
        return Ok(Annotated::estimated(shot, face.confidence, Provenance::Annotator));
    }
    match person {
        Some(p) if p.height_px.is_finite() && p.height_px > 0.0 => {
            let shot = band(p.height_px / h, &cfg.body_breaks);
            Ok(Annotated::estimated(shot, 0.5 * p.confidence, Provenance::Annotator))
        }
        _ => Err(SemanticError::NoSubject),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub pid: String,
    #[serde(default)]
    pub display_name: Option<String>,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGallery {
    actors: Vec<ActorPid>,
    embeddings: Vec<Vec<f64>>,
    similarity_threshold: f64,
}

impl ActorGallery {
    pub fn new(entries: Vec<GalleryEntry>, similarity_threshold: f64) -> Result<Self, SemanticError> {
        if !(similarity_threshold > 0.0 && similarity_threshold < 1.0) {
            return Err(SemanticError::BadGallery(format!("threshold {similarity_threshold} outside (0, 1)")));
        }
        let dim = entries.first().map_or(0, |e| e.embedding.len());
        let mut seen = HashSet::new();
        let mut actors = Vec::with_capacity(entries.len());
        let mut embeddings = Vec::with_capacity(entries.len());
        for e in entries {
            if e.embedding.is_empty() || e.embedding.len() != dim {
                return Err(SemanticError::BadGallery(format!("{}: embedding dimension {} (expected {dim})", e.pid, e.embedding.len())));
            }
            if (norm(&e.embedding) - 1.0).abs() > UNIT_NORM_EPS {
                return Err(SemanticError::BadGallery(format!("{}: embedding is not unit length", e.pid)));
            }
            if !seen.insert(e.pid.clone()) {
                return Err(SemanticError::BadGallery(format!("duplicate pid {}", e.pid)));
            }
            actors.push(ActorPid::new(e.pid, e.display_name).map_err(|err| SemanticError::BadGallery(err.to_string()))?);
            embeddings.push(e.embedding);
        }
        Ok(Self { actors, embeddings, similarity_threshold })
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }

    /// Embedding dimension, 0 for an empty gallery.
    pub fn dimension(&self) -> usize {
        self.embeddings.first().map_or(0, Vec::len)
    }

    pub fn threshold(&self) -> f64 {
        self.similarity_threshold
    }

    pub fn actors(&self) -> &[ActorPid] {
        &self.actors
    }
}

/// Reads a gallery file: a JSON list of `{pid, display_name, embedding}`.
pub fn load_gallery(path: &Path, similarity_threshold: f64) -> Result<ActorGallery, SemanticError> {
    let text = std::fs::read_to_string(path).map_err(|e| SemanticError::BadGallery(format!("{}: {e}", path.display())))?;
    let entries: Vec<GalleryEntry> =
        serde_json::from_str(&text).map_err(|e| SemanticError::BadGallery(format!("{}: {e}", path.display())))?;
    ActorGallery::new(entries, similarity_threshold)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity. Zero vectors score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / denom
}

/// Best gallery match by cosine similarity, if it reaches the threshold.
/// Earlier entries win ties.
pub fn match_actor(embedding: &[f64], gallery: &ActorGallery) -> Result<Option<(ActorPid, f64)>, SemanticError> {
    if gallery.is_empty() {
        return Ok(None);
    }
    if embedding.len() != gallery.dimension() {
        return Err(SemanticError::DimensionMismatch { expected: gallery.dimension(), got: embedding.len() });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in gallery.embeddings.iter().enumerate() {
        let s = cosine(embedding, e);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    Ok(best.filter(|(_, s)| *s >= gallery.similarity_threshold).map(|(i, s)| (gallery.actors[i].clone(), s)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DayNightConfig {
    /// Mean HSV value below this votes night.
    pub dark_value: f64,
    /// Mean HSV value at or above this votes day.
    pub bright_value: f64,
    /// Between the two, night when mean blue exceeds this multiple of mean red.
    pub blue_ratio: f64,
    /// Confidence factor under an Inside prior.
    pub inside_factor: f64,
}

impl Default for DayNightConfig {
    fn default() -> Self {
        Self { dark_value: 0.25, bright_value: 0.40, blue_ratio: 1.15, inside_factor: 0.7 }
    }
}

/// Mean HSV value and mean red/blue of one frame.
pub fn frame_light_stats(frame: &Image<f64>) -> (f64, f64, f64) {
    if frame.channels() == 1 {
        let m = frame.channel_means()[0];
        return (m, m, m);
    }
    let n = (frame.width() * frame.height()) as f64;
    let v: f64 = frame.data().chunks_exact(3).map(|p| rgb_to_hsv([p[0], p[1], p[2]])[2]).sum();
    let means = frame.channel_means();
    (v / n, means[0], means[2])
}

pub fn frame_vote(frame: &Image<f64>, cfg: &DayNightConfig) -> DayNight {
    let (v, r, b) = frame_light_stats(frame);
    if v < cfg.dark_value {
        DayNight::Night
    } else if v >= cfg.bright_value {
        DayNight::Day
    } else if b > cfg.blue_ratio * r {
        DayNight::Night
    } else {
        DayNight::Day
    }
}

/// Majority vote over frames; an even split goes to Day.
pub fn classify_day_night(
    frames: &[&Image<f64>],
    prior: Option<SceneType>,
    cfg: &DayNightConfig,
) -> Result<Annotated<DayNight>, SemanticError> {
    if frames.is_empty() {
        return Err(SemanticError::NoFrames);
    }
    let night = frames.iter().filter(|f| frame_vote(f, cfg) == DayNight::Night).count();
    let day = frames.len() - night;
    let (label, wins) = if night > day { (DayNight::Night, night) } else { (DayNight::Day, day) };
    let mut confidence = wins as f64 / frames.len() as f64;
    if prior == Some(SceneType::Inside) {
        confidence *= cfg.inside_factor;
    }
    Ok(Annotated::estimated(label, confidence, Provenance::Annotator))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneObjectConfig {
    /// An object is kept when its summed confidence exceeds this fraction of
    /// the frames that answered.
    pub object_fraction: f64,
}

impl Default for SceneObjectConfig {
    fn default() -> Self {
        Self { object_fraction: 0.3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneObjects {
    pub scene_type: Option<Annotated<SceneType>>,
    pub places: Option<Annotated<Category>>,
    pub objects: Vec<Annotated<Category>>,
}

/// Weighted vote winner: highest weight, then smallest key. Confidence is the
/// winner's share of the total weight.
fn weighted_winner<K: Ord + Clone>(votes: &BTreeMap<K, f64>) -> Option<(K, f64)> {
    let total: f64 = votes.values().sum();
    let (key, weight) = votes.iter().fold(None::<(&K, f64)>, |best, (k, w)| match best {
        Some((_, bw)) if bw >= *w => best,
        _ => Some((k, *w)),
    })?;
    (total > 0.0).then(|| (key.clone(), weight / total))
}

fn frame_payload(image: &Image<f64>) -> serde_json::Value {
    json!({ "image": encode_image(image) })
}

/// Scene type and place by confidence-weighted vote over `scene_classify`
/// answers; objects whose summed confidence (best hit per frame) exceeds the
/// configured fraction of answering frames.
pub fn annotate_scene_objects(
    frames: &[(u32, &Image<f64>)],
    client: Option<&mut DetectorClient>,
    clip: &str,
    cfg: &SceneObjectConfig,
) -> Result<SceneObjects, SemanticError> {
    let client = client.ok_or_else(|| SemanticError::DetectorUnavailable("no detector backend configured".into()))?;
    let mut scene_votes: BTreeMap<SceneType, f64> = BTreeMap::new();
    let mut place_votes: BTreeMap<String, f64> = BTreeMap::new();
    let mut object_weight: BTreeMap<String, f64> = BTreeMap::new();
    let mut object_frames = 0usize;
    for (index, image) in frames {
        let payload = frame_payload(image);
        if let Some(scene) = client.call_typed::<SceneResult>(DetectorKind::SceneClassify, clip, *index, payload.clone())? {
            let w = clamp_conf(scene.confidence);
            *scene_votes.entry(scene.scene_type).or_default() += w;
            if Category::new(scene.place.clone()).is_ok() {
                *place_votes.entry(scene.place).or_default() += w;
            }
        }
        if let Some(hits) = client.call_typed::<Vec<ObjectHit>>(DetectorKind::ObjectDetect, clip, *index, payload)? {
            object_frames += 1;
            let mut best: BTreeMap<String, f64> = BTreeMap::new();
            for hit in hits {
                let w = clamp_conf(hit.confidence);
                let slot = best.entry(hit.category).or_default();
                *slot = slot.max(w);
            }
            for (category, w) in best {
                *object_weight.entry(category).or_default() += w;
            }
        }
    }
    let mut out = SceneObjects::default();
    if let Some((scene, conf)) = weighted_winner(&scene_votes) {
        out.scene_type = Some(Annotated::estimated(scene, conf, Provenance::Annotator));
    }
    if let Some((place, conf)) = weighted_winner(&place_votes) {
        out.places = Some(Annotated::estimated(Category::new(place).expect("validated above"), conf, Provenance::Annotator));
    }
    if object_frames > 0 {
        let n = object_frames as f64;
        let mut kept: Vec<(String, f64)> = object_weight.into_iter().filter(|(_, w)| *w > cfg.object_fraction * n).collect();
        kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.objects = kept
            .into_iter()
            .filter_map(|(c, w)| Category::new(c).ok().map(|c| Annotated::estimated(c, w / n, Provenance::Annotator)))
            .collect();
    }
    Ok(out)
}

fn clamp_conf(c: f64) -> f64 {
    if c.is_nan() {
        0.0
    } else {
        c.clamp(0.0, 1.0)
    }
}

/// Faces per frame from `face_detect`, each with its `face_embed` vector when
/// the backend supplies one.
pub fn observe_faces(
    frames: &[(u32, &Image<f64>)],
    client: &mut DetectorClient,
    clip: &str,
    with_embeddings: bool,
) -> Result<Vec<FaceObservation>, SemanticError> {
    let mut out = Vec::new();
    for (index, image) in frames {
        let payload = frame_payload(image);
        let Some(boxes) = client.call_typed::<BoxList>(DetectorKind::FaceDetect, clip, *index, payload.clone())? else {
            continue;
        };
        for (face, b) in boxes.into_iter().enumerate() {
            let embedding = if with_embeddings {
                let mut p = payload.clone();
                p["face"] = json!(face);
                p["box"] = json!(b.bbox);
                client.call_typed::<EmbeddingResult>(DetectorKind::FaceEmbed, clip, *index, p)?.map(|e| e.embedding)
            } else {
                None
            };
            out.push(FaceObservation { frame_index: *index, bbox: b.bbox, embedding, confidence: clamp_conf(b.confidence) });
        }
    }
    Ok(out)
}

/// Tallest `pose_height` answer over the frames.
pub fn observe_person_height(
    frames: &[(u32, &Image<f64>)],
    client: &mut DetectorClient,
    clip: &str,
) -> Result<Option<PoseHeightResult>, SemanticError> {
    let mut best: Option<PoseHeightResult> = None;
    for (index, image) in frames {
        if let Some(p) = client.call_typed::<PoseHeightResult>(DetectorKind::PoseHeight, clip, *index, frame_payload(image))? {
            if p.height_px.is_finite() && best.as_ref().is_none_or(|b| p.height_px > b.height_px) {
                best = Some(p);
            }
        }
    }
    Ok(best)
}

/// Matched actors in gallery order, each at its best similarity. Faces whose
/// embedding has the wrong dimension are skipped.
pub fn identify_actors(faces: &[FaceObservation], gallery: &ActorGallery) -> Vec<Annotated<ActorPid>> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for face in faces {
        let Some(embedding) = &face.embedding else { continue };
        match match_actor(embedding, gallery) {
            Ok(Some((pid, s))) => {
                let idx = gallery.actors.iter().position(|a| *a == pid).expect("pid from gallery");
                let slot = best.entry(idx).or_insert(s);
                *slot = slot.max(s);
            }
            Ok(None) => {}
            Err(e) => log::warn!("face in frame {} skipped: {e}", face.frame_index),
        }
    }
    best.into_iter().map(|(i, s)| Annotated::estimated(gallery.actors[i].clone(), s, Provenance::Annotator)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::FixtureBackend;
    use proptest::prelude::*;

    fn face(h: f64, conf: f64) -> FaceObservation {
        FaceObservation { frame_index: 0, bbox: [10.0, 10.0, h * 0.8, h], embedding: None, confidence: conf }
    }

    #[test]
    fn face_ratio_bands() {
        let cfg = ScaleConfig::default();
        let shot = |r: f64| estimate_shot_scale(&[face(r * 100.0, 0.9)], None, 100, &cfg).unwrap();
        assert_eq!(*shot(0.40).value(), ShotType::CloseUp);
        assert_eq!(*shot(0.22).value(), ShotType::Close);
        assert_eq!(*shot(0.04).value(), ShotType::Full);
        assert_eq!(*shot(0.05).value(), ShotType::MediumFull);
        assert_eq!(*shot(0.10).value(), ShotType::Medium);
        assert_eq!(*shot(0.35).value(), ShotType::CloseUp);
        assert_eq!(shot(0.40).confidence(), 0.9);
    }

    #[test]
    fn largest_face_decides() {
        let faces = [face(4.0, 0.5), face(30.0, 0.8), face(12.0, 0.99)];
        let s = estimate_shot_scale(&faces, None, 100, &ScaleConfig::default()).unwrap();
        assert_eq!(*s.value(), ShotType::Close);
        assert_eq!(s.confidence(), 0.8);
    }

    #[test]
    fn person_height_fallback() {
        let cfg = ScaleConfig::default();
        let p = |h: f64| PoseHeightResult { height_px: h, confidence: 0.8 };
        let s = estimate_shot_scale(&[], Some(&p(80.0)), 100, &cfg).unwrap();
        assert_eq!(*s.value(), ShotType::Full);
        assert!((s.confidence() - 0.4).abs() < 1e-15);
        assert_eq!(*estimate_shot_scale(&[], Some(&p(150.0)), 100, &cfg).unwrap().value(), ShotType::Medium);
        assert_eq!(*estimate_shot_scale(&[], Some(&p(400.0)), 100, &cfg).unwrap().value(), ShotType::CloseUp);
        assert_eq!(estimate_shot_scale(&[], None, 100, &cfg), Err(SemanticError::NoSubject));
    }

    #[test]
    fn break_lists_must_increase() {
        let cfg = ScaleConfig { face_breaks: [0.05, 0.2, 0.1, 0.35], ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ScaleConfig::default().validate().is_ok());
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    fn gallery(vs: &[Vec<f64>], threshold: f64) -> ActorGallery {
        let entries =
            vs.iter().enumerate().map(|(i, v)| GalleryEntry { pid: format!("p{i}"), display_name: None, embedding: v.clone() }).collect();
        ActorGallery::new(entries, threshold).unwrap()
    }

    #[test]
    fn actor_matching_examples() {
        let g = gallery(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 0.5);
        let (pid, s) = match_actor(&[0.0, 1.0, 0.0], &g).unwrap().unwrap();
        assert_eq!((pid.pid(), s), ("p1", 1.0));
        assert_eq!(match_actor(&[0.0, 0.0, 1.0], &g).unwrap(), None);
        assert_eq!(match_actor(&[1.0, 0.0], &g), Err(SemanticError::DimensionMismatch { expected: 3, got: 2 }));
        let tie = gallery(&[vec![1.0, 0.0], vec![1.0, 0.0]], 0.5);
        assert_eq!(match_actor(&[1.0, 0.0], &tie).unwrap().unwrap().0.pid(), "p0");
    }

    #[test]
    fn gallery_validation() {
        let e = |pid: &str, v: Vec<f64>| GalleryEntry { pid: pid.into(), display_name: None, embedding: v };
        assert!(ActorGallery::new(vec![e("a", vec![1.0, 0.0]), e("a", vec![0.0, 1.0])], 0.5).is_err());
        assert!(ActorGallery::new(vec![e("a", vec![1.0, 0.0]), e("b", vec![1.0])], 0.5).is_err());
        assert!(ActorGallery::new(vec![e("a", vec![2.0, 0.0])], 0.5).is_err());
        assert!(ActorGallery::new(vec![e("a", vec![1.0, 0.0])], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn match_actor_is_brute_force_argmax(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 1..32),
            query in prop::collection::vec(-1.0f64..1.0, 8),
            scale in 0.01f64..100.0,
            threshold in 0.01f64..0.99,
        ) {
            prop_assume!(raw.iter().all(|v| norm(v) > 1e-3) && norm(&query) > 1e-3);
            let vs: Vec<Vec<f64>> = raw.into_iter().map(unit).collect();
            let g = gallery(&vs, threshold);
            let mut best = (0usize, f64::NEG_INFINITY);
            for (i, v) in vs.iter().enumerate() {
                let dot: f64 = v.iter().zip(&query).map(|(a, b)| a * b).sum::<f64>() / norm(&query);
                if dot > best.1 {
                    best = (i, dot);
                }
            }
            let expected = (best.1 >= threshold).then(|| format!("p{}", best.0));
            let got = match_actor(&query, &g).unwrap().map(|(p, _)| p.pid().to_string());
            prop_assert_eq!(&got, &expected);
            let scaled: Vec<f64> = query.iter().map(|x| x * scale).collect();
            let got_scaled = match_actor(&scaled, &g).unwrap().map(|(p, _)| p.pid().to_string());
            prop_assert_eq!(got_scaled, expected);
        }

        #[test]
        fn shot_scale_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let cfg = ScaleConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(band(lo, &cfg.face_breaks) <= band(hi, &cfg.face_breaks));
        }

        #[test]
        fn day_night_ignores_order_and_duplication(levels in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..8), shift in 0usize..8) {
            let frames: Vec<Image<f64>> = levels.iter().map(|(r, g, b)| Image::from_fn(2, 2, 3, |_, _, c| [*r, *g, *b][c]).unwrap()).collect();
            let refs: Vec<&Image<f64>> = frames.iter().collect();
            let base = classify_day_night(&refs, None, &DayNightConfig::default()).unwrap();
            let mut rotated = refs.clone();
            rotated.rotate_left(shift % refs.len());
            prop_assert_eq!(&classify_day_night(&rotated, None, &DayNightConfig::default()).unwrap(), &base);
            let doubled: Vec<&Image<f64>> = refs.iter().chain(refs.iter()).copied().collect();
            prop_assert_eq!(&classify_day_night(&doubled, None, &DayNightConfig::default()).unwrap(), &base);
        }
    }

    fn rgb(r: f64, g: f64, b: f64) -> Image<f64> {
        Image::from_fn(4, 4, 3, |_, _, c| [r, g, b][c]).unwrap()
    }

    #[test]
    fn day_night_decision_table() {
        let cfg = DayNightConfig::default();
        let black = rgb(0.0, 0.0, 0.0);
        let n = classify_day_night(&[&black, &black], None, &cfg).unwrap();
        assert_eq!((*n.value(), n.confidence()), (DayNight::Night, 1.0));
        let gray = Image::filled(4, 4, 1, 0.9).unwrap();
        let d = classify_day_night(&[&gray], None, &cfg).unwrap();
        assert_eq!((*d.value(), d.confidence()), (DayNight::Day, 1.0));
        // V = 0.30 from the blue channel, B = 1.3 R
        let blue = rgb(0.3 / 1.3, 0.1, 0.30);
        assert_eq!(frame_vote(&blue, &cfg), DayNight::Night);
        let warm = rgb(0.30, 0.2, 0.30);
        assert_eq!(frame_vote(&warm, &cfg), DayNight::Day);
        assert_eq!(frame_vote(&rgb(0.2499, 0.2, 0.1), &cfg), DayNight::Night);
        assert_eq!(frame_vote(&rgb(0.40, 0.0, 0.39), &cfg), DayNight::Day);
        let inside = classify_day_night(&[&black], Some(SceneType::Inside), &cfg).unwrap();
        assert!((inside.confidence() - 0.7).abs() < 1e-15);
        let split = classify_day_night(&[&black, &gray, &gray], None, &cfg).unwrap();
        assert_eq!(*split.value(), DayNight::Day);
        assert!((split.confidence() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(classify_day_night(&[], None, &cfg), Err(SemanticError::NoFrames));
    }

    fn fixture(files: &[(&str, &str)]) -> (tempfile::TempDir, DetectorClient) {
        let dir = tempfile::tempdir().unwrap();
        for (rel, body) in files {
            let p = dir.path().join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, body).unwrap();
        }
        let client = DetectorClient::new(Box::new(FixtureBackend::new(dir.path()).unwrap()));
        (dir, client)
    }

    #[test]
    fn scene_and_objects_vote() {
        let (_dir, mut client) = fixture(&[
            ("c/scene_classify/0.json", r#"{"scene_type":"Outside","place":"street","confidence":0.9}"#),
            ("c/scene_classify/1.json", r#"{"scene_type":"Outside","place":"street","confidence":0.9}"#),
            ("c/scene_classify/2.json", r#"{"scene_type":"Inside","place":"plaza","confidence":0.95}"#),
            (
                "c/object_detect/0.json",
                r#"[{"category":"car","confidence":0.8},{"category":"car","confidence":0.6},{"category":"dog","confidence":0.5}]"#,
            ),
            ("c/object_detect/1.json", r#"[{"category":"car","confidence":0.7}]"#),
            ("c/object_detect/2.json", r#"[]"#),
        ]);
        let img = Image::filled(4, 4, 3, 0.5).unwrap();
        let frames: Vec<(u32, &Image<f64>)> = (0..3).map(|i| (i, &img)).collect();
        let out = annotate_scene_objects(&frames, Some(&mut client), "c", &SceneObjectConfig::default()).unwrap();
        let places = out.places.unwrap();
        assert_eq!(places.value().as_str(), "street");
        assert!((places.confidence() - 1.8 / 2.75).abs() < 1e-12);
        assert_eq!(*out.scene_type.unwrap().value(), SceneType::Outside);
        // car 1.5 > 0.9, dog 0.5 < 0.9
        assert_eq!(out.objects.len(), 1);
        assert_eq!(out.objects[0].value().as_str(), "car");
        assert!((out.objects[0].confidence() - 0.5).abs() < 1e-12);
        assert!(matches!(
            annotate_scene_objects(&frames, None, "c", &SceneObjectConfig::default()),
            Err(SemanticError::DetectorUnavailable(_))
        ));
    }

    #[test]
    fn uniform_scene_is_certain() {
        let (_dir, mut client) = fixture(&[
            ("c/scene_classify/0.json", r#"{"scene_type":"Outside","place":"beach","confidence":0.6}"#),
            ("c/scene_classify/4.json", r#"{"scene_type":"Outside","place":"beach","confidence":0.7}"#),
        ]);
        let img = Image::filled(4, 4, 3, 0.5).unwrap();
        let out = annotate_scene_objects(&[(0, &img), (4, &img)], Some(&mut client), "c", &SceneObjectConfig::default()).unwrap();
        assert_eq!(out.scene_type.unwrap().confidence(), 1.0);
        assert_eq!(out.places.unwrap().confidence(), 1.0);
        assert!(out.objects.is_empty());
    }

    #[test]
    fn faces_and_actors_through_fixtures() {
        let (_dir, mut client) = fixture(&[
            ("c/face_detect/0.json", r#"[{"box":[1,1,10,30],"confidence":0.9},{"box":[50,1,5,8],"confidence":0.7}]"#),
            ("c/face_embed/0_0.json", r#"{"embedding":[0.0,1.0]}"#),
            ("c/face_embed/0_1.json", r#"{"embedding":[0.8,0.6]}"#),
            ("c/pose_height/0.json", r#"{"height_px":140,"confidence":0.6}"#),
        ]);
        let img = Image::filled(4, 4, 3, 0.5).unwrap();
        let faces = observe_faces(&[(0, &img), (1, &img)], &mut client, "c", true).unwrap();
        assert_eq!(faces.len(), 2);
        let g = gallery(&[vec![1.0, 0.0], vec![0.0, 1.0]], 0.55);
        let actors = identify_actors(&faces, &g);
        let got: Vec<(&str, f64)> = actors.iter().map(|a| (a.value().pid(), a.confidence())).collect();
        assert_eq!(got, vec![("p0", 0.8), ("p1", 1.0)]);
        let person = observe_person_height(&[(0, &img)], &mut client, "c").unwrap().unwrap();
        assert_eq!(person.height_px, 140.0);
        let shot = estimate_shot_scale(&faces, Some(&person), 100, &ScaleConfig::default()).unwrap();
        assert_eq!(*shot.value(), ShotType::Close);
    }
}
