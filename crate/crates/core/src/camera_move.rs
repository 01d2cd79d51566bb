//! Camera movement classification from per-frame-pair global motion.
//!
//! Each sampled frame pair gets a RANSAC similarity fit over block-matched
//! corners; the clip label comes from a fixed-priority decision table over
//! medians of those samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    detect_corners, fit_transform_ransac, track_points, CornerParams, Point, PointMatch, RansacParams, TrackParams, TransformKind,
    TransformModel,
};
use crate::imaging::{to_grayscale, Image};
use crate::metadata::CameraMove;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraMoveError {
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("no valid motion samples")]
    NoValidSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraMoveConfig {
    /// Frame stride applied by the pipeline before analysis.
    pub stride: usize,
    pub max_corners: usize,
    pub min_distance: f64,
    pub corner_quality: f64,
    pub track: TrackParams,
    pub ransac_iterations: usize,
    pub ransac_threshold: f64,
    /// Tracked points needed for a valid sample.
    pub min_points: usize,
    pub tau_parallax: f64,
    /// Static translation bound as a fraction of the frame diagonal.
    pub static_t: f64,
    pub scale_eps: f64,
    pub zoom_eps: f64,
    pub flip_fraction: f64,
    /// Fraction of samples that must share the dominant sign.
    pub consistency: f64,
    /// Fraction of the largest point residuals left out of the parallax RMS.
    pub parallax_trim: f64,
    pub seed: u64,
}

impl Default for CameraMoveConfig {
    fn default() -> Self {
        Self {
            stride: 4,
            max_corners: 80,
            min_distance: 6.0,
            corner_quality: 0.01,
            track: TrackParams::default(),
            ransac_iterations: 200,
            ransac_threshold: 1.0,
            min_points: 8,
            tau_parallax: 0.15,
            static_t: 0.002,
            scale_eps: 0.002,
            zoom_eps: 0.004,
            flip_fraction: 0.3,
            consistency: 0.8,
            parallax_trim: 0.1,
            seed: 0,
        }
    }
}

/// Global motion between two sampled frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSample {
    /// Positions of the two frames in the analysed sequence.
    pub frame_pair: (usize, usize),
    pub model: Option<TransformModel<f64>>,
    /// Trimmed RMS point residual over the mean point displacement.
    pub parallax_ratio: f64,
    /// Displacement of the frame centre under the model.
    pub mean_translation: (f64, f64),
    pub scale: f64,
    pub tracked_points: usize,
    pub frame_diagonal: f64,
    pub valid: bool,
}

impl MotionSample {
    pub fn translation_norm(&self) -> f64 {
        self.mean_translation.0.hypot(self.mean_translation.1)
    }

    fn invalid(frame_pair: (usize, usize), tracked_points: usize, frame_diagonal: f64) -> Self {
        Self {
            frame_pair,
            model: None,
            parallax_ratio: 0.0,
            mean_translation: (0.0, 0.0),
            scale: 1.0,
            tracked_points,
            frame_diagonal,
            valid: false,
        }
    }
}

/// Feature values behind a decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoveEvidence {
    pub valid_samples: usize,
    pub median_translation: f64,
    pub median_scale_dev: f64,
    pub median_abs_tx: f64,
    pub median_abs_ty: f64,
    pub median_parallax: f64,
    pub flip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveDecision {
    pub label: CameraMove,
    pub confidence: f64,
    pub evidence: MoveEvidence,
}

/// One motion sample per consecutive frame pair; pairs run in parallel.
pub fn analyze_clip<T: Scalar>(frames: &[Image<T>], cfg: &CameraMoveConfig) -> Result<Vec<MotionSample>, CameraMoveError> {
    if frames.len() < 2 {
        return Err(CameraMoveError::TooFewFrames(frames.len()));
    }
    let gray: Vec<Image<T>> = frames.iter().map(|f| if f.channels() == 1 { f.clone() } else { to_grayscale(f) }).collect();
    Ok((0..gray.len() - 1).into_par_iter().map(|i| analyze_pair(&gray[i], &gray[i + 1], i, cfg)).collect())
}

fn analyze_pair<T: Scalar>(a: &Image<T>, b: &Image<T>, i: usize, cfg: &CameraMoveConfig) -> MotionSample {
    let (w, h) = (a.width() as f64, a.height() as f64);
    let diagonal = w.hypot(h);
    let pair = (i, i + 1);
    let corner_params = CornerParams { max_corners: cfg.max_corners, min_distance: cfg.min_distance, quality: cfg.corner_quality };
    let points: Vec<Point<T>> = detect_corners(a, &corner_params).iter().map(|c| Point::new(c.x, c.y)).collect();
    let Ok(tracks) = track_points(a, b, &points, &cfg.track) else {
        return MotionSample::invalid(pair, 0, diagonal);
    };
    let matches: Vec<PointMatch<f64>> =
        tracks.iter().filter(|t| !t.lost).map(|t| PointMatch::new(t.point.cast(), t.destination().cast(), t.mse.to_f64_lossy())).collect();
    if matches.len() < cfg.min_points.max(2) {
        return MotionSample::invalid(pair, matches.len(), diagonal);
    }
    let params = RansacParams::new(
        TransformKind::Similarity,
        cfg.ransac_iterations,
        cfg.ransac_threshold,
        cfg.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    );
    let Ok(model) = fit_transform_ransac(&matches, &params) else {
        return MotionSample::invalid(pair, matches.len(), diagonal);
    };
    let centre = Point::new((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let moved = model.apply(centre).unwrap_or(centre);
    let mut residuals: Vec<f64> = matches.iter().map(|m| model.residual(m)).collect();
    residuals.sort_by(f64::total_cmp);
    let keep = ((residuals.len() as f64) * (1.0 - cfg.parallax_trim)).ceil().max(1.0) as usize;
    let kept = &residuals[..keep.min(residuals.len())];
    let rms = (kept.iter().map(|r| r * r).sum::<f64>() / kept.len() as f64).sqrt();
    let mean_disp = matches.iter().map(|m| m.a.distance(m.b)).sum::<f64>() / matches.len() as f64;
    MotionSample {
        frame_pair: pair,
        scale: model.scale(),
        mean_translation: (moved.x - centre.x, moved.y - centre.y),
        parallax_ratio: rms / mean_disp.max(1e-6),
        tracked_points: matches.len(),
        frame_diagonal: diagonal,
        model: Some(model),
        valid: true,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Fraction of `values` whose sign equals that of their median.
fn consistent_fraction(values: &[f64]) -> (i8, f64) {
    let s = sign(median(values.to_vec()));
    let n = values.iter().filter(|v| sign(**v) == s && s != 0).count();
    (s, n as f64 / values.len() as f64)
}

/// Applies the decision table (static, handheld, zoom/dolly, pan/truck,
/// tilt/pedestal, unknown) to the valid samples.
pub fn classify(samples: &[MotionSample], cfg: &CameraMoveConfig) -> Result<MoveDecision, CameraMoveError> {
    let valid: Vec<&MotionSample> = samples.iter().filter(|s| s.valid).collect();
    if valid.is_empty() {
        return Err(CameraMoveError::NoValidSamples);
    }
    let n = valid.len() as f64;
    let diag = median(valid.iter().map(|s| s.frame_diagonal).collect());
    let t_static = cfg.static_t * diag;
    let tx: Vec<f64> = valid.iter().map(|s| s.mean_translation.0).collect();
    let ty: Vec<f64> = valid.iter().map(|s| s.mean_translation.1).collect();
    let ds: Vec<f64> = valid.iter().map(|s| s.scale - 1.0).collect();
    // consecutive valid samples whose translations point more than 90° apart
    let flips: Vec<bool> = valid
        .windows(2)
        .map(|p| {
            let (a, b) = (p[0].mean_translation, p[1].mean_translation);
            a.0 * b.0 + a.1 * b.1 < 0.0
        })
        .collect();
    let evidence = MoveEvidence {
        valid_samples: valid.len(),
        median_translation: median(valid.iter().map(|s| s.translation_norm()).collect()),
        median_scale_dev: median(ds.iter().map(|d| d.abs()).collect()),
        median_abs_tx: median(tx.iter().map(|v| v.abs()).collect()),
        median_abs_ty: median(ty.iter().map(|v| v.abs()).collect()),
        median_parallax: median(valid.iter().map(|s| s.parallax_ratio).collect()),
        flip_fraction: if flips.is_empty() { 0.0 } else { flips.iter().filter(|f| **f).count() as f64 / flips.len() as f64 },
    };
    let fraction = |pred: &dyn Fn(usize, &MotionSample) -> bool| valid.iter().enumerate().filter(|(i, s)| pred(*i, s)).count() as f64 / n;
    let decide = |label, confidence| Ok(MoveDecision { label, confidence, evidence: evidence.clone() });
    let parallax_high = evidence.median_parallax > cfg.tau_parallax;
    let parallax_agrees = |s: &MotionSample| (s.parallax_ratio > cfg.tau_parallax) == parallax_high;

    if evidence.median_translation < t_static && evidence.median_scale_dev < cfg.scale_eps {
        let conf = fraction(&|_, s| s.translation_norm() < t_static && (s.scale - 1.0).abs() < cfg.scale_eps);
        return decide(CameraMove::Static, conf);
    }
    if evidence.flip_fraction > cfg.flip_fraction && evidence.median_translation >= t_static {
        let conf = fraction(&|i, _| (i > 0 && flips[i - 1]) || flips.get(i).copied().unwrap_or(false));
        return decide(CameraMove::Handheld, conf);
    }
    let (zoom_sign, zoom_consistency) = consistent_fraction(&ds);
    if evidence.median_scale_dev >= cfg.zoom_eps && zoom_consistency >= cfg.consistency {
        let label = if parallax_high { CameraMove::Dolly } else { CameraMove::Zoom };
        let conf = fraction(&|_, s| (s.scale - 1.0).abs() >= cfg.zoom_eps && sign(s.scale - 1.0) == zoom_sign && parallax_agrees(s));
        return decide(label, conf);
    }
    let (x_sign, x_consistency) = consistent_fraction(&tx);
    if evidence.median_abs_tx > 2.0 * evidence.median_abs_ty && x_consistency >= cfg.consistency {
        let label = if parallax_high { CameraMove::Truck } else { CameraMove::Pan };
        let (tx, ty) = (&tx, &ty);
        let conf = fraction(&|i, s| tx[i].abs() > 2.0 * ty[i].abs() && sign(tx[i]) == x_sign && parallax_agrees(s));
        return decide(label, conf);
    }
    let (y_sign, y_consistency) = consistent_fraction(&ty);
    if evidence.median_abs_ty > 2.0 * evidence.median_abs_tx && y_consistency >= cfg.consistency {
        let label = if parallax_high { CameraMove::Pedestal } else { CameraMove::Tilt };
        let (tx, ty) = (&tx, &ty);
        let conf = fraction(&|i, s| ty[i].abs() > 2.0 * tx[i].abs() && sign(ty[i]) == y_sign && parallax_agrees(s));
        return decide(label, conf);
    }
    decide(CameraMove::Unknown, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{camera_clip, ClipSpec};

    fn sample(tx: f64, ty: f64, s: f64, parallax: f64) -> MotionSample {
        MotionSample {
            frame_pair: (0, 1),
            model: None,
            parallax_ratio: parallax,
            mean_translation: (tx, ty),
            scale: s,
            tracked_points: 40,
            frame_diagonal: 160.0,
            valid: true,
        }
    }

    fn label(samples: &[MotionSample]) -> (CameraMove, f64) {
        let d = classify(samples, &CameraMoveConfig::default()).unwrap();
        (d.label, d.confidence)
    }

    #[test]
    fn decision_table_examples() {
        assert_eq!(label(&vec![sample(4.0, 0.1, 1.0, 0.01); 5]), (CameraMove::Pan, 1.0));
        assert_eq!(label(&vec![sample(0.0, 0.0, 1.0, 0.0); 5]), (CameraMove::Static, 1.0));
        let alternating: Vec<_> = (0..6).map(|i| sample(if i % 2 == 0 { 6.0 } else { -6.0 }, 0.0, 1.0, 0.0)).collect();
        assert_eq!(label(&alternating), (CameraMove::Handheld, 1.0));
        assert_eq!(label(&vec![sample(0.0, 0.0, 1.01, 0.01); 5]), (CameraMove::Zoom, 1.0));
        assert_eq!(label(&vec![sample(0.0, 0.0, 1.01, 0.5); 5]), (CameraMove::Dolly, 1.0));
        assert_eq!(label(&vec![sample(-4.0, 0.0, 1.0, 0.5); 5]), (CameraMove::Truck, 1.0));
        assert_eq!(label(&vec![sample(0.2, 4.0, 1.0, 0.01); 5]), (CameraMove::Tilt, 1.0));
        assert_eq!(label(&vec![sample(0.2, -4.0, 1.0, 0.3); 5]), (CameraMove::Pedestal, 1.0));
        assert_eq!(label(&vec![sample(3.0, 3.0, 1.0, 0.01); 5]), (CameraMove::Unknown, 0.0));
    }

    #[test]
    fn invalid_samples_are_ignored() {
        let mut s = vec![sample(4.0, 0.0, 1.0, 0.0); 3];
        s.push(MotionSample::invalid((3, 4), 2, 160.0));
        assert_eq!(label(&s).0, CameraMove::Pan);
        assert_eq!(classify(&[MotionSample::invalid((0, 1), 0, 1.0)], &CameraMoveConfig::default()), Err(CameraMoveError::NoValidSamples));
    }

    #[test]
    fn too_few_frames() {
        let f = Image::<f64>::filled(8, 8, 1, 0.5).unwrap();
        assert_eq!(analyze_clip(&[f], &CameraMoveConfig::default()), Err(CameraMoveError::TooFewFrames(1)));
    }

    #[test]
    fn identical_frames_are_still() {
        let frames = camera_clip(&ClipSpec { frames: 2, ..ClipSpec::new(CameraMove::Static, 1) });
        let samples = analyze_clip(&frames, &CameraMoveConfig::default()).unwrap();
        assert_eq!(samples.len(), 1);
        assert!(samples[0].valid);
        assert!(samples[0].translation_norm() < 1e-9);
        assert!((samples[0].scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_pan_measures_the_shift() {
        let frames = camera_clip(&ClipSpec::new(CameraMove::Pan, 11));
        let samples = analyze_clip(&frames, &CameraMoveConfig::default()).unwrap();
        assert_eq!(samples.len(), 9);
        let speed = samples[0].mean_translation.0.abs();
        assert!(speed > 2.5 && speed < 5.5);
        for s in &samples {
            assert!(s.valid);
            assert!((s.mean_translation.0.abs() - speed).abs() < 0.3, "{s:?}");
            assert!(s.mean_translation.1.abs() < 0.3);
            assert!((s.scale - 1.0).abs() < 0.01);
        }
        assert_eq!(classify(&samples, &CameraMoveConfig::default()).unwrap().label, CameraMove::Pan);
    }
}
