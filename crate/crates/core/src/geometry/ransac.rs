use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transform::residual;
use super::{fit_least_squares, GeometryError, PointMatch, TransformKind, TransformModel};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    pub kind: TransformKind,
    pub iterations: usize,
    /// Maximum transfer error of an inlier, pixels.
    pub inlier_threshold: f64,
    pub seed: u64,
    /// Consecutive degenerate minimal samples tolerated before giving up.
    #[serde(default = "default_max_degenerate")]
    pub max_degenerate_draws: usize,
}

fn default_max_degenerate() -> usize {
    1000
}

impl RansacParams {
    pub fn new(kind: TransformKind, iterations: usize, inlier_threshold: f64, seed: u64) -> Self {
        Self { kind, iterations, inlier_threshold, seed, max_degenerate_draws: default_max_degenerate() }
    }
}

/// Seeded RANSAC followed by a least-squares refit on the consensus set.
///
/// The winning hypothesis has the most inliers, ties going to the lower RMS.
/// After the refit the inlier set is recomputed under the refitted model, so
/// every reported inlier lies within the threshold.
pub fn fit_transform_ransac<T: Scalar>(matches: &[PointMatch<T>], params: &RansacParams) -> Result<TransformModel<T>, GeometryError> {
    let kind = params.kind;
    let k = kind.min_samples();
    if matches.len() < k {
        return Err(GeometryError::TooFewMatches { kind, needed: k, got: matches.len() });
    }
    if params.iterations == 0 || !(params.inlier_threshold > 0.0) {
        return Err(GeometryError::BadParams("iterations and inlier_threshold must be positive".into()));
    }
    let threshold = T::lit(params.inlier_threshold);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<([[T; 3]; 3], Vec<usize>, T)> = None;
    let mut done = 0;
    let mut degenerate_run = 0;
    while done < params.iterations {
        let sample = index::sample(&mut rng, matches.len(), k).into_vec();
        let hypothesis = if is_degenerate(kind, matches, &sample) { None } else { fit_least_squares(kind, matches, &sample).ok() };
        let Some(h) = hypothesis else {
            degenerate_run += 1;
            if degenerate_run >= params.max_degenerate_draws {
                return Err(GeometryError::Degenerate { draws: degenerate_run });
            }
            continue;
        };
        degenerate_run = 0;
        done += 1;
        let (inliers, rms) = consensus(&h, matches, threshold);
        let better = match &best {
            None => true,
            Some((_, b, b_rms)) => inliers.len() > b.len() || (inliers.len() == b.len() && rms < *b_rms),
        };
        if better {
            best = Some((h, inliers, rms));
        }
    }
    let (mut matrix, mut inliers, mut rms) = best.expect("at least one iteration ran");
    for _ in 0..3 {
        let Ok(refit) = fit_least_squares(kind, matches, &inliers) else { break };
        let (next, next_rms) = consensus(&refit, matches, threshold);
        if next.len() < inliers.len() {
            break;
        }
        let stable = next == inliers;
        (matrix, inliers, rms) = (refit, next, next_rms);
        if stable {
            break;
        }
    }
    Ok(TransformModel { kind, matrix, inliers, rms_residual: rms })
}

fn consensus<T: Scalar>(h: &[[T; 3]; 3], matches: &[PointMatch<T>], threshold: T) -> (Vec<usize>, T) {
    let mut inliers = Vec::new();
    let mut sq = T::zero();
    for (i, m) in matches.iter().enumerate() {
        let r = residual(h, m);
        if r <= threshold {
            inliers.push(i);
            sq = sq + r * r;
        }
    }
    let rms = if inliers.is_empty() { T::zero() } else { (sq / T::from_usize_lossy(inliers.len())).sqrt() };
    (inliers, rms)
}

fn is_degenerate<T: Scalar>(kind: TransformKind, matches: &[PointMatch<T>], sample: &[usize]) -> bool {
    let tiny = T::lit(1e-9);
    match kind {
        TransformKind::Euclidean | TransformKind::Similarity => {
            let (p, q) = (&matches[sample[0]], &matches[sample[1]]);
            p.a.distance(q.a) <= tiny || p.b.distance(q.b) <= tiny
        }
        TransformKind::Homography => {
            let side = |pick: fn(&PointMatch<T>) -> super::Point<T>| {
                let pts: Vec<_> = sample.iter().map(|&i| pick(&matches[i])).collect();
                (0..4).any(|skip| {
                    let t: Vec<_> = (0..4).filter(|i| *i != skip).map(|i| pts[i]).collect();
                    let (ux, uy) = (t[1].x - t[0].x, t[1].y - t[0].y);
                    let (vx, vy) = (t[2].x - t[0].x, t[2].y - t[0].y);
                    let area = (ux * vy - uy * vx).abs();
                    let scale = (ux * ux + uy * uy).max(vx * vx + vy * vy);
                    area <= T::lit(1e-6) * scale || scale <= tiny
                })
            };
            side(|m| m.a) || side(|m| m.b)
        }
    }
}
