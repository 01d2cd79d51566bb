use std::fmt;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point, PointMatch};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Euclidean,
    Similarity,
    Homography,
}

impl TransformKind {
    pub fn min_samples(self) -> usize {
        match self {
            TransformKind::Euclidean | TransformKind::Similarity => 2,
            TransformKind::Homography => 4,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Euclidean => "euclidean",
            TransformKind::Similarity => "similarity",
            TransformKind::Homography => "homography",
        })
    }
}

/// A fitted 2D model mapping image A points onto image B.
///
/// The matrix is homogeneous with `h33 = 1`; for euclidean and similarity
/// models the bottom row is `[0, 0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformModel<T = f64> {
    pub kind: TransformKind,
    pub matrix: [[T; 3]; 3],
    /// Indices into the match list the model was fitted on.
    pub inliers: Vec<usize>,
    /// RMS transfer error over the inliers, pixels.
    pub rms_residual: T,
}

impl<T: Scalar> TransformModel<T> {
    pub fn from_matrix(kind: TransformKind, matrix: [[T; 3]; 3]) -> Self {
        Self { kind, matrix, inliers: Vec::new(), rms_residual: T::zero() }
    }

    pub fn identity(kind: TransformKind) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::from_matrix(kind, [[o, z, z], [z, o, z], [z, z, o]])
    }

    /// `None` when the point maps to infinity.
    pub fn apply(&self, p: Point<T>) -> Option<Point<T>> {
        apply_matrix(&self.matrix, p)
    }

    /// Rotation angle of the linear part, radians.
    pub fn rotation(&self) -> T {
        self.matrix[1][0].atan2(self.matrix[0][0])
    }

    /// Isotropic scale of the linear part (1 for euclidean models).
    pub fn scale(&self) -> T {
        (self.matrix[0][0].powi(2) + self.matrix[1][0].powi(2)).sqrt()
    }

    pub fn translation(&self) -> Point<T> {
        Point::new(self.matrix[0][2], self.matrix[1][2])
    }

    /// Inverse model with the inlier set cleared; `None` if singular.
    pub fn inverse(&self) -> Option<TransformModel<T>> {
        let m = to_na(&self.matrix).try_inverse()?;
        let m33 = m[(2, 2)];
        if m33.abs() < 1e-15 {
            return None;
        }
        Some(Self::from_matrix(self.kind, from_na(&(m / m33))))
    }

    pub fn residual(&self, m: &PointMatch<T>) -> T {
        residual(&self.matrix, m)
    }
}

pub(crate) fn apply_matrix<T: Scalar>(h: &[[T; 3]; 3], p: Point<T>) -> Option<Point<T>> {
    let w = h[2][0] * p.x + h[2][1] * p.y + h[2][2];
    if w.abs() <= T::epsilon() {
        return None;
    }
    Some(Point::new((h[0][0] * p.x + h[0][1] * p.y + h[0][2]) / w, (h[1][0] * p.x + h[1][1] * p.y + h[1][2]) / w))
}

pub(crate) fn residual<T: Scalar>(h: &[[T; 3]; 3], m: &PointMatch<T>) -> T {
    apply_matrix(h, m.a).map_or(T::infinity(), |q| q.distance(m.b))
}

fn to_na<T: Scalar>(h: &[[T; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| h[r][c].to_f64_lossy())
}

fn from_na<T: Scalar>(m: &Matrix3<f64>) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = T::lit(m[(r, c)]);
        }
    }
    out
}

/// Least-squares model over `matches[indices]`.
///
/// Euclidean and similarity models use the closed-form Procrustes solution;
/// homographies use the normalized DLT.
pub fn fit_least_squares<T: Scalar>(
    kind: TransformKind,
    matches: &[PointMatch<T>],
    indices: &[usize],
) -> Result<[[T; 3]; 3], GeometryError> {
    if indices.len() < kind.min_samples() {
        return Err(GeometryError::TooFewMatches { kind, needed: kind.min_samples(), got: indices.len() });
    }
    match kind {
        TransformKind::Euclidean => procrustes(matches, indices, false),
        TransformKind::Similarity => procrustes(matches, indices, true),
        TransformKind::Homography => dlt(matches, indices),
    }
}

fn procrustes<T: Scalar>(matches: &[PointMatch<T>], indices: &[usize], with_scale: bool) -> Result<[[T; 3]; 3], GeometryError> {
    let n = T::from_usize_lossy(indices.len());
    let (mut ax, mut ay, mut bx, mut by) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &i in indices {
        ax = ax + matches[i].a.x;
        ay = ay + matches[i].a.y;
        bx = bx + matches[i].b.x;
        by = by + matches[i].b.y;
    }
    let (ax, ay, bx, by) = (ax / n, ay / n, bx / n, by / n);
    // sums of dot and cross products of the centred point sets
    let (mut dot, mut cross, mut norm_a) = (T::zero(), T::zero(), T::zero());
    for &i in indices {
        let (px, py) = (matches[i].a.x - ax, matches[i].a.y - ay);
        let (qx, qy) = (matches[i].b.x - bx, matches[i].b.y - by);
        dot = dot + px * qx + py * qy;
        cross = cross + px * qy - py * qx;
        norm_a = norm_a + px * px + py * py;
    }
    let spread = (dot * dot + cross * cross).sqrt();
    if norm_a <= T::lit(1e-12) || spread <= T::lit(1e-12) {
        return Err(GeometryError::Degenerate { draws: 1 });
    }
    let theta = cross.atan2(dot);
    let s = if with_scale { spread / norm_a } else { T::one() };
    let (c, sn) = (s * theta.cos(), s * theta.sin());
    let tx = bx - (c * ax - sn * ay);
    let ty = by - (sn * ax + c * ay);
    let (z, o) = (T::zero(), T::one());
    Ok([[c, -sn, tx], [sn, c, ty], [z, z, o]])
}

/// Similarity that moves the centroid to the origin with mean distance √2.
fn normalizer(points: &[(f64, f64)]) -> Option<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean = points.iter().map(|p| (p.0 - cx).hypot(p.1 - cy)).sum::<f64>() / n;
    if mean <= 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn dlt<T: Scalar>(matches: &[PointMatch<T>], indices: &[usize]) -> Result<[[T; 3]; 3], GeometryError> {
    let pa: Vec<(f64, f64)> = indices.iter().map(|&i| (matches[i].a.x.to_f64_lossy(), matches[i].a.y.to_f64_lossy())).collect();
    let pb: Vec<(f64, f64)> = indices.iter().map(|&i| (matches[i].b.x.to_f64_lossy(), matches[i].b.y.to_f64_lossy())).collect();
    let degenerate = GeometryError::Degenerate { draws: 1 };
    let na = normalizer(&pa).ok_or(degenerate.clone())?;
    let nb = normalizer(&pb).ok_or(degenerate.clone())?;
    let norm = |m: &Matrix3<f64>, p: (f64, f64)| (m[(0, 0)] * p.0 + m[(0, 2)], m[(1, 1)] * p.1 + m[(1, 2)]);
    // pad to at least 9 rows so the thin SVD exposes the full right null space
    let rows = (2 * indices.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (k, (p, q)) in pa.iter().zip(&pb).enumerate() {
        let (x, y) = norm(&na, *p);
        let (u, v) = norm(&nb, *q);
        let r = 2 * k;
        a.row_mut(r).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(degenerate.clone())?;
    let (min_idx, _) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).ok_or(degenerate.clone())?;
    let h = v_t.row(min_idx);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let nb_inv = nb.try_inverse().ok_or(degenerate.clone())?;
    let full = nb_inv * hn * na;
    let h33 = full[(2, 2)];
    if !h33.is_finite() || h33.abs() < 1e-12 {
        return Err(degenerate);
    }
    Ok(from_na(&(full / h33)))
}
