use serde::{Deserialize, Serialize};

use crate::imaging::Image;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner<T = f64> {
    pub x: T,
    pub y: T,
    pub response: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CornerParams {
    pub max_corners: usize,
    pub min_distance: f64,
    /// Fraction of the strongest response below which candidates are dropped.
    pub quality: f64,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self { max_corners: 100, min_distance: 5.0, quality: 0.05 }
    }
}

/// Minimum eigenvalue of the 3×3-summed structure tensor of Sobel gradients,
/// per pixel, row-major. Edges are replicated.
pub fn min_eigen_response<T: Scalar>(img: &Image<T>) -> Vec<T> {
    let (w, h) = (img.width(), img.height());
    let eighth = T::lit(0.125);
    let mut ixx = vec![T::zero(); w * h];
    let mut iyy = vec![T::zero(); w * h];
    let mut ixy = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let p = |dx: isize, dy: isize| img.at_clamped(x as isize + dx, y as isize + dy, 0);
            let two = T::lit(2.0);
            let gx = (p(1, -1) + two * p(1, 0) + p(1, 1) - p(-1, -1) - two * p(-1, 0) - p(-1, 1)) * eighth;
            let gy = (p(-1, 1) + two * p(0, 1) + p(1, 1) - p(-1, -1) - two * p(0, -1) - p(1, -1)) * eighth;
            let i = y * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let mut out = vec![T::zero(); w * h];
    let half = T::lit(0.5);
    for y in 0..h {
        for x in 0..w {
            let (mut a, mut b, mut c) = (T::zero(), T::zero(), T::zero());
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    let i = sy * w + sx;
                    a = a + ixx[i];
                    b = b + ixy[i];
                    c = c + iyy[i];
                }
            }
            let mean = (a + c) * half;
            let diff = (a - c) * half;
            let lambda = mean - (diff * diff + b * b).sqrt();
            out[y * w + x] = lambda.max(T::zero());
        }
    }
    out
}

/// Corners ranked strongest first, with greedy `min_distance` suppression.
///
/// Only 3×3 local maxima of the response are candidates; positions are refined
/// by a per-axis parabola through the response.
pub fn detect_corners<T: Scalar>(img: &Image<T>, params: &CornerParams) -> Vec<Corner<T>> {
    let gray;
    let img = if img.channels() == 1 {
        img
    } else {
        gray = crate::imaging::to_grayscale(img);
        &gray
    };
    let (w, h) = (img.width(), img.height());
    let resp = min_eigen_response(img);
    let max = resp.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) || params.max_corners == 0 {
        return Vec::new();
    }
    let floor = max * T::lit(params.quality);
    let at = |x: usize, y: usize| resp[y * w + x];
    let mut candidates = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let r = at(x, y);
            if r <= T::zero() || r < floor {
                continue;
            }
            let mut is_max = true;
            'scan: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = at(nx as usize, ny as usize);
                    // plateau ties go to the first pixel in raster order
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if n > r || (n == r && earlier) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                candidates.push((x, y, r));
            }
        }
    }
    candidates.sort_by(|p, q| q.2.partial_cmp(&p.2).expect("finite response").then((p.1, p.0).cmp(&(q.1, q.0))));
    let min_d2 = T::lit(params.min_distance * params.min_distance);
    let mut out: Vec<Corner<T>> = Vec::new();
    for (x, y, r) in candidates {
        let cx = refine(x, w, |i| at(i, y));
        let cy = refine(y, h, |i| at(x, i));
        let clear = out.iter().all(|c| (c.x - cx).powi(2) + (c.y - cy).powi(2) >= min_d2);
        if clear {
            out.push(Corner { x: cx, y: cy, response: r });
            if out.len() == params.max_corners {
                break;
            }
        }
    }
    out
}

fn refine<T: Scalar>(i: usize, len: usize, f: impl Fn(usize) -> T) -> T {
    let base = T::from_usize_lossy(i);
    if i == 0 || i + 1 >= len {
        return base;
    }
    let (l, c, r) = (f(i - 1), f(i), f(i + 1));
    let denom = l - T::lit(2.0) * c + r;
    if denom >= T::zero() {
        return base;
    }
    let half = T::lit(0.5);
    base + ((l - r) * half / denom).max(-half).min(half)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Image<f64> {
        Image::from_fn(64, 64, 1, |x, y, _| if (22..42).contains(&x) && (22..42).contains(&y) { 1.0 } else { 0.0 }).unwrap()
    }

    /// Straight-line response oracle: central-difference Sobel and explicit
    /// 2×2 eigen-decomposition via the characteristic polynomial.
    fn oracle_response(img: &Image<f64>) -> Vec<f64> {
        let (w, h) = (img.width() as isize, img.height() as isize);
        let v = |x: isize, y: isize| img.at(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize, 0);
        let grad = |x: isize, y: isize| {
            let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let s = v(x + i as isize - 1, y + j as isize - 1);
                    gx += kx[j][i] * s / 8.0;
                    gy += kx[i][j] * s / 8.0;
                }
            }
            (gx, gy)
        };
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut m = [[0.0; 2]; 2];
                for j in -1..=1 {
                    for i in -1..=1 {
                        let (gx, gy) = grad((x + i).clamp(0, w - 1), (y + j).clamp(0, h - 1));
                        m[0][0] += gx * gx;
                        m[0][1] += gx * gy;
                        m[1][1] += gy * gy;
                    }
                }
                let tr = m[0][0] + m[1][1];
                let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
                let disc = (tr * tr / 4.0 - det).max(0.0);
                out.push((tr / 2.0 - disc.sqrt()).max(0.0));
            }
        }
        out
    }

    #[test]
    fn uniform_image_has_no_corners() {
        let img = Image::<f64>::filled(32, 32, 1, 0.4).unwrap();
        assert!(detect_corners(&img, &CornerParams::default()).is_empty());
    }

    #[test]
    fn response_matches_oracle() {
        let img = square();
        let got = min_eigen_response(&img);
        for (a, b) in got.iter().zip(oracle_response(&img)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn white_square_has_four_corners() {
        let img = square();
        let params = CornerParams { max_corners: 10, min_distance: 5.0, quality: 0.1 };
        let corners = detect_corners(&img, &params);
        assert_eq!(corners.len(), 4, "{corners:?}");
        // the four strongest 3x3 maxima of the oracle map
        let resp = oracle_response(&img);
        let mut peaks: Vec<(usize, usize, f64)> = Vec::new();
        for y in 1..63 {
            for x in 1..63 {
                let r = resp[y * 64 + x];
                let neighbours = (0..9).filter(|k| *k != 4).map(|k| resp[(y + k / 3 - 1) * 64 + x + k % 3 - 1]);
                if r > 0.0 && neighbours.clone().all(|n| n <= r) {
                    peaks.push((x, y, r));
                }
            }
        }
        let vertices = [(21.5, 21.5), (41.5, 21.5), (21.5, 41.5), (41.5, 41.5)];
        for (vx, vy) in vertices {
            let c = corners.iter().find(|c| (c.x - vx).hypot(c.y - vy) <= 2.0);
            assert!(c.is_some(), "no corner near ({vx}, {vy}): {corners:?}");
            let near_peak = peaks.iter().any(|(x, y, _)| (*x as f64 - vx).hypot(*y as f64 - vy) <= 2.0);
            assert!(near_peak);
        }
        let two = detect_corners(&img, &CornerParams { max_corners: 2, ..params });
        assert_eq!(two.len(), 2);
        assert_eq!(two[..], corners[..2]);
    }

    #[test]
    fn works_in_single_precision() {
        let img: Image<f32> = square().cast();
        let params = CornerParams { max_corners: 10, min_distance: 5.0, quality: 0.1 };
        assert_eq!(detect_corners(&img, &params).len(), 4);
    }
}
