use serde::{Deserialize, Serialize};

use super::{GeometryError, Point};
use crate::imaging::Image;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackParams {
    /// Odd block size, at least 5.
    pub window: usize,
    pub search_radius: usize,
    /// Best mean squared difference above which a point is lost.
    pub lost_mse: f64,
}

impl Default for TrackParams {
    fn default() -> Self {
        Self { window: 9, search_radius: 16, lost_mse: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Track<T = f64> {
    pub point: Point<T>,
    /// Integer search result plus parabolic sub-pixel refinement.
    pub displacement: Point<T>,
    pub integer: (isize, isize),
    /// Mean squared difference at the integer optimum.
    pub mse: T,
    pub lost: bool,
}

impl<T: Scalar> Track<T> {
    fn lost(point: Point<T>) -> Self {
        Self { point, displacement: Point::new(T::zero(), T::zero()), integer: (0, 0), mse: T::infinity(), lost: true }
    }

    pub fn destination(&self) -> Point<T> {
        Point::new(self.point.x + self.displacement.x, self.point.y + self.displacement.y)
    }
}

/// Exhaustive SSD block matching of each point from `a` into `b`.
///
/// Points are rounded to the pixel grid. A point is lost when its window does
/// not fit in `a`, when no candidate window fits in `b`, or when the best
/// mean squared difference exceeds `lost_mse`.
pub fn track_points<T: Scalar>(
    a: &Image<T>,
    b: &Image<T>,
    points: &[Point<T>],
    params: &TrackParams,
) -> Result<Vec<Track<T>>, GeometryError> {
    if params.window < 5 || params.window.is_multiple_of(2) {
        return Err(GeometryError::BadParams(format!("window must be odd and at least 5, got {}", params.window)));
    }
    if a.channels() != 1 || b.channels() != 1 {
        return Err(GeometryError::BadParams("tracking needs single-channel frames".into()));
    }
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(GeometryError::BadParams("frames differ in size".into()));
    }
    Ok(points.iter().map(|p| track_one(a, b, *p, params)).collect())
}

fn track_one<T: Scalar>(a: &Image<T>, b: &Image<T>, p: Point<T>, params: &TrackParams) -> Track<T> {
    let (w, h) = (a.width() as isize, a.height() as isize);
    let half = (params.window / 2) as isize;
    let (Some(cx), Some(cy)) = (p.x.round().to_isize(), p.y.round().to_isize()) else {
        return Track::lost(p);
    };
    if cx - half < 0 || cy - half < 0 || cx + half >= w || cy + half >= h {
        return Track::lost(p);
    }
    let r = params.search_radius as isize;
    let side = (2 * r + 1) as usize;
    let mut surface = vec![None::<T>; side * side];
    let (ad, bd) = (a.data(), b.data());
    let mut best: Option<(isize, isize, T)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let (bx, by) = (cx + dx, cy + dy);
            if bx - half < 0 || by - half < 0 || bx + half >= w || by + half >= h {
                continue;
            }
            let mut ssd = T::zero();
            for j in -half..=half {
                let ra = ((cy + j) * w + cx - half) as usize;
                let rb = ((by + j) * w + bx - half) as usize;
                for i in 0..params.window {
                    let d = ad[ra + i] - bd[rb + i];
                    ssd = ssd + d * d;
                }
            }
            surface[((dy + r) as usize) * side + (dx + r) as usize] = Some(ssd);
            let better = match best {
                None => true,
                Some((ex, ey, e)) => ssd < e || (ssd == e && dx * dx + dy * dy < ex * ex + ey * ey),
            };
            if better {
                best = Some((dx, dy, ssd));
            }
        }
    }
    let Some((dx, dy, ssd)) = best else {
        return Track::lost(p);
    };
    let mse = ssd / T::from_usize_lossy(params.window * params.window);
    let at = |x: isize, y: isize| -> Option<T> {
        if x.abs() > r || y.abs() > r {
            return None;
        }
        surface[((y + r) as usize) * side + (x + r) as usize]
    };
    // an exact block match needs no sub-pixel correction
    let (sub_x, sub_y) = if ssd == T::zero() {
        (T::zero(), T::zero())
    } else {
        (parabola(at(dx - 1, dy), ssd, at(dx + 1, dy)), parabola(at(dx, dy - 1), ssd, at(dx, dy + 1)))
    };
    Track {
        point: p,
        displacement: Point::new(T::from_isize(dx).expect("small") + sub_x, T::from_isize(dy).expect("small") + sub_y),
        integer: (dx, dy),
        mse,
        lost: mse > T::lit(params.lost_mse),
    }
}

/// Vertex offset of the parabola through three equally spaced samples, in [-0.5, 0.5].
fn parabola<T: Scalar>(left: Option<T>, center: T, right: Option<T>) -> T {
    let (Some(l), Some(r)) = (left, right) else { return T::zero() };
    let denom = l - T::lit(2.0) * center + r;
    if denom <= T::zero() {
        return T::zero();
    }
    let half = T::lit(0.5);
    ((l - r) * half / denom).max(-half).min(half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(seed: u64, w: usize, h: usize) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, 1, |_, _, _| rng.random()).unwrap()
    }

    fn shifted(img: &Image<f64>, sx: isize, sy: isize) -> Image<f64> {
        Image::from_fn(img.width(), img.height(), 1, |x, y, _| img.at_clamped(x as isize - sx, y as isize - sy, 0)).unwrap()
    }

    #[test]
    fn integer_shift_is_recovered() {
        let a = texture(3, 64, 48);
        let b = shifted(&a, 3, -2);
        let points: Vec<_> = (0..30).map(|i| Point::new(12.0 + (i % 6) as f64 * 8.0, 10.0 + (i / 6) as f64 * 6.0)).collect();
        let tracks = track_points(&a, &b, &points, &TrackParams { search_radius: 6, ..Default::default() }).unwrap();
        assert!(tracks.iter().all(|t| t.integer == (3, -2) && !t.lost));
    }

    #[test]
    fn identical_frames_give_zero_motion() {
        let a = texture(4, 40, 40);
        let points = [Point::new(20.0, 20.0), Point::new(10.0, 30.0)];
        for t in track_points(&a, &a, &points, &TrackParams::default()).unwrap() {
            assert_eq!(t.displacement, Point::new(0.0, 0.0));
            assert!(!t.lost);
        }
    }

    #[test]
    fn window_outside_frame_is_lost() {
        let a = texture(5, 40, 40);
        let params = TrackParams { window: 11, ..Default::default() };
        let t = track_points(&a, &a, &[Point::new(1.0, 20.0)], &params).unwrap();
        assert!(t[0].lost);
    }

    #[test]
    fn dissimilar_frames_are_lost() {
        let (a, b) = (texture(6, 40, 40), texture(7, 40, 40));
        let t = track_points(&a, &b, &[Point::new(20.0, 20.0)], &TrackParams { search_radius: 2, ..Default::default() }).unwrap();
        assert!(t[0].lost);
    }

    #[test]
    fn bad_window_rejected() {
        let a = texture(8, 16, 16);
        assert!(track_points(&a, &a, &[], &TrackParams { window: 4, ..Default::default() }).is_err());
        assert!(track_points(&a, &a, &[], &TrackParams { window: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn parabola_vertex() {
        // samples of (x - 0.25)^2 at -1, 0, 1
        let f = |x: f64| (x - 0.25) * (x - 0.25);
        assert!((parabola(Some(f(-1.0)), f(0.0), Some(f(1.0))) - 0.25).abs() < 1e-12);
        assert_eq!(parabola(None, 1.0, Some(2.0)), 0.0);
    }
}
