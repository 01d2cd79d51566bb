use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Corner, Point, PointMatch};
use crate::imaging::Image;
use crate::Scalar;

pub const DESCRIPTOR_BITS: usize = 256;
/// Half-size of the 31×31 sampling patch.
pub const PATCH_RADIUS: usize = 15;

const PAIR_SEED: u64 = 0x0b1e_f00d_5eed_2561;
const BLUR_RADIUS: isize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor<T = f64> {
    pub bits: [u64; 4],
    pub center: Corner<T>,
}

pub fn hamming(a: &[u64; 4], b: &[u64; 4]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

type Pair = [(i8, i8); 2];

/// Test-pair offsets, isotropic Gaussian with σ = 31/5 clipped to the patch.
fn pairs() -> &'static [Pair; DESCRIPTOR_BITS] {
    static PAIRS: OnceLock<[Pair; DESCRIPTOR_BITS]> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
        let normal = Normal::new(0.0, 31.0 / 5.0).expect("valid sigma");
        let r = PATCH_RADIUS as f64;
        let offset = |rng: &mut ChaCha8Rng| -> (i8, i8) {
            let x: f64 = normal.sample(rng);
            let y: f64 = normal.sample(rng);
            (x.round().clamp(-r, r) as i8, y.round().clamp(-r, r) as i8)
        };
        let mut out = [[(0, 0); 2]; DESCRIPTOR_BITS];
        for pair in &mut out {
            loop {
                let p = offset(&mut rng);
                let q = offset(&mut rng);
                if p != q {
                    *pair = [p, q];
                    break;
                }
            }
        }
        out
    })
}

/// 5×5 box blur with replicated edges.
fn smooth<T: Scalar>(img: &Image<T>) -> Vec<T> {
    let (w, h) = (img.width(), img.height());
    let mut rows = vec![T::zero(); w * h];
    let n = T::from_usize_lossy((2 * BLUR_RADIUS + 1) as usize);
    for y in 0..h {
        for x in 0..w {
            let s = (-BLUR_RADIUS..=BLUR_RADIUS).map(|d| img.at_clamped(x as isize + d, y as isize, 0)).sum::<T>();
            rows[y * w + x] = s / n;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let s = (-BLUR_RADIUS..=BLUR_RADIUS).map(|d| rows[(y as isize + d).clamp(0, h as isize - 1) as usize * w + x]).sum::<T>();
            out[y * w + x] = s / n;
        }
    }
    out
}

/// Binary descriptors for corners whose full patch lies inside the image; other
/// corners are skipped. No orientation compensation.
pub fn compute_descriptors<T: Scalar>(img: &Image<T>, corners: &[Corner<T>]) -> Vec<Descriptor<T>> {
    let gray;
    let img = if img.channels() == 1 {
        img
    } else {
        gray = crate::imaging::to_grayscale(img);
        &gray
    };
    let (w, h) = (img.width(), img.height());
    if w <= 2 * PATCH_RADIUS || h <= 2 * PATCH_RADIUS {
        return Vec::new();
    }
    let blurred = smooth(img);
    let pairs = pairs();
    let r = PATCH_RADIUS as isize;
    corners
        .iter()
        .filter_map(|c| {
            let cx = c.x.round().to_isize()?;
            let cy = c.y.round().to_isize()?;
            if cx < r || cy < r || cx + r >= w as isize || cy + r >= h as isize {
                return None;
            }
            let at = |(dx, dy): (i8, i8)| blurred[(cy + dy as isize) as usize * w + (cx + dx as isize) as usize];
            let mut bits = [0u64; 4];
            for (i, [p, q]) in pairs.iter().enumerate() {
                if at(*p) < at(*q) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            Some(Descriptor { bits, center: *c })
        })
        .collect()
}

/// Best and second-best distance of `d` against `set`; ties keep the lowest index.
fn nearest<T>(d: &Descriptor<T>, set: &[Descriptor<T>]) -> Option<(usize, u32, u32)> {
    let mut best: Option<(usize, u32)> = None;
    let mut second = u32::MAX;
    for (j, e) in set.iter().enumerate() {
        let dist = hamming(&d.bits, &e.bits);
        match best {
            Some((_, b)) if dist >= b => second = second.min(dist),
            Some((_, b)) => {
                second = b;
                best = Some((j, dist));
            }
            None => best = Some((j, dist)),
        }
    }
    best.map(|(j, b)| (j, b, second))
}

fn passes_ratio(best: u32, second: u32, ratio: f64) -> bool {
    second == u32::MAX || f64::from(best) < ratio * f64::from(second)
}

/// Mutual nearest neighbours under Hamming distance, with the ratio test
/// applied from both sides so the result is symmetric in `a` and `b`.
pub fn match_descriptors<T: Scalar>(a: &[Descriptor<T>], b: &[Descriptor<T>], ratio: f64) -> Vec<PointMatch<T>> {
    let forward: Vec<_> = a.iter().map(|d| nearest(d, b)).collect();
    let backward: Vec<_> = b.iter().map(|d| nearest(d, a)).collect();
    let mut out = Vec::new();
    for (i, f) in forward.iter().enumerate() {
        let Some((j, best, second)) = *f else { continue };
        let Some((back_i, back_best, back_second)) = backward[j] else { continue };
        if back_i != i || !passes_ratio(best, second, ratio) || !passes_ratio(back_best, back_second, ratio) {
            continue;
        }
        let (ca, cb) = (a[i].center, b[j].center);
        out.push(PointMatch::new(Point::new(ca.x, ca.y), Point::new(cb.x, cb.y), T::from_u32(best).expect("small int")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{detect_corners, CornerParams};
    use rand::Rng;

    /// Asymmetric blocky pattern: random rectangles on a dark ground.
    fn pattern(seed: u64) -> Image<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rects: Vec<(usize, usize, usize, usize, f64)> = (0..40)
            .map(|_| (rng.random_range(0..90), rng.random_range(0..70), rng.random_range(3..14), rng.random_range(3..14), rng.random()))
            .collect();
        Image::from_fn(96, 80, 1, |x, y, _| {
            rects.iter().rev().find(|r| x >= r.0 && x < r.0 + r.2 && y >= r.1 && y < r.1 + r.3).map_or(0.1, |r| r.4)
        })
        .unwrap()
    }

    fn describe(img: &Image<f64>) -> Vec<Descriptor<f64>> {
        let corners = detect_corners(img, &CornerParams { max_corners: 200, min_distance: 3.0, quality: 0.01 });
        compute_descriptors(img, &corners)
    }

    #[test]
    fn pair_layout_is_fixed_and_in_patch() {
        let p = pairs();
        assert!(p.iter().flatten().all(|(x, y)| x.unsigned_abs() as usize <= PATCH_RADIUS && y.unsigned_abs() as usize <= PATCH_RADIUS));
        assert!(p.iter().all(|[a, b]| a != b));
        assert_eq!(p[0], pairs()[0]);
    }

    #[test]
    fn complement_distance_is_full_length() {
        let a = [0x1234_5678_9abc_def0, 0, u64::MAX, 42];
        let b = a.map(|w| !w);
        assert_eq!(hamming(&a, &b), 256);
        assert_eq!(hamming(&a, &a), 0);
    }

    #[test]
    fn self_matching_is_identity() {
        let img = pattern(1);
        let d = describe(&img);
        assert!(d.len() > 10);
        let m = match_descriptors(&d, &d, 0.9);
        let distinct = d.iter().filter(|x| d.iter().filter(|y| y.bits == x.bits).count() == 1).count();
        assert_eq!(m.len(), distinct);
        assert!(m.iter().all(|m| m.a == m.b && m.score == 0.0));
    }

    #[test]
    fn rotation_by_half_turn_defeats_matching() {
        let img = pattern(2);
        let rotated = Image::from_fn(img.width(), img.height(), 1, |x, y, _| img.at(img.width() - 1 - x, img.height() - 1 - y, 0)).unwrap();
        let (da, db) = (describe(&img), describe(&rotated));
        let m = match_descriptors(&da, &db, 0.8);
        // a correct match maps p to (w-1-x, h-1-y)
        let correct = m.iter().filter(|m| (m.b.x - (95.0 - m.a.x)).abs() < 1.5 && (m.b.y - (79.0 - m.a.y)).abs() < 1.5).count();
        assert!(correct * 10 <= da.len().min(db.len()), "{correct} of {}", da.len());
    }

    #[test]
    fn matching_is_symmetric() {
        for seed in 0..5 {
            let a = describe(&pattern(seed));
            let b = describe(&pattern(seed + 100));
            let ab = match_descriptors(&a, &b, 0.95);
            let mut ba: Vec<_> = match_descriptors(&b, &a, 0.95).into_iter().map(|m| PointMatch::new(m.b, m.a, m.score)).collect();
            let key = |m: &PointMatch<f64>| (m.a.x.to_bits(), m.a.y.to_bits(), m.b.x.to_bits(), m.b.y.to_bits());
            let mut ab = ab;
            ab.sort_by_key(key);
            ba.sort_by_key(key);
            assert_eq!(ab, ba);
        }
    }
}
