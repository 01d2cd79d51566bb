//! Deterministic synthetic imagery: procedural textures, camera motions over
//! planar and two-plane scenes, and slate-like boards. Used by the test suites
//! and the demo fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{Point, TransformModel};
use crate::imaging::Image;
use crate::metadata::CameraMove;

/// Multi-octave lattice value noise defined on the whole plane.
///
/// Lattice values come from a hash of the integer cell, so sampling at integer
/// offsets reproduces exact pixel shifts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueNoise {
    pub seed: u64,
    pub cell: f64,
    pub octaves: u32,
}

impl ValueNoise {
    pub fn new(seed: u64) -> Self {
        Self { seed, cell: 8.0, octaves: 3 }
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        let mut weight = 0.0;
        let mut amp = 1.0;
        let mut cell = self.cell;
        for o in 0..self.octaves {
            total += amp * lattice(self.seed.wrapping_add(u64::from(o) * 0x9e37_79b9), x / cell, y / cell);
            weight += amp;
            amp *= 0.5;
            cell *= 0.5;
        }
        total / weight
    }
}

fn hash2(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut z = seed ^ (ix as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (iy as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn lattice(seed: u64, x: f64, y: f64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (tx, ty) = (x - fx, y - fy);
    let (ix, iy) = (fx as i64, fy as i64);
    let v00 = hash2(seed, ix, iy);
    let v10 = hash2(seed, ix + 1, iy);
    let v01 = hash2(seed, ix, iy + 1);
    let v11 = hash2(seed, ix + 1, iy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Renders `f(x, y)` at pixel centres into a grey image.
pub fn render(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Image<f64> {
    Image::from_fn(width, height, 1, |x, y, _| f(x as f64, y as f64)).expect("positive size")
}

/// A grey textured frame.
pub fn texture(seed: u64, width: usize, height: usize) -> Image<f64> {
    let noise = ValueNoise::new(seed);
    render(width, height, |x, y| noise.sample(x, y))
}

/// Adds seeded Gaussian noise, clamping into [0, 1].
pub fn add_noise(img: &Image<f64>, sigma: f64, seed: u64) -> Image<f64> {
    if sigma <= 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let data = img.data().iter().map(|v| v + normal.sample(&mut rng)).collect();
    Image::from_unclamped(img.width(), img.height(), img.channels(), data).expect("same shape")
}

/// Parameters of a synthetic camera clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipSpec {
    pub motion: CameraMove,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ClipSpec {
    pub fn new(motion: CameraMove, seed: u64) -> Self {
        Self { motion, width: 128, height: 96, frames: 10, noise_sigma: 0.0, seed }
    }
}

/// Frames of a synthetic shot with the given camera motion.
///
/// Planar motions (static, pan, tilt, zoom, handheld) view one textured plane;
/// truck, pedestal and dolly view a far plane partly covered by vertical
/// bands of a near plane that moves four times as fast.
pub fn camera_clip(spec: &ClipSpec) -> Vec<Image<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let far = ValueNoise::new(rng.random());
    let near = ValueNoise { cell: 6.0, ..ValueNoise::new(rng.random()) };
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let speed = rng.random_range(3.0..5.0);
    let zoom_rate: f64 = rng.random_range(1.03..1.05);
    let origin = (rng.random_range(-500.0..500.0_f64).round(), rng.random_range(-500.0..500.0_f64).round());
    let jitter_angle = rng.random_range(0.0..std::f64::consts::TAU);
    let (cx, cy) = ((spec.width as f64 - 1.0) / 2.0, (spec.height as f64 - 1.0) / 2.0);
    let band = 16.0;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut shake = (0.0, 0.0);
    for k in 0..spec.frames {
        let kf = k as f64;
        if k > 0 {
            let flip = if k % 2 == 0 { 1.0 } else { -1.0 };
            let angle = jitter_angle + rng.random_range(-0.5..0.5);
            let mag = rng.random_range(3.0..6.0);
            shake = (shake.0 + flip * mag * angle.cos(), shake.1 + flip * mag * angle.sin());
        }
        let img = match spec.motion {
            CameraMove::Static | CameraMove::Unknown => render(spec.width, spec.height, |x, y| far.sample(x + origin.0, y + origin.1)),
            CameraMove::Pan => render(spec.width, spec.height, |x, y| far.sample(x + origin.0 + sign * speed * kf, y + origin.1)),
            CameraMove::Tilt => render(spec.width, spec.height, |x, y| far.sample(x + origin.0, y + origin.1 + sign * speed * kf)),
            CameraMove::Handheld => render(spec.width, spec.height, |x, y| far.sample(x + origin.0 + shake.0, y + origin.1 + shake.1)),
            CameraMove::Zoom => {
                let s = if sign > 0.0 { zoom_rate.powf(kf) } else { zoom_rate.powf(-kf) };
                render(spec.width, spec.height, |x, y| far.sample(cx + (x - cx) / s + origin.0, cy + (y - cy) / s + origin.1))
            }
            CameraMove::Truck | CameraMove::Pedestal => {
                let (ax, ay) = if spec.motion == CameraMove::Truck { (1.0, 0.0) } else { (0.0, 1.0) };
                let slow = sign * 2.0 * kf;
                let fast = sign * 8.0 * kf;
                render(spec.width, spec.height, |x, y| {
                    let (nx, ny) = (x + ax * fast, y + ay * fast);
                    let across = if ax > 0.0 { nx } else { ny };
                    if (across / band).floor().rem_euclid(2.0) == 0.0 {
                        0.5 + 0.5 * near.sample(nx + origin.1, ny + origin.0)
                    } else {
                        0.5 * far.sample(x + ax * slow + origin.0, y + ay * slow + origin.1)
                    }
                })
            }
            CameraMove::Dolly => {
                let s_far = 1.01f64.powf(sign * kf);
                let s_near = 1.06f64.powf(sign * kf);
                render(spec.width, spec.height, |x, y| {
                    let (nx, ny) = (cx + (x - cx) / s_near, cy + (y - cy) / s_near);
                    if ((nx - cx) / band).floor().rem_euclid(2.0) == 0.0 {
                        0.5 + 0.5 * near.sample(nx + origin.1, ny + origin.0)
                    } else {
                        0.5 * far.sample(cx + (x - cx) / s_far + origin.0, cy + (y - cy) / s_far + origin.1)
                    }
                })
            }
        };
        frames.push(add_noise(&img, spec.noise_sigma, spec.seed.wrapping_add(1000 + k as u64)));
    }
    frames
}

/// Field region of a synthetic board, `(x, y, w, h)` in board pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardRegion {
    pub name: String,
    pub rect: (usize, usize, usize, usize),
    pub integer: bool,
}

/// A slate-like board: clapper stripes along the top, a grid of cells with
/// blocky glyph marks, and the scene/shot/take number fields.
pub fn slate_board(seed: u64, width: usize, height: usize) -> (Image<f64>, Vec<BoardRegion>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stripe_h = height / 5;
    let cells: Vec<(usize, usize, usize, usize, f64)> = (0..70)
        .map(|_| {
            let w = rng.random_range(3..10);
            let h = rng.random_range(3..10);
            (rng.random_range(2..width - w - 2), rng.random_range(stripe_h + 2..height - h - 2), w, h, rng.random_range(0.55..1.0))
        })
        .collect();
    let img = Image::from_fn(width, height, 1, |x, y, _| {
        if y < stripe_h {
            return if ((x + y) / 9) % 2 == 0 { 0.95 } else { 0.05 };
        }
        if y == stripe_h
            || x == 0
            || y == height - 1
            || x == width - 1
            || x == width / 3
            || x == 2 * width / 3
            || y == (stripe_h + height) / 2
        {
            return 0.9;
        }
        cells.iter().rev().find(|c| x >= c.0 && x < c.0 + c.2 && y >= c.1 && y < c.1 + c.3).map_or(0.12, |c| c.4)
    })
    .expect("positive size");
    let row = (stripe_h + height) / 2;
    let third = width / 3;
    let regions = vec![
        BoardRegion { name: "scene".into(), rect: (2, row + 2, third - 4, height - row - 4), integer: true },
        BoardRegion { name: "shot".into(), rect: (third + 2, row + 2, third - 4, height - row - 4), integer: true },
        BoardRegion { name: "take".into(), rect: (2 * third + 2, row + 2, width - 2 * third - 4, height - row - 4), integer: true },
        BoardRegion { name: "production".into(), rect: (2, stripe_h + 2, width - 4, row - stripe_h - 4), integer: false },
    ];
    (img, regions)
}

/// Draws `board` into `background` under `h` (board → frame), by inverse
/// bilinear mapping.
pub fn warp_onto(background: &Image<f64>, board: &Image<f64>, h: &TransformModel<f64>) -> Image<f64> {
    let inv = h.inverse().expect("invertible warp");
    let mut out = background.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            if let Some(p) = inv.apply(Point::new(x as f64, y as f64)) {
                if let Some(v) = board.sample_bilinear(p.x, p.y, 0) {
                    out.set(x, y, 0, v);
                }
            }
        }
    }
    out
}

/// A mild random perspective warp placing a `bw × bh` board inside a
/// `fw × fh` frame: each board corner is jittered by up to `jitter` pixels
/// around a centred placement.
pub fn random_board_warp(seed: u64, bw: usize, bh: usize, fw: usize, fh: usize, jitter: f64) -> TransformModel<f64> {
    use crate::geometry::{fit_least_squares, PointMatch, TransformKind};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ox, oy) = ((fw - bw) as f64 / 2.0, (fh - bh) as f64 / 2.0);
    let (bw, bh) = (bw as f64 - 1.0, bh as f64 - 1.0);
    let corners = [(0.0, 0.0), (bw, 0.0), (bw, bh), (0.0, bh)];
    let matches: Vec<_> = corners
        .iter()
        .map(|&(x, y)| {
            let dx = rng.random_range(-jitter..=jitter);
            let dy = rng.random_range(-jitter..=jitter);
            PointMatch::new(Point::new(x, y), Point::new(x + ox + dx, y + oy + dy), 0.0)
        })
        .collect();
    let m = fit_least_squares(TransformKind::Homography, &matches, &[0, 1, 2, 3]).expect("corners in general position");
    TransformModel::from_matrix(TransformKind::Homography, m)
}
