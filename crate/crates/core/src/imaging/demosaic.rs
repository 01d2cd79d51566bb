use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Image, ImagingError};
use crate::Scalar;

/// Colour-filter layout of the top-left 2×2 cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [BayerPattern::Rggb, BayerPattern::Bggr, BayerPattern::Grbg, BayerPattern::Gbrg];

    /// Channel index (0 = R, 1 = G, 2 = B) sampled at `(x, y)`.
    #[inline]
    pub fn color_at(self, x: usize, y: usize) -> usize {
        let cell = match self {
            BayerPattern::Rggb => [[0, 1], [1, 2]],
            BayerPattern::Bggr => [[2, 1], [1, 0]],
            BayerPattern::Grbg => [[1, 0], [2, 1]],
            BayerPattern::Gbrg => [[1, 2], [0, 1]],
        };
        cell[y & 1][x & 1]
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BayerPattern::Rggb => "RGGB",
            BayerPattern::Bggr => "BGGR",
            BayerPattern::Grbg => "GRBG",
            BayerPattern::Gbrg => "GBRG",
        })
    }
}

impl FromStr for BayerPattern {
    type Err = ImagingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BayerPattern::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| ImagingError::BadParams(format!("unknown bayer pattern {s:?}")))
    }
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Bilinear demosaic.
///
/// Each missing channel is the mean of the 8-neighbourhood sites carrying that
/// colour; neighbours outside the frame are replaced by the nearest edge site
/// (counted again, with its own colour). In the interior this is the classic
/// bilinear kernel.
pub fn demosaic_bilinear<T: Scalar>(raw: &Image<T>, pattern: BayerPattern) -> Result<Image<T>, ImagingError> {
    if raw.channels() != 1 {
        return Err(ImagingError::ChannelMismatch { expected: 1, got: raw.channels() });
    }
    let (w, h) = (raw.width(), raw.height());
    if w < 2 || h < 2 || w % 2 != 0 || h % 2 != 0 {
        return Err(ImagingError::OddDimensions { width: w, height: h });
    }
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let own = pattern.color_at(x, y);
            let center = raw.at(x, y, 0);
            let mut first = [None::<T>; 3];
            let mut offset_sum = [T::zero(); 3];
            let mut count = [0usize; 3];
            for (dx, dy) in NEIGHBORS {
                let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                let c = pattern.color_at(nx, ny);
                let v = raw.at(nx, ny, 0);
                // mean as first + Σ(v - first)/n so constant neighbourhoods stay exact
                let base = *first[c].get_or_insert(v);
                offset_sum[c] = offset_sum[c] + (v - base);
                count[c] += 1;
            }
            for c in 0..3 {
                let value = if c == own {
                    center
                } else {
                    let base = first[c].expect("every 3x3 clamped window holds all colours");
                    base + offset_sum[c] / T::from_usize_lossy(count[c])
                };
                data.push(value);
            }
        }
    }
    Image::from_unclamped(w, h, 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: pad the mosaic (values and colour map) by edge
    /// replication, then take masked 3×3 box sums per channel.
    fn oracle(raw: &Image<f64>, pattern: BayerPattern) -> Vec<f64> {
        let (w, h) = (raw.width(), raw.height());
        let pw = w + 2;
        let mut vals = vec![0.0; pw * (h + 2)];
        let mut cols = vec![0usize; pw * (h + 2)];
        for py in 0..h + 2 {
            for px in 0..pw {
                let sx = px.saturating_sub(1).min(w - 1);
                let sy = py.saturating_sub(1).min(h - 1);
                vals[py * pw + px] = raw.at(sx, sy, 0);
                cols[py * pw + px] = pattern.color_at(sx, sy);
            }
        }
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    if pattern.color_at(x, y) == c {
                        out.push(raw.at(x, y, 0));
                        continue;
                    }
                    let (mut sum, mut n) = (0.0, 0.0);
                    for ky in 0..3 {
                        for kx in 0..3 {
                            if kx == 1 && ky == 1 {
                                continue;
                            }
                            let i = (y + ky) * pw + (x + kx);
                            if cols[i] == c {
                                sum += vals[i];
                                n += 1.0;
                            }
                        }
                    }
                    out.push(sum / n);
                }
            }
        }
        out
    }

    #[test]
    fn constant_mosaic_is_exact() {
        for pattern in BayerPattern::ALL {
            for v in [0.5, 0.1, 0.7, 1.0 / 3.0] {
                let raw = Image::filled(6, 4, 1, v).unwrap();
                let rgb = demosaic_bilinear(&raw, pattern).unwrap();
                assert!(rgb.data().iter().all(|s| *s == v), "{pattern} {v}");
            }
        }
    }

    #[test]
    fn red_sites_interpolate_from_red_neighbours() {
        let raw = Image::<f64>::from_fn(4, 4, 1, |x, y, _| if x % 2 == 0 && y % 2 == 0 { 1.0 } else { 0.0 }).unwrap();
        let rgb = demosaic_bilinear(&raw, BayerPattern::Rggb).unwrap();
        assert_eq!(rgb.data(), oracle(&raw, BayerPattern::Rggb).as_slice());
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(rgb.at(x, y, 0), 1.0, "({x},{y})");
                assert_eq!(rgb.at(x, y, 1), 0.0);
                assert_eq!(rgb.at(x, y, 2), 0.0);
            }
        }
    }

    #[test]
    fn matches_oracle_on_random_mosaics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let w = 2 * rng.random_range(1..=8);
            let h = 2 * rng.random_range(1..=8);
            let raw = Image::<f64>::from_fn(w, h, 1, |_, _, _| rng.random()).unwrap();
            let pattern = BayerPattern::ALL[rng.random_range(0..4)];
            let got = demosaic_bilinear(&raw, pattern).unwrap();
            for (a, b) in got.data().iter().zip(oracle(&raw, pattern)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_dimensions_rejected() {
        let raw = Image::<f64>::filled(3, 4, 1, 0.5).unwrap();
        assert_eq!(demosaic_bilinear(&raw, BayerPattern::Rggb), Err(ImagingError::OddDimensions { width: 3, height: 4 }));
    }

    #[test]
    fn pattern_names() {
        assert_eq!("gbrg".parse::<BayerPattern>().unwrap(), BayerPattern::Gbrg);
        assert_eq!(serde_json::to_string(&BayerPattern::Rggb).unwrap(), "\"RGGB\"");
    }
}
