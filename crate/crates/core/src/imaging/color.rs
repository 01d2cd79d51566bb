use super::{clamp_unit, Image, ImagingError};
use crate::Scalar;

/// Hexagonal HSV: hue in degrees [0, 360), saturation and value in [0, 1].
/// Hue is reported as 0 when saturation is 0.
pub fn rgb_to_hsv<T: Scalar>(rgb: [T; 3]) -> [T; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let s = if max > T::zero() { chroma / max } else { T::zero() };
    if chroma <= T::zero() {
        return [T::zero(), s, max];
    }
    let sixty = T::lit(60.0);
    let mut h = if max == r {
        sixty * (g - b) / chroma
    } else if max == g {
        sixty * ((b - r) / chroma + T::lit(2.0))
    } else {
        sixty * ((r - g) / chroma + T::lit(4.0))
    };
    let full = T::lit(360.0);
    if h < T::zero() {
        h = h + full;
    }
    if h >= full {
        h = h - full;
    }
    [h, s, max]
}

#[cfg(test)]
pub(crate) fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Rec. 601 luma (0.299 R + 0.587 G + 0.114 B). Grey input is returned as is.
pub fn to_grayscale<T: Scalar>(img: &Image<T>) -> Image<T> {
    if img.channels() == 1 {
        return img.clone();
    }
    let (wr, wg, wb) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
    let data = img.data().chunks_exact(3).map(|p| clamp_unit(wr * p[0] + wg * p[1] + wb * p[2])).collect();
    Image::from_parts_unchecked(img.width(), img.height(), 1, data)
}

/// Parameters of the fallback log decoding curve `y = (a^x − 1) / (a^b − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogParams {
    pub a: f64,
    pub b: f64,
}

/// Decodes log-encoded RGB with the parametric curve, clamped to [0, 1].
pub fn log_to_linear<T: Scalar>(img: &Image<T>, params: LogParams) -> Result<Image<T>, ImagingError> {
    if !(params.a > 1.0 && params.a.is_finite()) || !(params.b > 0.0 && params.b.is_finite()) {
        return Err(ImagingError::BadParams(format!("log curve needs a > 1 and b > 0, got a={} b={}", params.a, params.b)));
    }
    if img.channels() != 3 {
        return Err(ImagingError::ChannelMismatch { expected: 3, got: img.channels() });
    }
    let a = T::lit(params.a);
    let denom = a.powf(T::lit(params.b)) - T::one();
    let data = img.data().iter().map(|x| clamp_unit((a.powf(*x) - T::one()) / denom)).collect();
    Ok(Image::from_parts_unchecked(img.width(), img.height(), 3, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent HSV formula: hue from atan2 of the chromaticity plane.
    fn hsv_oracle(r: f64, g: f64, b: f64) -> [f64; 3] {
        let v = r.max(g).max(b);
        let c = v - r.min(g).min(b);
        let s = if v == 0.0 { 0.0 } else { c / v };
        if c == 0.0 {
            return [0.0, s, v];
        }
        // hexagonal hue via sector lookup on sorted channels
        let (h_sector, lo, mid_frac) = if r >= g && g >= b {
            (0.0, false, (g - b) / c)
        } else if g >= r && r >= b {
            (60.0, true, (r - b) / c)
        } else if g >= b && b >= r {
            (120.0, false, (b - r) / c)
        } else if b >= g && g >= r {
            (180.0, true, (g - r) / c)
        } else if b >= r && r >= g {
            (240.0, false, (r - g) / c)
        } else {
            (300.0, true, (b - g) / c)
        };
        let h = if lo { h_sector + 60.0 * (1.0 - mid_frac) } else { h_sector + 60.0 * mid_frac };
        [h % 360.0, s, v]
    }

    #[test]
    fn named_colours() {
        assert_eq!(rgb_to_hsv([1.0, 0.0, 0.0]), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv([0.5, 0.5, 0.5]), [0.0, 0.0, 0.5]);
        assert_eq!(rgb_to_hsv([0.0f32, 0.0, 1.0]), [240.0, 1.0, 1.0]);
        let [h, s, v] = rgb_to_hsv([0.2, 0.4, 0.6]);
        let [oh, os, ov] = hsv_oracle(0.2, 0.4, 0.6);
        assert!((h - oh).abs() < 1e-9 && (s - os).abs() < 1e-9 && (v - ov).abs() < 1e-9);
        assert!((h - 210.0).abs() < 1e-9);
    }

    #[test]
    fn random_hsv_matches_oracle_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let rgb: [f64; 3] = [rng.random(), rng.random(), rng.random()];
            let hsv = rgb_to_hsv(rgb);
            let o = hsv_oracle(rgb[0], rgb[1], rgb[2]);
            for k in 0..3 {
                assert!((hsv[k] - o[k]).abs() < 1e-9, "{rgb:?} {hsv:?} {o:?}");
            }
            assert!(hsv[0] >= 0.0 && hsv[0] < 360.0);
            if hsv[1] > 0.0 {
                let back = hsv_to_rgb(hsv);
                for k in 0..3 {
                    assert!((back[k] - rgb[k]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn luma_weights() {
        let img = Image::<f64>::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((to_grayscale(&img).at(0, 0, 0) - 0.299).abs() < 1e-12);
        let white = Image::<f64>::filled(2, 2, 3, 1.0).unwrap();
        assert!(to_grayscale(&white).data().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn log_curve() {
        let p = LogParams { a: 10.0, b: 1.0 };
        let img = Image::<f64>::new(1, 1, 3, vec![0.0, 1.0, 0.5]).unwrap();
        let out = log_to_linear(&img, p).unwrap();
        assert_eq!(out.at(0, 0, 0), 0.0);
        assert!((out.at(0, 0, 1) - 1.0).abs() < 1e-12);
        let expected = (10f64.sqrt() - 1.0) / 9.0;
        assert!((out.at(0, 0, 2) - expected).abs() < 1e-12);
        assert!(matches!(log_to_linear(&img, LogParams { a: 1.0, b: 1.0 }), Err(ImagingError::BadParams(_))));
        assert!(matches!(log_to_linear(&img, LogParams { a: 2.0, b: 0.0 }), Err(ImagingError::BadParams(_))));
    }
}
