//! `.cube` look-up tables (1D and 3D) and their application.

use std::fmt::Write as _;

use super::{clamp_unit, Image, ImagingError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LutKind {
    Lut1d,
    Lut3d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lut<T = f64> {
    kind: LutKind,
    size: usize,
    /// 3D entries are red-fastest: index = r + g·n + b·n².
    entries: Vec<[T; 3]>,
    domain_min: [T; 3],
    domain_max: [T; 3],
    title: Option<String>,
}

impl<T: Scalar> Lut<T> {
    pub fn new(kind: LutKind, size: usize, entries: Vec<[T; 3]>) -> Result<Self, ImagingError> {
        if size < 2 {
            return Err(ImagingError::BadParams(format!("LUT size {size} < 2")));
        }
        let expected = match kind {
            LutKind::Lut1d => size,
            LutKind::Lut3d => size * size * size,
        };
        if entries.len() != expected {
            return Err(ImagingError::EntryCountMismatch { expected, got: entries.len() });
        }
        if entries.iter().flatten().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(ImagingError::ValueOutOfDomain { line: 0 });
        }
        Ok(Self { kind, size, entries, domain_min: [T::zero(); 3], domain_max: [T::one(); 3], title: None })
    }

    pub fn identity(kind: LutKind, size: usize) -> Result<Self, ImagingError> {
        let step = |i: usize| T::from_usize_lossy(i) / T::from_usize_lossy(size - 1);
        let entries = match kind {
            LutKind::Lut1d => (0..size).map(|i| [step(i); 3]).collect(),
            LutKind::Lut3d => (0..size * size * size).map(|i| [step(i % size), step((i / size) % size), step(i / (size * size))]).collect(),
        };
        Self::new(kind, size, entries)
    }

    pub fn with_domain(mut self, min: [T; 3], max: [T; 3]) -> Result<Self, ImagingError> {
        if (0..3).any(|c| !(max[c] > min[c])) {
            return Err(ImagingError::BadParams("DOMAIN_MAX must exceed DOMAIN_MIN".into()));
        }
        self.domain_min = min;
        self.domain_max = max;
        Ok(self)
    }

    pub fn kind(&self) -> LutKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[[T; 3]] {
        &self.entries
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    /// 3D entry at lattice coordinates.
    #[inline]
    pub fn entry3(&self, r: usize, g: usize, b: usize) -> [T; 3] {
        self.entries[r + self.size * (g + self.size * b)]
    }

    fn normalize(&self, v: T, c: usize) -> T {
        clamp_unit((v - self.domain_min[c]) / (self.domain_max[c] - self.domain_min[c]))
    }

    /// Cell index and fraction of a normalized coordinate.
    #[inline]
    fn locate(&self, u: T) -> (usize, T) {
        let pos = u * T::from_usize_lossy(self.size - 1);
        let i = pos.floor().to_usize().unwrap_or(0).min(self.size - 2);
        (i, pos - T::from_usize_lossy(i))
    }

    /// Maps one RGB triple.
    pub fn apply_rgb(&self, rgb: [T; 3]) -> [T; 3] {
        let one = T::one();
        let u = [self.normalize(rgb[0], 0), self.normalize(rgb[1], 1), self.normalize(rgb[2], 2)];
        match self.kind {
            LutKind::Lut1d => std::array::from_fn(|c| {
                let (i, f) = self.locate(u[c]);
                clamp_unit(self.entries[i][c] * (one - f) + self.entries[i + 1][c] * f)
            }),
            LutKind::Lut3d => {
                let (ri, rf) = self.locate(u[0]);
                let (gi, gf) = self.locate(u[1]);
                let (bi, bf) = self.locate(u[2]);
                std::array::from_fn(|c| {
                    let lerp = |a: T, b: T, t: T| a * (one - t) + b * t;
                    let e = |dr: usize, dg: usize, db: usize| self.entry3(ri + dr, gi + dg, bi + db)[c];
                    let c00 = lerp(e(0, 0, 0), e(1, 0, 0), rf);
                    let c10 = lerp(e(0, 1, 0), e(1, 1, 0), rf);
                    let c01 = lerp(e(0, 0, 1), e(1, 0, 1), rf);
                    let c11 = lerp(e(0, 1, 1), e(1, 1, 1), rf);
                    clamp_unit(lerp(lerp(c00, c10, gf), lerp(c01, c11, gf), bf))
                })
            }
        }
    }

    /// Serializes to `.cube` text.
    pub fn to_cube(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "TITLE \"{t}\"");
        }
        let tag = match self.kind {
            LutKind::Lut1d => "LUT_1D_SIZE",
            LutKind::Lut3d => "LUT_3D_SIZE",
        };
        let _ = writeln!(out, "{tag} {}", self.size);
        if self.domain_min != [T::zero(); 3] || self.domain_max != [T::one(); 3] {
            let [a, b, c] = self.domain_min;
            let _ = writeln!(out, "DOMAIN_MIN {a} {b} {c}");
            let [a, b, c] = self.domain_max;
            let _ = writeln!(out, "DOMAIN_MAX {a} {b} {c}");
        }
        for [r, g, b] in &self.entries {
            let _ = writeln!(out, "{r} {g} {b}");
        }
        out
    }
}

/// Parses `.cube` text: optional `TITLE`, `DOMAIN_MIN`/`DOMAIN_MAX` (or
/// `LUT_*_INPUT_RANGE`), one size line, then RGB triples.
pub fn parse_cube<T: Scalar>(text: &str) -> Result<Lut<T>, ImagingError> {
    let syntax = |line: usize, message: String| ImagingError::CubeSyntax { line, message };
    let mut kind_size = None;
    let mut title = None;
    let mut domain_min = [T::zero(); 3];
    let mut domain_max = [T::one(); 3];
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line");
        let nums = |tokens: std::str::SplitWhitespace<'_>, n: usize| -> Result<Vec<T>, ImagingError> {
            let vals: Vec<T> = tokens
                .map(|t| t.parse::<f64>().map(T::lit).map_err(|_| syntax(line_no, format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != n {
                return Err(syntax(line_no, format!("expected {n} values")));
            }
            Ok(vals)
        };
        match head {
            "TITLE" => title = Some(line["TITLE".len()..].trim().trim_matches('"').to_string()),
            "LUT_1D_SIZE" | "LUT_3D_SIZE" => {
                let size: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| syntax(line_no, "bad LUT size".into()))?;
                let kind = if head == "LUT_1D_SIZE" { LutKind::Lut1d } else { LutKind::Lut3d };
                if kind_size.replace((kind, size)).is_some() {
                    return Err(syntax(line_no, "duplicate size line".into()));
                }
            }
            "DOMAIN_MIN" => domain_min.copy_from_slice(&nums(tokens, 3)?),
            "DOMAIN_MAX" => domain_max.copy_from_slice(&nums(tokens, 3)?),
            "LUT_1D_INPUT_RANGE" | "LUT_3D_INPUT_RANGE" => {
                let v = nums(tokens, 2)?;
                domain_min = [v[0]; 3];
                domain_max = [v[1]; 3];
            }
            _ if head.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') => {
                let v = nums(line.split_whitespace(), 3)?;
                if v.iter().any(|x| !(*x >= T::zero() && *x <= T::one())) {
                    return Err(ImagingError::ValueOutOfDomain { line: line_no });
                }
                entries.push([v[0], v[1], v[2]]);
            }
            _ => return Err(syntax(line_no, format!("unknown keyword {head:?}"))),
        }
    }
    let (kind, size) = kind_size.ok_or(ImagingError::MissingSizeLine)?;
    let mut lut = Lut::new(kind, size, entries)?.with_domain(domain_min, domain_max)?;
    lut.title = title;
    Ok(lut)
}

/// Applies a LUT to every pixel of an RGB image.
pub fn apply_lut<T: Scalar>(img: &Image<T>, lut: &Lut<T>) -> Result<Image<T>, ImagingError> {
    if img.channels() != 3 {
        return Err(ImagingError::ChannelMismatch { expected: 3, got: img.channels() });
    }
    let data = img.data().chunks_exact(3).flat_map(|px| lut.apply_rgb([px[0], px[1], px[2]])).collect();
    Ok(Image::from_parts_unchecked(img.width(), img.height(), 3, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Trilinear oracle as an explicit weighted sum over the 8 cell corners.
    fn trilinear_oracle(lut: &Lut<f64>, rgb: [f64; 3]) -> [f64; 3] {
        let n = lut.size();
        let scaled: Vec<f64> = rgb.iter().map(|v| v.clamp(0.0, 1.0) * (n - 1) as f64).collect();
        let base: Vec<usize> = scaled.iter().map(|s| (s.floor() as usize).min(n - 2)).collect();
        let frac: Vec<f64> = scaled.iter().zip(&base).map(|(s, b)| s - *b as f64).collect();
        let mut out = [0.0; 3];
        for corner in 0..8 {
            let d = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let weight: f64 = (0..3).map(|k| if d[k] == 1 { frac[k] } else { 1.0 - frac[k] }).product();
            let e = lut.entries()[(base[0] + d[0]) + n * ((base[1] + d[1]) + n * (base[2] + d[2]))];
            for c in 0..3 {
                out[c] += weight * e[c];
            }
        }
        out
    }

    #[test]
    fn identity_cube_3d() {
        let text = "TITLE \"id\"\nLUT_3D_SIZE 2\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n1 1 1\n";
        let lut: Lut<f64> = parse_cube(text).unwrap();
        assert_eq!(lut.title(), Some("id"));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let rgb = [rng.random(), rng.random(), rng.random()];
            let out = lut.apply_rgb(rgb);
            for c in 0..3 {
                assert!((out[c] - rgb[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn one_d_endpoints() {
        let lut: Lut<f64> = parse_cube("LUT_1D_SIZE 2\n0 0 0\n1 1 1\n").unwrap();
        assert_eq!(lut.apply_rgb([0.25, 0.5, 1.0]), [0.25, 0.5, 1.0]);
        let half: Lut<f64> = parse_cube("LUT_1D_SIZE 2\n0 0 0\n0.5 0.5 0.5\n").unwrap();
        assert_eq!(half.apply_rgb([1.0, 1.0, 1.0]), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn cube_errors() {
        let seven = "LUT_3D_SIZE 2\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n0 0 1\n1 0 1\n0 1 1\n";
        assert_eq!(parse_cube::<f64>(seven), Err(ImagingError::EntryCountMismatch { expected: 8, got: 7 }));
        assert_eq!(parse_cube::<f64>("0 0 0\n1 1 1\n"), Err(ImagingError::MissingSizeLine));
        assert_eq!(parse_cube::<f64>("LUT_1D_SIZE 2\n0 0 0\n1.5 1 1\n"), Err(ImagingError::ValueOutOfDomain { line: 3 }));
        assert!(matches!(parse_cube::<f64>("LUT_1D_SIZE 2\n0 0\n1 1 1\n"), Err(ImagingError::CubeSyntax { line: 2, .. })));
    }

    #[test]
    fn domain_is_honoured() {
        let lut: Lut<f64> = parse_cube("DOMAIN_MIN 0 0 0\nDOMAIN_MAX 2 2 2\nLUT_1D_SIZE 2\n0 0 0\n1 1 1\n").unwrap();
        let out = lut.apply_rgb([1.0, 2.0, 4.0]);
        assert_eq!(out, [0.5, 1.0, 1.0]);
    }

    #[test]
    fn random_3d_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let entries = (0..64).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let lut = Lut::new(LutKind::Lut3d, 4, entries).unwrap();
        let img = Image::<f64>::from_fn(16, 16, 3, |_, _, _| rng.random()).unwrap();
        let out = apply_lut(&img, &lut).unwrap();
        for (px_in, px_out) in img.data().chunks(3).zip(out.data().chunks(3)) {
            let expected = trilinear_oracle(&lut, [px_in[0], px_in[1], px_in[2]]);
            for c in 0..3 {
                assert!((px_out[c] - expected[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cube_text_round_trip() {
        let lut = Lut::<f64>::identity(LutKind::Lut3d, 3).unwrap();
        assert_eq!(parse_cube::<f64>(&lut.to_cube()).unwrap(), lut);
    }

    #[test]
    fn channel_mismatch() {
        let lut = Lut::<f64>::identity(LutKind::Lut1d, 2).unwrap();
        let grey = Image::filled(2, 2, 1, 0.5).unwrap();
        assert_eq!(apply_lut(&grey, &lut), Err(ImagingError::ChannelMismatch { expected: 3, got: 1 }));
    }
}
