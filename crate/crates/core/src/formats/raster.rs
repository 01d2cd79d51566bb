//! Binary PGM (P5) / PPM (P6) rasters, 8- or 16-bit.

use std::path::Path;

use super::FormatError;
use crate::imaging::Image;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterFile {
    width: usize,
    height: usize,
    channels: usize,
    max_value: u16,
    samples: Vec<u16>,
}

impl RasterFile {
    pub fn new(width: usize, height: usize, channels: usize, max_value: u16, samples: Vec<u16>) -> Result<Self, FormatError> {
        if width == 0 || height == 0 {
            return Err(FormatError::BadHeader("zero dimension".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(FormatError::BadHeader(format!("{channels} channels")));
        }
        if max_value != 255 && max_value != 65535 {
            return Err(FormatError::UnsupportedMaxValue(u32::from(max_value)));
        }
        if samples.len() != width * height * channels {
            return Err(FormatError::TruncatedPayload { expected: width * height * channels, got: samples.len() });
        }
        if samples.iter().any(|s| *s > max_value) {
            return Err(FormatError::BadHeader("sample exceeds max value".into()));
        }
        Ok(Self { width, height, channels, max_value, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn max_value(&self) -> u16 {
        self.max_value
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    /// Samples divided by `max_value`.
    pub fn to_image<T: Scalar>(&self) -> Image<T> {
        let max = T::from_u16(self.max_value).expect("u16 fits");
        let data = self.samples.iter().map(|s| T::from_u16(*s).expect("u16 fits") / max).collect();
        Image::new(self.width, self.height, self.channels, data).expect("dimensions validated")
    }

    /// Quantizes an image (clamped to [0, 1], rounded to nearest).
    pub fn from_image<T: Scalar>(image: &Image<T>, max_value: u16) -> Result<Self, FormatError> {
        let max = f64::from(max_value);
        let samples = image.data().iter().map(|v| (v.to_f64_lossy().clamp(0.0, 1.0) * max).round() as u16).collect();
        Self::new(image.width(), image.height(), image.channels(), max_value, samples)
    }

    pub fn encode(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n{}\n", self.width, self.height, self.max_value).into_bytes();
        if self.max_value == 255 {
            out.extend(self.samples.iter().map(|s| *s as u8));
        } else {
            out.extend(self.samples.iter().flat_map(|s| s.to_be_bytes()));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let channels = match bytes.get(..2) {
            Some(b"P5") => 1,
            Some(b"P6") => 3,
            _ => return Err(FormatError::BadMagic),
        };
        let mut pos = 2;
        let mut header = [0usize; 3];
        for slot in &mut header {
            *slot = next_header_number(bytes, &mut pos)?;
        }
        // exactly one whitespace byte separates the header from the payload
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(FormatError::BadHeader("missing separator before payload".into())),
        }
        let [width, height, max_value] = header;
        let max_value = match max_value {
            255 => 255u16,
            65535 => 65535u16,
            other => return Err(FormatError::UnsupportedMaxValue(u32::try_from(other).unwrap_or(u32::MAX))),
        };
        let count = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| FormatError::BadHeader("dimensions overflow".into()))?;
        let bytes_per = if max_value == 255 { 1 } else { 2 };
        let payload = &bytes[pos..];
        if payload.len() < count * bytes_per {
            return Err(FormatError::TruncatedPayload { expected: count * bytes_per, got: payload.len() });
        }
        let samples = if bytes_per == 1 {
            payload[..count].iter().map(|b| u16::from(*b)).collect()
        } else {
            payload[..count * 2].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        };
        Self::new(width, height, channels, max_value, samples)
    }
}

fn next_header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, FormatError> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while let Some(b) = bytes.get(*pos) {
                    *pos += 1;
                    if *b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(FormatError::BadHeader("truncated header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(FormatError::BadHeader("expected a number".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .expect("ascii digits")
        .parse()
        .map_err(|_| FormatError::BadHeader("number out of range".into()))
}

pub fn read_raster(path: &Path) -> Result<RasterFile, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    RasterFile::decode(&bytes)
}

pub fn write_raster(raster: &RasterFile, path: &Path) -> Result<(), FormatError> {
    std::fs::write(path, raster.encode()).map_err(|e| FormatError::io(path, e))
}

/// Reads a raster and normalizes it to an image.
pub fn read_image<T: Scalar>(path: &Path) -> Result<Image<T>, FormatError> {
    read_raster(path).map(|r| r.to_image())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p6_eight_bit_normalizes() {
        let bytes = b"P6\n2 1\n255\n\xff\x00\x00\x00\x00\xff";
        let r = RasterFile::decode(bytes).unwrap();
        let img: Image<f64> = r.to_image();
        assert_eq!(img.pixel(0, 0), vec![1.0, 0.0, 0.0]);
        assert_eq!(img.pixel(1, 0), vec![0.0, 0.0, 1.0]);
        assert_eq!(r.encode(), bytes.to_vec());
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let bytes = b"P5\n1 1\n65535\n\x80\x00";
        let r = RasterFile::decode(bytes).unwrap();
        assert_eq!(r.samples(), &[0x8000]);
        assert_eq!(r.encode(), bytes.to_vec());
    }

    #[test]
    fn header_comments_are_skipped() {
        let r = RasterFile::decode(b"P5 # comment\n2 # w\n1\n255\n\x01\x02").unwrap();
        assert_eq!(r.samples(), &[1, 2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(RasterFile::decode(b"P3\n1 1\n255\n0 0 0\n"), Err(FormatError::BadMagic));
        assert_eq!(RasterFile::decode(b"P2\n1 1\n255\n0\n"), Err(FormatError::BadMagic));
        assert_eq!(RasterFile::decode(b"P5\n1 1\n1023\n\x00\x00"), Err(FormatError::UnsupportedMaxValue(1023)));
        assert!(matches!(RasterFile::decode(b"P6\n2 2\n255\n\x00\x00"), Err(FormatError::TruncatedPayload { .. })));
        assert!(matches!(RasterFile::decode(b"P5\n2"), Err(FormatError::BadHeader(_))));
    }

    proptest! {
        #[test]
        fn canonical_files_round_trip(w in 1usize..6, h in 1usize..6, rgb in any::<bool>(), wide in any::<bool>(), seed in any::<u64>()) {
            let channels = if rgb { 3 } else { 1 };
            let max = if wide { 65535u16 } else { 255 };
            let mut state = seed;
            let samples = (0..w * h * channels).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as u32 % (u32::from(max) + 1)) as u16
            }).collect();
            let r = RasterFile::new(w, h, channels, max, samples).unwrap();
            let bytes = r.encode();
            let back = RasterFile::decode(&bytes).unwrap();
            prop_assert_eq!(&back, &r);
            let img: Image<f64> = back.to_image();
            prop_assert_eq!(RasterFile::from_image(&img, max).unwrap(), r);
        }
    }
}
