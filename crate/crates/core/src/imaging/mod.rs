//! Pre-processing kernels: demosaic, LUT colour transforms, log decoding,
//! box downsampling and colour-space conversions.
//!
//! Images are planar-interleaved (`[r, g, b, r, g, b, ...]`), row-major, with
//! samples normalized to [0, 1].

mod color;
mod demosaic;
mod lut;
mod resample;

use thiserror::Error;

use crate::Scalar;

pub use color::{log_to_linear, rgb_to_hsv, to_grayscale, LogParams};
pub use demosaic::{demosaic_bilinear, BayerPattern};
pub use lut::{apply_lut, parse_cube, Lut, LutKind};
pub use resample::downsample_box;

/// Tolerance on the [0, 1] sample range.
pub const RANGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImagingError {
    #[error("image dimensions must be positive")]
    ZeroSize,
    #[error("unsupported channel count {0}")]
    BadChannels(usize),
    #[error("data length {got} does not match {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("bayer mosaic must have even dimensions of at least 2, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },
    #[error("expected {expected} channels, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("downsample factor {factor} leaves an empty image")]
    FactorTooLarge { factor: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("cube file has no LUT_1D_SIZE or LUT_3D_SIZE line")]
    MissingSizeLine,
    #[error("cube file has {got} entries, expected {expected}")]
    EntryCountMismatch { expected: usize, got: usize },
    #[error("line {line}: value outside the [0, 1] output domain")]
    ValueOutOfDomain { line: usize },
    #[error("line {line}: {message}")]
    CubeSyntax { line: usize, message: String },
}

/// Row-major raster with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T = f64> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroSize);
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::BadChannels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImagingError::DimensionMismatch { expected, got: data.len() });
        }
        let (lo, hi) = (T::lit(-RANGE_EPS), T::lit(1.0 + RANGE_EPS));
        if let Some(index) = data.iter().position(|v| !(*v >= lo && *v <= hi)) {
            return Err(ImagingError::OutOfRange { index, value: data[index].to_f64_lossy() });
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds an image from arbitrary samples, clamping each into [0, 1] (NaN → 0).
    pub fn from_unclamped(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self, ImagingError> {
        let data = data.into_iter().map(clamp_unit).collect();
        Self::new(width, height, channels, data)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Result<Self, ImagingError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// `f(x, y, channel)`; results are clamped into [0, 1].
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self, ImagingError> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::from_unclamped(width, height, channels, data)
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sample with coordinates clamped to the image (replicated edges).
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize, c: usize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.at(x, y, c)
    }

    /// Writes a sample, clamped into [0, 1].
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: T) {
        let idx = (y * self.width + x) * self.channels + c;
        self.data[idx] = clamp_unit(value);
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vec<T> {
        let start = (y * self.width + x) * self.channels;
        self.data[start..start + self.channels].to_vec()
    }

    /// Bilinear sample at a continuous position, `None` outside `[0, w-1] × [0, h-1]`.
    pub fn sample_bilinear(&self, x: T, y: T, c: usize) -> Option<T> {
        let max_x = T::from_usize_lossy(self.width - 1);
        let max_y = T::from_usize_lossy(self.height - 1);
        if !(x >= T::zero() && y >= T::zero() && x <= max_x && y <= max_y) {
            return None;
        }
        let x0 = x.floor().to_usize()?.min(self.width.saturating_sub(2));
        let y0 = y.floor().to_usize()?.min(self.height.saturating_sub(2));
        let fx = x - T::from_usize_lossy(x0);
        let fy = y - T::from_usize_lossy(y0);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let one = T::one();
        let top = self.at(x0, y0, c) * (one - fx) + self.at(x1, y0, c) * fx;
        let bottom = self.at(x0, y1, c) * (one - fx) + self.at(x1, y1, c) * fx;
        Some(top * (one - fy) + bottom * fy)
    }

    /// Grey images are replicated into three channels; RGB images are cloned.
    pub fn to_rgb(&self) -> Image<T> {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|v| [*v, *v, *v]).collect();
        Image { width: self.width, height: self.height, channels: 3, data }
    }

    /// Per-channel mean.
    pub fn channel_means(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.width * self.height);
        (0..self.channels).map(|c| self.data.iter().skip(c).step_by(self.channels).copied().sum::<T>() / n).collect()
    }

    pub fn flip_horizontal(&self) -> Image<T> {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                data.extend_from_slice(&self.pixel(x, y));
            }
        }
        Image { data, ..*self }
    }

    pub fn transpose(&self) -> Image<T> {
        let mut data = Vec::with_capacity(self.data.len());
        for x in 0..self.width {
            for y in 0..self.height {
                data.extend_from_slice(&self.pixel(x, y));
            }
        }
        Image { width: self.height, height: self.width, channels: self.channels, data }
    }

    /// Casts the samples to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Image<T> {
    pub(crate) fn from_parts_unchecked(width: usize, height: usize, channels: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Image { width, height, channels, data }
    }
}

#[inline]
pub(crate) fn clamp_unit<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(T::zero()).min(T::one())
    }
}
