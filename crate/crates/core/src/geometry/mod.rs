//! Feature detection, binary descriptors, matching, block-matching tracking
//! and RANSAC model fitting.

mod corners;
mod descriptor;
mod ransac;
mod tracking;
mod transform;

use thiserror::Error;

use crate::Scalar;

pub use corners::{detect_corners, min_eigen_response, Corner, CornerParams};
pub use descriptor::{compute_descriptors, hamming, match_descriptors, Descriptor, DESCRIPTOR_BITS, PATCH_RADIUS};
pub use ransac::{fit_transform_ransac, RansacParams};
pub use tracking::{track_points, Track, TrackParams};
pub use transform::{fit_least_squares, TransformKind, TransformModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{got} matches, {kind} needs at least {needed}")]
    TooFewMatches { kind: TransformKind, needed: usize, got: usize },
    #[error("no non-degenerate minimal sample after {draws} draws")]
    Degenerate { draws: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point<T>) -> T {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn cast<U: Scalar>(self) -> Point<U> {
        Point { x: U::lit(self.x.to_f64_lossy()), y: U::lit(self.y.to_f64_lossy()) }
    }
}

/// A correspondence from image A to image B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMatch<T = f64> {
    pub a: Point<T>,
    pub b: Point<T>,
    /// Hamming distance or SSD, lower is better.
    pub score: T,
}

impl<T: Scalar> PointMatch<T> {
    pub fn new(a: Point<T>, b: Point<T>, score: T) -> Self {
        Self { a, b, score }
    }
}

/// Positions of one tracked point over successive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T = f64> {
    pub point_id: usize,
    /// `(frame_index, position)`, frame indices strictly increasing.
    pub positions: Vec<(usize, Point<T>)>,
}
