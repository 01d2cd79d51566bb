//! Film dailies metadata toolkit: pre-processing kernels, cinematography
//! annotators, metadata fusion and post-production interchange formats.
//!
//! Image and geometry kernels are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the common choices.

pub mod bridge;
pub mod camera_move;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod imaging;
pub mod metadata;
pub mod profile;
pub mod scalar;
pub mod semantic;
pub mod slate;
pub mod synth;

pub use scalar::Scalar;

pub type Image32 = imaging::Image<f32>;
pub type Image64 = imaging::Image<f64>;
