//! Synthetic dynamic-MRI training data from quaternion Julia fractals.
//!
//! The pipeline renders a 2D+time iteration field from a quaternion Julia set,
//! turns it into a complex-valued video, simulates a multi-coil acquisition,
//! compresses the coils, undersamples each frame on golden-angle radial
//! spokes through a NUFFT and writes the aliased input next to a fully
//! sampled root-sum-of-squares target. A temporal-TV compressed-sensing
//! reconstructor and the usual image-quality metrics are included as a
//! baseline.
//!
//! Array conventions: videos are `[t, y, x]`, multi-coil data `[coil, t, y, x]`.
//! All numerics run in `f64`; files store `f32` and interleaved `f32` complex.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod forward;
pub mod fractal;
pub mod io;
pub mod kspace;
pub mod metrics;
pub mod pipeline;
pub mod quaternion;
pub mod recon;
pub mod synthesis;

use ndarray::{Array3, Array4};
use num_complex::Complex64;

pub use error::{Error, Result};
pub use quaternion::Quaternion;

/// Real video `[t, y, x]`.
pub type ScalarVideo = Array3<f64>;
/// Complex video `[t, y, x]`.
pub type ComplexVideo = Array3<Complex64>;
/// Multi-coil complex video `[coil, t, y, x]`, image or k-space domain.
pub type MultiCoilVideo = Array4<Complex64>;
