//! Direct-summation Fourier transforms on arbitrary k-space points.
//!
//! These evaluate exactly what [`super::NufftPlan`] approximates and exist to
//! check it. Cost is `O(pixels × samples)`, so images are capped at 64x64.

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::TAU;

use super::KPoint;
use crate::error::{Error, Result};

pub const ORACLE_MAX_SIZE: usize = 64;

/// Transform direction for [`dft_oracle`].
pub enum OracleInput<'a> {
    /// Image to samples.
    Forward(&'a Array2<Complex64>),
    /// Weighted samples to an `n x n` image.
    Adjoint {
        samples: &'a [Complex64],
        weights: &'a [f64],
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutput {
    Samples(Vec<Complex64>),
    Image(Array2<Complex64>),
}

pub fn dft_oracle(input: OracleInput<'_>, coords: &[KPoint]) -> Result<OracleOutput> {
    match input {
        OracleInput::Forward(img) => dft_forward(img, coords).map(OracleOutput::Samples),
        OracleInput::Adjoint {
            samples,
            weights,
            n,
        } => dft_adjoint(samples, coords, weights, n).map(OracleOutput::Image),
    }
}

fn guard(h: usize, w: usize) -> Result<()> {
    if h > ORACLE_MAX_SIZE || w > ORACLE_MAX_SIZE {
        return Err(Error::SizeGuard {
            max: ORACLE_MAX_SIZE,
            h,
            w,
        });
    }
    Ok(())
}

/// `s(k) = 1/sqrt(HW) Σ img[y,x] exp(-2πi (kx (x - W/2)/W + ky (y - H/2)/H))`.
pub fn dft_forward(img: &Array2<Complex64>, coords: &[KPoint]) -> Result<Vec<Complex64>> {
    let (h, w) = img.dim();
    guard(h, w)?;
    let scale = 1.0 / ((h * w) as f64).sqrt();
    let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
    Ok(coords
        .iter()
        .map(|&[kx, ky]| {
            let mut acc = Complex64::default();
            for ((y, x), &v) in img.indexed_iter() {
                let phase =
                    -TAU * (kx * (x as f64 - cw) / w as f64 + ky * (y as f64 - ch) / h as f64);
                acc += v * Complex64::from_polar(1.0, phase);
            }
            acc * scale
        })
        .collect())
}

/// Exact adjoint of [`dft_forward`] applied to `weights ⊙ samples`.
pub fn dft_adjoint(
    samples: &[Complex64],
    coords: &[KPoint],
    weights: &[f64],
    n: usize,
) -> Result<Array2<Complex64>> {
    guard(n, n)?;
    if samples.len() != coords.len() || weights.len() != coords.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![coords.len()],
            actual: vec![samples.len(), weights.len()],
        });
    }
    let scale = 1.0 / n as f64;
    let c = (n / 2) as f64;
    Ok(Array2::from_shape_fn((n, n), |(y, x)| {
        let mut acc = Complex64::default();
        for ((&[kx, ky], &s), &wt) in coords.iter().zip(samples).zip(weights) {
            let phase = TAU * (kx * (x as f64 - c) + ky * (y as f64 - c)) / n as f64;
            acc += s * wt * Complex64::from_polar(1.0, phase);
        }
        acc * scale
    }))
}
