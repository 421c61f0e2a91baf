//! Complex-valued dynamic images from iteration fields.
//!
//! The normalized field drives two sinusoids, one per channel; each channel is
//! then blurred and unsharp-masked frame by frame.

use std::f64::consts::TAU;

use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::rng::Xoshiro256PlusPlus;
use crate::{ComplexVideo, ScalarVideo};

/// Parameters of the field-to-image mapping. Frequencies are in Hz over a
/// one-second sinusoid span, sigmas in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub f1: f64,
    pub f2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub blur_sigma: f64,
    pub unsharp_sigma: f64,
    pub unsharp_alpha: f64,
}

/// Sampling ranges for [`SynthesisParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRanges {
    pub f1: f64,
    pub f2: (f64, f64),
    pub blur_sigma: (f64, f64),
    pub unsharp_sigma: f64,
    pub unsharp_alpha: f64,
}

impl Default for SynthesisRanges {
    fn default() -> Self {
        Self {
            f1: 0.25,
            f2: (0.25, 1.0),
            blur_sigma: (0.2, 0.4),
            unsharp_sigma: 0.1,
            unsharp_alpha: 50.0,
        }
    }
}

impl SynthesisRanges {
    /// Draws, in order: `f2`, `phi1`, `phi2`, `blur_sigma`.
    pub fn sample(&self, rng: &mut Xoshiro256PlusPlus) -> SynthesisParams {
        let f2 = rng.uniform(self.f2.0, self.f2.1);
        let phi1 = rng.uniform(0.0, TAU);
        let phi2 = rng.uniform(0.0, TAU);
        let blur_sigma = rng.uniform(self.blur_sigma.0, self.blur_sigma.1);
        SynthesisParams {
            f1: self.f1,
            f2,
            phi1,
            phi2,
            blur_sigma,
            unsharp_sigma: self.unsharp_sigma,
            unsharp_alpha: self.unsharp_alpha,
        }
    }
}

/// Affine map of the whole video onto `[0, 1]`; a constant video maps to zeros.
pub fn normalize01(v: &ScalarVideo) -> ScalarVideo {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if !(hi > lo) {
        return ScalarVideo::zeros(v.raw_dim());
    }
    let scale = 1.0 / (hi - lo);
    v.mapv(|x| (x - lo) * scale)
}

/// `re = sin(2π f1 v + φ1)`, `im = sin(2π f2 v + φ2)`.
pub fn map_to_complex(v: &ScalarVideo, p: &SynthesisParams) -> Result<ComplexVideo> {
    if let Some((index, &value)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(0.0..=1.0).contains(*x))
    {
        return Err(Error::OutOfRange { index, value });
    }
    Ok(v.mapv(|x| {
        Complex64::new(
            (TAU * p.f1 * x + p.phi1).sin(),
            (TAU * p.f2 * x + p.phi2).sin(),
        )
    }))
}

/// Normalized Gaussian taps `k[0..=radius]` (center first). Radius is
/// `ceil(3σ)`, at least 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = ((3.0 * sigma).ceil() as usize).max(1);
    let mut k: Vec<f64> = (0..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total = k[0] + 2.0 * k[1..].iter().sum::<f64>();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

/// Half-sample symmetric reflection of `i` into `0..n`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

fn convolve_line(src: &[f64], dst: &mut [f64], taps: &[f64]) {
    let n = src.len();
    let r = taps.len() as isize - 1;
    for (i, out) in dst.iter_mut().enumerate() {
        let i = i as isize;
        let mut acc = taps[0] * src[i as usize];
        for k in 1..=r {
            acc += taps[k as usize] * (src[reflect(i - k, n)] + src[reflect(i + k, n)]);
        }
        *out = acc;
    }
}

/// Separable Gaussian blur with reflect boundaries. `sigma == 0` is the identity.
pub fn gaussian_blur(ch: ArrayView2<f64>, sigma: f64) -> Array2<f64> {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return ch.to_owned();
    }
    separable_filter(ch, &gaussian_kernel(sigma))
}

/// Separable symmetric filter with half-taps `taps` (center first) and reflect
/// boundaries.
pub(crate) fn separable_filter(ch: ArrayView2<f64>, taps: &[f64]) -> Array2<f64> {
    let (h, w) = ch.dim();
    let mut rows = Array2::<f64>::zeros((h, w));
    let mut line = vec![0.0; w.max(h)];
    let mut buf = vec![0.0; w.max(h)];
    for (src, mut dst) in ch.outer_iter().zip(rows.outer_iter_mut()) {
        line[..w]
            .iter_mut()
            .zip(src.iter())
            .for_each(|(a, &b)| *a = b);
        convolve_line(&line[..w], &mut buf[..w], taps);
        dst.iter_mut().zip(&buf[..w]).for_each(|(a, &b)| *a = b);
    }
    let mut out = Array2::<f64>::zeros((h, w));
    for (src, mut dst) in rows.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
        line[..h]
            .iter_mut()
            .zip(src.iter())
            .for_each(|(a, &b)| *a = b);
        convolve_line(&line[..h], &mut buf[..h], taps);
        dst.iter_mut().zip(&buf[..h]).for_each(|(a, &b)| *a = b);
    }
    out
}

/// `ch + alpha * (ch - blur(ch, sigma))`.
pub fn unsharp_mask(ch: ArrayView2<f64>, sigma: f64, alpha: f64) -> Array2<f64> {
    let blurred = gaussian_blur(ch, sigma);
    let mut out = ch.to_owned();
    Zip::from(&mut out)
        .and(&blurred)
        .for_each(|o, &b| *o += alpha * (*o - b));
    out
}

fn filter_channel(mut ch: ArrayViewMut2<f64>, p: &SynthesisParams) {
    let blurred = gaussian_blur(ch.view(), p.blur_sigma);
    let sharp = unsharp_mask(blurred.view(), p.unsharp_sigma, p.unsharp_alpha);
    ch.assign(&sharp);
}

/// normalize → sinusoid mapping → per-frame, per-channel blur and unsharp mask.
pub fn synthesize_complex_video(v: &ScalarVideo, p: &SynthesisParams) -> Result<ComplexVideo> {
    let mapped = map_to_complex(&normalize01(v), p)?;
    let mut out = ComplexVideo::zeros(mapped.raw_dim());
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(mapped.axis_iter(Axis(0)).into_par_iter())
        .for_each(|(mut dst, src)| {
            let mut re = src.mapv(|z| z.re);
            let mut im = src.mapv(|z| z.im);
            filter_channel(re.view_mut(), p);
            filter_channel(im.view_mut(), p);
            Zip::from(&mut dst)
                .and(&re)
                .and(&im)
                .for_each(|d, &r, &i| *d = Complex64::new(r, i));
        });
    Ok(out)
}
