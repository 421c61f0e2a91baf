use ndarray::{Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::{gaussian_kernel, separable_filter};
use crate::ScalarVideo;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    /// Gaussian window sigma; the window spans `2·ceil(3σ)+1` pixels (11 at 1.5).
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.data_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.data_range).powi(2)
    }
}

/// Mean SSIM of one frame pair.
pub fn ssim_frame(a: ArrayView2<f64>, b: ArrayView2<f64>, p: &SsimParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.shape().to_vec(),
            actual: b.shape().to_vec(),
        });
    }
    let taps = gaussian_kernel(p.window_sigma);
    let filt = |x: &Array2<f64>| separable_filter(x.view(), &taps);
    let mu_a = separable_filter(a, &taps);
    let mu_b = separable_filter(b, &taps);
    let aa = filt(&(&a * &a));
    let bb = filt(&(&b * &b));
    let ab = filt(&(&a * &b));
    let (c1, c2) = (p.c1(), p.c2());
    let mut total = 0.0;
    Zip::from(&mu_a)
        .and(&mu_b)
        .and(&aa)
        .and(&bb)
        .and(&ab)
        .for_each(|&ma, &mb, &saa, &sbb, &sab| {
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        });
    Ok(total / a.len() as f64)
}

/// Per-frame SSIM averaged over frames.
pub fn ssim(a: &ScalarVideo, b: &ScalarVideo, p: &SsimParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.shape().to_vec(),
            actual: b.shape().to_vec(),
        });
    }
    let per_frame = (0..a.len_of(Axis(0)))
        .into_par_iter()
        .map(|t| ssim_frame(a.index_axis(Axis(0), t), b.index_axis(Axis(0), t), p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}
