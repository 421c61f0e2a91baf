//! Centered, orthonormal 2D FFT.
//!
//! Index `n` of an axis of length `N` stands for the signed coordinate
//! `n - N/2` (integer division) in both domains, so DC sits at the array
//! center. With unitary scaling `1/sqrt(HW)` the transform preserves the L2 norm.

use std::sync::Arc;

use ndarray::{Array2, ArrayViewMut2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Unnormalized 2D FFT plan for one `(h, w)` shape.
#[derive(Clone)]
pub struct Fft2 {
    h: usize,
    w: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("h", &self.h)
            .field("w", &self.w)
            .finish()
    }
}

impl Fft2 {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            h,
            w,
            rows_fwd: planner.plan_fft(w, FftDirection::Forward),
            rows_inv: planner.plan_fft(w, FftDirection::Inverse),
            cols_fwd: planner.plan_fft(h, FftDirection::Forward),
            cols_inv: planner.plan_fft(h, FftDirection::Inverse),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// In-place unnormalized transform, `exp(-2πi…)` when `inverse` is false.
    pub fn process(&self, mut data: ArrayViewMut2<Complex64>, inverse: bool) {
        assert_eq!(data.dim(), (self.h, self.w), "FFT plan shape mismatch");
        let (rows, cols) = if inverse {
            (&self.rows_inv, &self.cols_inv)
        } else {
            (&self.rows_fwd, &self.cols_fwd)
        };
        let mut scratch = vec![
            Complex64::default();
            rows.get_inplace_scratch_len()
                .max(cols.get_inplace_scratch_len())
        ];
        let mut line = vec![Complex64::default(); self.w.max(self.h)];
        for mut row in data.axis_iter_mut(Axis(0)) {
            match row.as_slice_mut() {
                Some(s) => rows.process_with_scratch(s, &mut scratch),
                None => {
                    let buf = &mut line[..self.w];
                    buf.iter_mut().zip(row.iter()).for_each(|(b, &v)| *b = v);
                    rows.process_with_scratch(buf, &mut scratch);
                    row.iter_mut().zip(buf.iter()).for_each(|(v, &b)| *v = b);
                }
            }
        }
        for mut col in data.axis_iter_mut(Axis(1)) {
            let buf = &mut line[..self.h];
            buf.iter_mut().zip(col.iter()).for_each(|(b, &v)| *b = v);
            cols.process_with_scratch(buf, &mut scratch);
            col.iter_mut().zip(buf.iter()).for_each(|(v, &b)| *v = b);
        }
    }

    /// Centered orthonormal forward transform.
    pub fn fft2c(&self, img: &Array2<Complex64>) -> Array2<Complex64> {
        self.centered(img, false)
    }

    /// Centered orthonormal inverse transform.
    pub fn ifft2c(&self, ksp: &Array2<Complex64>) -> Array2<Complex64> {
        self.centered(ksp, true)
    }

    fn centered(&self, src: &Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
        let mut buf = ifftshift(src);
        self.process(buf.view_mut(), inverse);
        let scale = 1.0 / ((self.h * self.w) as f64).sqrt();
        buf.mapv_inplace(|z| z * scale);
        fftshift(&buf)
    }
}

/// Move index `n/2` of each axis to index 0.
pub fn ifftshift(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = a.dim();
    let (sh, sw) = (h / 2, w / 2);
    Array2::from_shape_fn((h, w), |(i, j)| a[[(i + sh) % h, (j + sw) % w]])
}

/// Move index 0 of each axis to index `n/2`.
pub fn fftshift(a: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = a.dim();
    let (sh, sw) = (h / 2, w / 2);
    Array2::from_shape_fn((h, w), |(i, j)| a[[(i + h - sh) % h, (j + w - sw) % w]])
}

/// One-shot centered forward transform.
pub fn fft2c(img: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = img.dim();
    Fft2::new(h, w).fft2c(img)
}

/// One-shot centered inverse transform.
pub fn ifft2c(ksp: &Array2<Complex64>) -> Array2<Complex64> {
    let (h, w) = ksp.dim();
    Fft2::new(h, w).ifft2c(ksp)
}
