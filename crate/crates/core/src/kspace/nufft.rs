//! Gridding NUFFT with a Kaiser-Bessel kernel.
//!
//! Forward model, for an `N x N` image with centered pixel coordinates
//! `n ∈ [-N/2, N/2)`:
//!
//! ```text
//! s(k) = 1/N · Σ_n img[n] · exp(-2πi k·n / N)
//! ```
//!
//! evaluated as deapodize → zero-pad onto a `2N` grid → FFT → interpolate with
//! a width-4 Kaiser-Bessel kernel. The adjoint runs the same steps backwards.
//! At integer `k` the transform coincides with [`crate::fft::fft2c`].

use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

use super::KPoint;
use crate::error::{Error, Result};
use crate::fft::Fft2;

pub const OVERSAMPLING: usize = 2;
pub const KERNEL_WIDTH: usize = 4;

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Shape parameter for a Kaiser-Bessel kernel of `width` grid cells at
/// oversampling `sigma`: `π sqrt((W/σ)² (σ - 1/2)² - 0.8)`.
pub fn kaiser_bessel_beta(width: f64, sigma: f64) -> f64 {
    PI * ((width / sigma).powi(2) * (sigma - 0.5).powi(2) - 0.8).sqrt()
}

/// Immutable transform plan for `N x N` images; shareable across threads.
#[derive(Debug, Clone)]
pub struct NufftPlan {
    n: usize,
    grid: usize,
    beta: f64,
    /// Kernel Fourier transform at each centered image coordinate.
    deapod: Vec<f64>,
    fft: Fft2,
}

/// Precomputed interpolation footprint of one trajectory frame.
#[derive(Debug, Clone)]
pub struct Gridding {
    n: usize,
    /// Per sample: four grid rows, four grid columns.
    rows: Vec<[usize; KERNEL_WIDTH]>,
    cols: Vec<[usize; KERNEL_WIDTH]>,
    wy: Vec<[f64; KERNEL_WIDTH]>,
    wx: Vec<[f64; KERNEL_WIDTH]>,
}

impl Gridding {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl NufftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "image size must be even");
        let grid = OVERSAMPLING * n;
        let beta = kaiser_bessel_beta(KERNEL_WIDTH as f64, OVERSAMPLING as f64);
        let w = KERNEL_WIDTH as f64;
        let deapod = (0..n)
            .map(|i| {
                let nu = (i as f64 - (n / 2) as f64) / grid as f64;
                let a = (beta * beta - (PI * w * nu).powi(2)).sqrt();
                w * a.sinh() / a
            })
            .collect();
        Self {
            n,
            grid,
            beta,
            deapod,
            fft: Fft2::new(grid, grid),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Kernel value at offset `d` grid cells from its center.
    pub fn kernel(&self, d: f64) -> f64 {
        let half = KERNEL_WIDTH as f64 / 2.0;
        if d.abs() > half {
            return 0.0;
        }
        let r = d / half;
        bessel_i0(self.beta * (1.0 - r * r).max(0.0).sqrt())
    }

    fn axis_footprint(&self, k: f64) -> ([usize; KERNEL_WIDTH], [f64; KERNEL_WIDTH]) {
        let u = k * OVERSAMPLING as f64;
        let start = (u - KERNEL_WIDTH as f64 / 2.0).ceil() as i64;
        let g = self.grid as i64;
        let mut idx = [0usize; KERNEL_WIDTH];
        let mut wts = [0f64; KERNEL_WIDTH];
        for j in 0..KERNEL_WIDTH {
            let m = start + j as i64;
            idx[j] = m.rem_euclid(g) as usize;
            wts[j] = self.kernel(u - m as f64);
        }
        (idx, wts)
    }

    pub fn gridding(&self, coords: &[KPoint]) -> Gridding {
        let mut g = Gridding {
            n: self.n,
            rows: Vec::with_capacity(coords.len()),
            cols: Vec::with_capacity(coords.len()),
            wy: Vec::with_capacity(coords.len()),
            wx: Vec::with_capacity(coords.len()),
        };
        for &[kx, ky] in coords {
            let (cols, wx) = self.axis_footprint(kx);
            let (rows, wy) = self.axis_footprint(ky);
            g.rows.push(rows);
            g.cols.push(cols);
            g.wy.push(wy);
            g.wx.push(wx);
        }
        g
    }

    fn check(&self, img_dim: (usize, usize)) -> Result<()> {
        if img_dim != (self.n, self.n) {
            return Err(Error::PlanMismatch {
                plan: self.n,
                actual: img_dim.0.max(img_dim.1),
            });
        }
        Ok(())
    }

    /// Image-to-samples transform.
    pub fn forward(&self, img: &Array2<Complex64>, coords: &[KPoint]) -> Vec<Complex64> {
        self.try_forward(img, &self.gridding(coords))
            .expect("image size must match the plan")
    }

    /// Weighted samples-to-image adjoint: `Aᴴ (w ⊙ samples)`.
    pub fn adjoint(
        &self,
        samples: &[Complex64],
        coords: &[KPoint],
        weights: &[f64],
    ) -> Array2<Complex64> {
        self.try_adjoint(samples, &self.gridding(coords), Some(weights))
            .expect("sample count must match the trajectory")
    }

    pub fn try_forward(
        &self,
        img: &Array2<Complex64>,
        gridding: &Gridding,
    ) -> Result<Vec<Complex64>> {
        self.check(img.dim())?;
        if gridding.n != self.n {
            return Err(Error::PlanMismatch {
                plan: self.n,
                actual: gridding.n,
            });
        }
        let (n, g) = (self.n, self.grid);
        let half = n / 2;
        let mut buf = Array2::<Complex64>::zeros((g, g));
        for ((y, x), &v) in img.indexed_iter() {
            let gy = (y + g - half) % g;
            let gx = (x + g - half) % g;
            buf[[gy, gx]] = v / (self.deapod[y] * self.deapod[x]);
        }
        self.fft.process(buf.view_mut(), false);
        let scale = 1.0 / n as f64;
        let mut out = Vec::with_capacity(gridding.len());
        for s in 0..gridding.len() {
            let (rows, cols, wy, wx) = (
                &gridding.rows[s],
                &gridding.cols[s],
                &gridding.wy[s],
                &gridding.wx[s],
            );
            let mut acc = Complex64::default();
            for a in 0..KERNEL_WIDTH {
                let mut line = Complex64::default();
                for b in 0..KERNEL_WIDTH {
                    line += buf[[rows[a], cols[b]]] * wx[b];
                }
                acc += line * wy[a];
            }
            out.push(acc * scale);
        }
        Ok(out)
    }

    /// Adjoint of [`Self::try_forward`] applied to `weights ⊙ samples`
    /// (unit weights when `None`).
    pub fn try_adjoint(
        &self,
        samples: &[Complex64],
        gridding: &Gridding,
        weights: Option<&[f64]>,
    ) -> Result<Array2<Complex64>> {
        if samples.len() != gridding.len() || weights.is_some_and(|w| w.len() != samples.len()) {
            return Err(Error::ShapeMismatch {
                expected: vec![gridding.len()],
                actual: vec![samples.len()],
            });
        }
        if gridding.n != self.n {
            return Err(Error::PlanMismatch {
                plan: self.n,
                actual: gridding.n,
            });
        }
        let (n, g) = (self.n, self.grid);
        let half = n / 2;
        let mut buf = Array2::<Complex64>::zeros((g, g));
        for (s, &y) in samples.iter().enumerate() {
            let y = match weights {
                Some(w) => y * w[s],
                None => y,
            };
            let (rows, cols, wy, wx) = (
                &gridding.rows[s],
                &gridding.cols[s],
                &gridding.wy[s],
                &gridding.wx[s],
            );
            for a in 0..KERNEL_WIDTH {
                let ya = y * wy[a];
                for b in 0..KERNEL_WIDTH {
                    buf[[rows[a], cols[b]]] += ya * wx[b];
                }
            }
        }
        self.fft.process(buf.view_mut(), true);
        let scale = 1.0 / n as f64;
        Ok(Array2::from_shape_fn((n, n), |(y, x)| {
            let gy = (y + g - half) % g;
            let gx = (x + g - half) % g;
            buf[[gy, gx]] * (scale / (self.deapod[y] * self.deapod[x]))
        }))
    }
}
