//! SVD coil compression.
//!
//! With the data arranged as a `C x M` matrix `A` (one row per coil, every
//! pixel of every frame a column), the left singular vectors of `A` are the
//! eigenvectors of the `C x C` Gram matrix `A Aᴴ` and the squared singular
//! values its eigenvalues. Virtual coil `i` is `u_iᴴ A`.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MultiCoilVideo;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilCompression {
    /// `n_out x C` projection; row `i` is `u_iᴴ`.
    #[serde(skip)]
    pub matrix: Array2<Complex64>,
    /// All `C` singular values, descending.
    pub singular_values: Vec<f64>,
    /// `Σ_{i<n_out} σ_i² / Σ σ_i²`.
    pub retained_energy: f64,
}

impl CoilCompression {
    pub fn n_out(&self) -> usize {
        self.matrix.nrows()
    }

    /// Apply the projection along the leading (coil) axis of `[coil, ...]` data.
    pub fn apply4(&self, data: &Array4<Complex64>) -> Array4<Complex64> {
        let (c, t, h, w) = data.dim();
        let flat = data
            .view()
            .into_shape_with_order((c, t * h * w))
            .expect("contiguous");
        let out = project(&self.matrix, flat);
        out.into_shape_with_order((self.n_out(), t, h, w))
            .expect("shape")
    }

    /// Project coil sensitivity maps `[coil, y, x]`.
    pub fn apply3(&self, maps: &Array3<Complex64>) -> Array3<Complex64> {
        let (c, h, w) = maps.dim();
        let flat = maps
            .view()
            .into_shape_with_order((c, h * w))
            .expect("contiguous");
        project(&self.matrix, flat)
            .into_shape_with_order((self.n_out(), h, w))
            .expect("shape")
    }
}

fn project(m: &Array2<Complex64>, a: ndarray::ArrayView2<Complex64>) -> Array2<Complex64> {
    let (n_out, c) = m.dim();
    let cols = a.ncols();
    let mut out = Array2::<Complex64>::zeros((n_out, cols));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for k in 0..c {
                let coef = m[[i, k]];
                row.iter_mut()
                    .zip(a.row(k))
                    .for_each(|(o, &v)| *o += coef * v);
            }
        });
    out
}

/// Gram matrix `A Aᴴ`, each entry summed sequentially in column order.
fn gram(a: ndarray::ArrayView2<Complex64>) -> DMatrix<Complex64> {
    let c = a.nrows();
    let pairs: Vec<(usize, usize)> = (0..c).flat_map(|i| (i..c).map(move |j| (i, j))).collect();
    let vals: Vec<Complex64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            a.row(i)
                .iter()
                .zip(a.row(j))
                .map(|(x, y)| x * y.conj())
                .sum()
        })
        .collect();
    let mut g = DMatrix::<Complex64>::zeros(c, c);
    for (&(i, j), &v) in pairs.iter().zip(&vals) {
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    g
}

/// Compression matrix for `mc` onto its `n_out` dominant virtual coils.
pub fn coil_compression(mc: &MultiCoilVideo, n_out: usize) -> Result<CoilCompression> {
    let c = mc.len_of(Axis(0));
    if n_out == 0 || n_out > c {
        return Err(Error::InvalidConfig(format!(
            "cannot compress {c} coils to {n_out}"
        )));
    }
    if mc.iter().all(|z| *z == Complex64::default()) {
        return Err(Error::DegenerateInput("coil data is identically zero"));
    }
    let std = mc.as_standard_layout();
    let flat = std
        .view()
        .into_shape_with_order((c, mc.len() / c))
        .expect("contiguous");
    let g = gram(flat);
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = energies.iter().sum();
    let retained: f64 = energies[..n_out].iter().sum::<f64>() / total;
    let matrix = Array2::from_shape_fn((n_out, c), |(r, k)| eig.eigenvectors[(k, order[r])].conj());
    Ok(CoilCompression {
        matrix,
        singular_values: energies.iter().map(|e| e.sqrt()).collect(),
        retained_energy: retained.min(1.0),
    })
}

/// Project `mc` onto its top `n_out` left singular vectors.
pub fn svd_coil_compress(
    mc: &MultiCoilVideo,
    n_out: usize,
) -> Result<(MultiCoilVideo, CoilCompression)> {
    let cc = coil_compression(mc, n_out)?;
    Ok((cc.apply4(mc), cc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::rng::Xoshiro256PlusPlus;
    use crate::kspace::pair::rss_combine;

    fn random_mc(c: usize, seed: u64) -> MultiCoilVideo {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        Array4::from_shape_simple_fn((c, 3, 6, 5), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        })
    }

    fn max_rel(a: &ndarray::Array3<f64>, b: &ndarray::Array3<f64>) -> f64 {
        let scale = b.iter().cloned().fold(0.0, f64::max);
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn full_rank_preserves_rss() {
        let mc = random_mc(6, 1);
        let (out, cc) = svd_coil_compress(&mc, 6).unwrap();
        assert!(max_rel(&rss_combine(&out), &rss_combine(&mc)) < 1e-10);
        assert!((cc.retained_energy - 1.0).abs() < 1e-12);
        assert!(cc.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_one_stack() {
        let base = random_mc(1, 2);
        let factors = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.5, 0.25),
            Complex64::new(0.0, 2.0),
            Complex64::new(0.3, 0.3),
        ];
        let mut mc = Array4::zeros((4, 3, 6, 5));
        for (k, f) in factors.iter().enumerate() {
            mc.index_axis_mut(Axis(0), k)
                .assign(&base.index_axis(Axis(0), 0).mapv(|z| z * f));
        }
        let (out, cc) = svd_coil_compress(&mc, 1).unwrap();
        assert_eq!(out.len_of(Axis(0)), 1);
        assert!(max_rel(&rss_combine(&out), &rss_combine(&mc)) < 1e-10);
        assert!((cc.retained_energy - 1.0).abs() < 1e-10);
    }

    #[test]
    fn energy_nondecreasing() {
        let mc = random_mc(8, 3);
        let fr: Vec<f64> = (1..=8)
            .map(|k| coil_compression(&mc, k).unwrap().retained_energy)
            .collect();
        assert!(fr.windows(2).all(|w| w[1] >= w[0]));
        assert!(fr.iter().all(|&f| f > 0.0 && f <= 1.0));
    }

    #[test]
    fn singular_values_match_direct_svd() {
        let mc = random_mc(4, 4);
        let flat = mc
            .as_standard_layout()
            .into_shape_with_order((4, 90))
            .unwrap();
        let m = DMatrix::from_fn(4, 90, |i, j| flat[[i, j]]);
        let mut direct: Vec<f64> = m
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        direct.sort_by(|a, b| b.total_cmp(a));
        let cc = coil_compression(&mc, 2).unwrap();
        for (a, b) in cc.singular_values.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            coil_compression(&Array4::zeros((3, 1, 2, 2)), 2),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            coil_compression(&random_mc(3, 0), 4),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            coil_compression(&random_mc(3, 0), 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
