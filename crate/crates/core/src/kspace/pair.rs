//! Coil combination and paired-example assembly.

use ndarray::{Array3, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use super::nufft::NufftPlan;
use super::trajectory::{DcfWeights, Trajectory};
use crate::error::{Error, Result};
use crate::forward::from_cartesian_kspace;
use crate::{MultiCoilVideo, ScalarVideo};

/// Root-sum-of-squares over the coil axis.
pub fn rss_combine(mc: &MultiCoilVideo) -> ScalarVideo {
    let (_, t, h, w) = mc.dim();
    let mut acc = Array3::<f64>::zeros((t, h, w));
    for coil in mc.outer_iter() {
        Zip::from(&mut acc)
            .and(&coil)
            .for_each(|a, z| *a += z.norm_sqr());
    }
    acc.mapv_inplace(f64::sqrt);
    acc
}

/// Radially sampled multi-coil data `[coil, frame, sample]`.
pub type RadialKspace = Array3<Complex64>;

/// One undersampled training pair.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    /// Aliased multi-coil images, scaled so their RSS peaks at 1.
    pub input: MultiCoilVideo,
    /// Fully sampled RSS magnitude, scaled to peak at 1.
    pub target: ScalarVideo,
    /// Radial samples, multiplied by `input_scale`.
    pub radial: RadialKspace,
    pub input_scale: f64,
    pub target_scale: f64,
}

fn peak(v: &ScalarVideo) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Radial samples of every `(coil, frame)` image.
pub fn sample_radial(
    coil_images: &MultiCoilVideo,
    traj: &Trajectory,
    plan: &NufftPlan,
) -> Result<RadialKspace> {
    let (c, t, h, w) = coil_images.dim();
    if t != traj.n_frames() || (h, w) != (plan.size(), plan.size()) {
        return Err(Error::ShapeMismatch {
            expected: vec![c, traj.n_frames(), plan.size(), plan.size()],
            actual: vec![c, t, h, w],
        });
    }
    let grids: Vec<_> = traj.frames.iter().map(|f| plan.gridding(f)).collect();
    let s = traj.samples_per_frame();
    let mut out = RadialKspace::zeros((c, t, s));
    out.outer_iter_mut()
        .into_par_iter()
        .zip(coil_images.outer_iter().into_par_iter())
        .try_for_each(|(mut dst, src)| -> Result<()> {
            for (f, (mut row, img)) in dst.outer_iter_mut().zip(src.outer_iter()).enumerate() {
                let samples = plan.try_forward(&img.to_owned(), &grids[f])?;
                row.iter_mut().zip(samples).for_each(|(o, v)| *o = v);
            }
            Ok(())
        })?;
    Ok(out)
}

/// DCF-weighted adjoint of every `(coil, frame)` sample set.
pub fn adjoint_radial(
    radial: &RadialKspace,
    traj: &Trajectory,
    dcf: &DcfWeights,
    plan: &NufftPlan,
) -> Result<MultiCoilVideo> {
    let (c, t, s) = radial.dim();
    if t != traj.n_frames() || s != traj.samples_per_frame() {
        return Err(Error::ShapeMismatch {
            expected: vec![c, traj.n_frames(), traj.samples_per_frame()],
            actual: vec![c, t, s],
        });
    }
    let n = plan.size();
    let grids: Vec<_> = traj.frames.iter().map(|f| plan.gridding(f)).collect();
    let mut out = MultiCoilVideo::zeros((c, t, n, n));
    out.outer_iter_mut()
        .into_par_iter()
        .zip(radial.outer_iter().into_par_iter())
        .try_for_each(|(mut dst, src)| -> Result<()> {
            for (f, (mut img, row)) in dst.outer_iter_mut().zip(src.outer_iter()).enumerate() {
                let samples: Vec<Complex64> = row.iter().copied().collect();
                img.assign(&plan.try_adjoint(&samples, &grids[f], Some(dcf.frame(f)))?);
            }
            Ok(())
        })?;
    Ok(out)
}

/// Build `(aliased input, RSS target)` from fully sampled, already
/// compressed Cartesian k-space.
///
/// The Cartesian data are resampled onto the radial trajectory by a forward
/// NUFFT of the coil images, then brought back with the DCF-weighted adjoint.
/// Input and target are scaled independently to a peak of 1.
pub fn make_training_pair(
    kspace: &MultiCoilVideo,
    traj: &Trajectory,
    dcf: &DcfWeights,
    plan: &NufftPlan,
) -> Result<TrainingPair> {
    let coil_images = from_cartesian_kspace(kspace);
    let rss = rss_combine(&coil_images);
    let target_peak = peak(&rss);
    let target_scale = if target_peak > 0.0 {
        1.0 / target_peak
    } else {
        1.0
    };
    // Dividing keeps the peak at exactly 1.
    let target = if target_peak > 0.0 {
        rss.mapv(|x| x / target_peak)
    } else {
        rss
    };

    let mut radial = sample_radial(&coil_images, traj, plan)?;
    drop(coil_images);
    let mut input = adjoint_radial(&radial, traj, dcf, plan)?;
    let input_peak = peak(&rss_combine(&input));
    let mut input_scale = 1.0;
    if input_peak > 0.0 {
        let mut divisor = input_peak;
        // The RSS is recomputed after scaling, so rounding can leave the
        // peak an ulp away from 1; a few corrective passes pin it.
        for _ in 0..8 {
            input.mapv_inplace(|z| z / divisor);
            radial.mapv_inplace(|z| z / divisor);
            input_scale /= divisor;
            divisor = peak(&rss_combine(&input));
            if divisor == 1.0 {
                break;
            }
        }
    }
    Ok(TrainingPair {
        input,
        target,
        radial,
        input_scale,
        target_scale,
    })
}
