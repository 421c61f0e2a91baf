//! Golden-angle radial trajectories and ramp density compensation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::nufft::NufftPlan;
use super::KPoint;
use ndarray::Array2;
use num_complex::Complex64;

/// `2 / (1 + sqrt 5)`.
pub const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_8;

/// Angular increment between consecutive spokes, `π · 2/(1+√5)` (≈ 111.246°).
pub const GOLDEN_ANGLE: f64 = PI * GOLDEN_RATIO_CONJUGATE;

/// Raw angle of global spoke `m`, folded into `[0, π)`.
pub fn raw_spoke_angle(m: usize) -> f64 {
    (m as f64 * GOLDEN_ANGLE).rem_euclid(PI)
}

/// Radial sampling pattern, one group of spokes per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Image matrix size the coordinates refer to.
    pub n: usize,
    pub spokes_per_frame: usize,
    pub samples_per_spoke: usize,
    /// Per frame, spoke angles in ascending order.
    pub angles: Vec<Vec<f64>>,
    /// Per frame, `spokes_per_frame * samples_per_spoke` points, spoke-major.
    pub frames: Vec<Vec<KPoint>>,
}

impl Trajectory {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn samples_per_frame(&self) -> usize {
        self.spokes_per_frame * self.samples_per_spoke
    }

    pub fn frame(&self, t: usize) -> &[KPoint] {
        &self.frames[t]
    }

    /// Signed radius of readout sample `r`.
    pub fn readout_radius(&self, r: usize) -> f64 {
        readout_radius(r, self.samples_per_spoke, self.n)
    }
}

fn readout_radius(r: usize, samples: usize, n: usize) -> f64 {
    (r as f64 - samples as f64 / 2.0) * (n as f64 / samples as f64)
}

/// Continuous golden-angle ordering: global spoke `m = frame * spokes + j`
/// has angle `m · π · 2/(1+√5) mod π`; each frame's spokes are then sorted by
/// angle. Readout sample `r` of a spoke sits at radius `(r - R/2) · N/R`.
pub fn golden_angle_trajectory(
    n_frames: usize,
    spokes_per_frame: usize,
    samples_per_spoke: usize,
    n: usize,
) -> Trajectory {
    assert!(spokes_per_frame >= 1, "need at least one spoke per frame");
    assert!(
        samples_per_spoke >= 2 && samples_per_spoke.is_multiple_of(2),
        "samples per spoke must be even and at least 2"
    );
    let radii: Vec<f64> = (0..samples_per_spoke)
        .map(|r| readout_radius(r, samples_per_spoke, n))
        .collect();
    let mut angles = Vec::with_capacity(n_frames);
    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut a: Vec<f64> = (0..spokes_per_frame)
            .map(|j| raw_spoke_angle(f * spokes_per_frame + j))
            .collect();
        a.sort_by(|x, y| x.total_cmp(y));
        let mut pts = Vec::with_capacity(spokes_per_frame * samples_per_spoke);
        for &theta in &a {
            let (s, c) = theta.sin_cos();
            pts.extend(radii.iter().map(|&k| [k * c, k * s]));
        }
        angles.push(a);
        frames.push(pts);
    }
    Trajectory {
        n,
        spokes_per_frame,
        samples_per_spoke,
        angles,
        frames,
    }
}

/// Per-sample density compensation, indexed like [`Trajectory::frames`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcfWeights {
    pub frames: Vec<Vec<f64>>,
    /// Global factor applied to the raw ramp.
    pub scale: f64,
}

impl DcfWeights {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.frames[t]
    }

    /// All-ones weights (plain adjoint).
    pub fn unit(traj: &Trajectory) -> Self {
        Self {
            frames: traj.frames.iter().map(|f| vec![1.0; f.len()]).collect(),
            scale: 1.0,
        }
    }
}

/// Raw ramp `|k|`, with the `k = 0` sample set to half the first nonzero
/// radius, before any global scaling.
pub fn ramp_weights(traj: &Trajectory) -> Vec<Vec<f64>> {
    let center = 0.5 * traj.n as f64 / traj.samples_per_spoke as f64;
    traj.frames
        .iter()
        .map(|f| {
            f.iter()
                .map(|k| {
                    let r = k[0].hypot(k[1]);
                    if r < 1e-12 {
                        center
                    } else {
                        r
                    }
                })
                .collect()
        })
        .collect()
}

/// Ramp density compensation, scaled so that the weighted adjoint of the
/// forward transform of a centered unit impulse peaks at 1 on frame 0.
pub fn density_compensation(traj: &Trajectory) -> DcfWeights {
    let raw = ramp_weights(traj);
    let n = traj.n;
    let plan = NufftPlan::new(n);
    let mut delta = Array2::<Complex64>::zeros((n, n));
    delta[[n / 2, n / 2]] = Complex64::new(1.0, 0.0);
    let samples = plan.forward(&delta, traj.frame(0));
    let psf = plan.adjoint(&samples, traj.frame(0), &raw[0]);
    let scale = 1.0 / psf[[n / 2, n / 2]].re;
    DcfWeights {
        frames: raw
            .into_iter()
            .map(|f| f.into_iter().map(|w| w * scale).collect())
            .collect(),
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_vectors() {
        assert_eq!(raw_spoke_angle(0), 0.0);
        assert!((raw_spoke_angle(1) - 1.941_611_038_725_466).abs() < 1e-12);
        assert!((raw_spoke_angle(1).to_degrees() - 111.246_117_974_981).abs() < 1e-9);
    }

    #[test]
    fn readout_grid() {
        let traj = golden_angle_trajectory(1, 1, 32, 16);
        let r: Vec<f64> = (0..32).map(|i| traj.readout_radius(i)).collect();
        assert_eq!(r[0], -8.0);
        assert_eq!(r[16], 0.0);
        assert_eq!(r[31], 7.5);
        assert!(r.windows(2).all(|p| (p[1] - p[0] - 0.5).abs() < 1e-15));
    }

    #[test]
    fn frame_layout() {
        let traj = golden_angle_trajectory(4, 13, 32, 16);
        assert_eq!(traj.n_frames(), 4);
        for t in 0..4 {
            assert_eq!(traj.frame(t).len(), 13 * 32);
            assert!(traj.angles[t].windows(2).all(|w| w[0] < w[1]));
            for k in traj.frame(t) {
                assert!(k[0].hypot(k[1]) <= 8.0 + 1e-12);
            }
        }
    }

    #[test]
    fn ramp_ratio_and_center() {
        let traj = golden_angle_trajectory(1, 3, 8, 8);
        let raw = ramp_weights(&traj);
        // radii along a spoke: -4, -3, ..., 3; |k| = 1 at r = 3 and 5, |k| = 2 at r = 2 and 6.
        assert!((raw[0][2] / raw[0][3] - 2.0).abs() < 1e-12);
        assert_eq!(raw[0][4], 0.5);
        assert!(raw[0].iter().all(|&w| w > 0.0));
    }

    #[test]
    fn calibrated_psf_peak() {
        let traj = golden_angle_trajectory(3, 13, 32, 16);
        let dcf = density_compensation(&traj);
        let plan = NufftPlan::new(16);
        let mut delta = Array2::<Complex64>::zeros((16, 16));
        delta[[8, 8]] = Complex64::new(1.0, 0.0);
        for t in 0..3 {
            let s = plan.forward(&delta, traj.frame(t));
            let psf = plan.adjoint(&s, traj.frame(t), dcf.frame(t));
            assert!(
                (psf[[8, 8]].re - 1.0).abs() < 0.02,
                "frame {t}: {}",
                psf[[8, 8]]
            );
        }
        assert!(dcf.frames.iter().flatten().all(|&w| w >= 0.0));
    }
}
