//! Simulated multi-coil acquisition: body mask, smooth background phase,
//! Gaussian coil sensitivities, additive complex noise and the Cartesian FFT.

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, Array4, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::io::rng::{splitmix64, Xoshiro256PlusPlus};
use crate::{ComplexVideo, MultiCoilVideo};

/// Sampling ranges for the acquisition simulation. Lengths are fractions of
/// the image extent unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardRanges {
    /// Ellipse semi-axes as fractions of the half-extent.
    pub mask_semi_axis: (f64, f64),
    pub mask_offset: (f64, f64),
    /// Distance of coil centers from the image center.
    pub coil_radius: (f64, f64),
    pub coil_sigma: (f64, f64),
    pub coil_intensity: (f64, f64),
    /// Per-component noise std, relative to the unit image scale.
    pub noise_sigma: (f64, f64),
}

impl Default for ForwardRanges {
    fn default() -> Self {
        Self {
            mask_semi_axis: (0.55, 0.95),
            mask_offset: (-0.1, 0.1),
            coil_radius: (0.4, 0.6),
            coil_sigma: (0.15, 0.5),
            coil_intensity: (0.5, 1.0),
            noise_sigma: (0.002, 0.02),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    /// Semi-axis along x before rotation, as a fraction of `w/2`.
    pub semi_x: f64,
    /// Semi-axis along y before rotation, as a fraction of `h/2`.
    pub semi_y: f64,
    pub rotation: f64,
    /// Center offset as fractions of `(w, h)`.
    pub offset: (f64, f64),
}

impl EllipseParams {
    pub fn sample(ranges: &ForwardRanges, rng: &mut Xoshiro256PlusPlus) -> Self {
        let (lo, hi) = ranges.mask_semi_axis;
        let (olo, ohi) = ranges.mask_offset;
        Self {
            semi_x: rng.uniform(lo, hi),
            semi_y: rng.uniform(lo, hi),
            rotation: rng.uniform(0.0, PI),
            offset: (rng.uniform(olo, ohi), rng.uniform(olo, ohi)),
        }
    }
}

/// Binary elliptical support, `[y, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyMask {
    pub data: Array2<f64>,
    pub params: EllipseParams,
}

impl BodyMask {
    pub fn from_params(h: usize, w: usize, p: EllipseParams) -> Self {
        let cx = (w as f64 - 1.0) / 2.0 + p.offset.0 * w as f64;
        let cy = (h as f64 - 1.0) / 2.0 + p.offset.1 * h as f64;
        let a = p.semi_x * w as f64 / 2.0;
        let b = p.semi_y * h as f64 / 2.0;
        let (s, c) = p.rotation.sin_cos();
        let data = Array2::from_shape_fn((h, w), |(y, x)| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let u = (dx * c + dy * s) / a;
            let v = (-dx * s + dy * c) / b;
            if u * u + v * v <= 1.0 {
                1.0
            } else {
                0.0
            }
        });
        Self { data, params: p }
    }
}

pub fn make_body_mask(
    h: usize,
    w: usize,
    ranges: &ForwardRanges,
    rng: &mut Xoshiro256PlusPlus,
) -> BodyMask {
    BodyMask::from_params(h, w, EllipseParams::sample(ranges, rng))
}

pub const PHASE_GRID: usize = 6;

/// Smooth background phase in radians, `[y, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub data: Array2<f64>,
    pub control: Array2<f64>,
}

impl PhaseMap {
    /// Bilinear upsampling of `control`; its corner nodes land on the image
    /// corners and the rest are spaced uniformly in between.
    pub fn from_control(h: usize, w: usize, control: Array2<f64>) -> Self {
        let (gh, gw) = control.dim();
        let coord = |i: usize, n: usize, g: usize| -> (usize, f64) {
            if n == 1 || g == 1 {
                return (0, 0.0);
            }
            let u = i as f64 * (g - 1) as f64 / (n - 1) as f64;
            let j = (u.floor() as usize).min(g - 2);
            (j, u - j as f64)
        };
        let data = Array2::from_shape_fn((h, w), |(y, x)| {
            let (j, fy) = coord(y, h, gh);
            let (i, fx) = coord(x, w, gw);
            let (j1, i1) = ((j + 1).min(gh - 1), (i + 1).min(gw - 1));
            let top = control[[j, i]] * (1.0 - fx) + control[[j, i1]] * fx;
            let bot = control[[j1, i]] * (1.0 - fx) + control[[j1, i1]] * fx;
            top * (1.0 - fy) + bot * fy
        });
        Self { data, control }
    }
}

pub fn make_background_phase(h: usize, w: usize, rng: &mut Xoshiro256PlusPlus) -> PhaseMap {
    let control = Array2::from_shape_simple_fn((PHASE_GRID, PHASE_GRID), || rng.uniform(-PI, PI));
    PhaseMap::from_control(h, w, control)
}

/// One Gaussian receive coil. Positions and widths are in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoilParams {
    pub center: (f64, f64),
    pub sigma: (f64, f64),
    pub phase: f64,
    pub intensity: f64,
}

impl CoilParams {
    pub fn sample(
        h: usize,
        w: usize,
        ranges: &ForwardRanges,
        rng: &mut Xoshiro256PlusPlus,
    ) -> Self {
        let angle = rng.uniform(0.0, TAU);
        let radius = rng.uniform(ranges.coil_radius.0, ranges.coil_radius.1);
        let (s, c) = angle.sin_cos();
        let cx = (w as f64 - 1.0) / 2.0 + radius * w as f64 * c;
        let cy = (h as f64 - 1.0) / 2.0 + radius * h as f64 * s;
        let sx = rng.uniform(ranges.coil_sigma.0, ranges.coil_sigma.1) * w as f64;
        let sy = rng.uniform(ranges.coil_sigma.0, ranges.coil_sigma.1) * h as f64;
        let intensity = rng.uniform(ranges.coil_intensity.0, ranges.coil_intensity.1);
        let phase = rng.uniform(0.0, TAU);
        Self {
            center: (cx, cy),
            sigma: (sx, sy),
            phase,
            intensity,
        }
    }

    /// Complex sensitivity at pixel coordinates `(x, y)`.
    pub fn sensitivity(&self, x: f64, y: f64) -> Complex64 {
        let dx = (x - self.center.0) / self.sigma.0;
        let dy = (y - self.center.1) / self.sigma.1;
        let mag = self.intensity * (-0.5 * (dx * dx + dy * dy)).exp();
        Complex64::from_polar(mag, self.phase)
    }
}

/// Coil sensitivities `[coil, y, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSet {
    pub maps: ndarray::Array3<Complex64>,
    /// Empty when the maps did not come from the Gaussian model.
    pub params: Vec<CoilParams>,
}

impl CoilSet {
    pub fn from_params(h: usize, w: usize, params: Vec<CoilParams>) -> Self {
        let mut maps = ndarray::Array3::zeros((params.len(), h, w));
        for (mut map, p) in maps.outer_iter_mut().zip(&params) {
            map.indexed_iter_mut()
                .for_each(|((y, x), v)| *v = p.sensitivity(x as f64, y as f64));
        }
        Self { maps, params }
    }

    pub fn from_maps(maps: ndarray::Array3<Complex64>) -> Self {
        Self {
            maps,
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn make_coil_maps(
    h: usize,
    w: usize,
    ncoils: usize,
    ranges: &ForwardRanges,
    rng: &mut Xoshiro256PlusPlus,
) -> CoilSet {
    assert!(ncoils >= 1, "need at least one coil");
    let params = (0..ncoils)
        .map(|_| CoilParams::sample(h, w, ranges, rng))
        .collect();
    CoilSet::from_params(h, w, params)
}

/// Multi-coil image data
/// `out[c, t] = coils[c] * (v[t] * mask * exp(i phase)) + noise`.
///
/// Noise is i.i.d. complex Gaussian with `noise_sigma` per real component.
/// One `u64` is drawn from `rng`; every `(coil, frame)` pair then gets its own
/// substream derived from it, so the result does not depend on scheduling.
pub fn apply_forward_model(
    v: &ComplexVideo,
    mask: &BodyMask,
    phase: &PhaseMap,
    coils: &CoilSet,
    noise_sigma: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<MultiCoilVideo> {
    let (t, h, w) = v.dim();
    for actual in [mask.data.dim(), phase.data.dim()] {
        if actual != (h, w) {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w],
                actual: vec![actual.0, actual.1],
            });
        }
    }
    let (nc, ch, cw) = coils.maps.dim();
    if (ch, cw) != (h, w) {
        return Err(Error::ShapeMismatch {
            expected: vec![nc, h, w],
            actual: vec![nc, ch, cw],
        });
    }
    let base = rng.next_u64();
    let carrier = Zip::from(&mask.data)
        .and(&phase.data)
        .map_collect(|&m, &p| Complex64::from_polar(m, p));
    let mut out = Array4::<Complex64>::zeros((nc, t, h, w));
    out.outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut coil_out)| {
            let map = coils.maps.index_axis(Axis(0), c);
            for (ti, mut frame) in coil_out.outer_iter_mut().enumerate() {
                Zip::from(&mut frame)
                    .and(&v.index_axis(Axis(0), ti))
                    .and(&carrier)
                    .and(&map)
                    .for_each(|o, &x, &car, &s| *o = s * (x * car));
                if noise_sigma > 0.0 {
                    let mut nrng = noise_stream(base, c, ti, t);
                    frame.iter_mut().for_each(|o| {
                        let (a, b) = nrng.normal_pair();
                        *o += Complex64::new(a * noise_sigma, b * noise_sigma);
                    });
                }
            }
        });
    Ok(out)
}

fn noise_stream(base: u64, coil: usize, frame: usize, frames: usize) -> Xoshiro256PlusPlus {
    let key = (coil * frames + frame) as u64;
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(base ^ key.wrapping_mul(0xA076_1D64_78BD_642F)))
}

/// Centered orthonormal FFT of every `(coil, frame)` image.
pub fn to_cartesian_kspace(mc: &MultiCoilVideo) -> MultiCoilVideo {
    map_frames(mc, |fft, img| fft.fft2c(img))
}

/// Inverse of [`to_cartesian_kspace`].
pub fn from_cartesian_kspace(ksp: &MultiCoilVideo) -> MultiCoilVideo {
    map_frames(ksp, |fft, k| fft.ifft2c(k))
}

fn map_frames(
    src: &MultiCoilVideo,
    f: impl Fn(&Fft2, &Array2<Complex64>) -> Array2<Complex64> + Sync,
) -> MultiCoilVideo {
    let (nc, t, h, w) = src.dim();
    let fft = Fft2::new(h, w);
    let mut out = Array4::<Complex64>::zeros((nc, t, h, w));
    out.outer_iter_mut()
        .into_par_iter()
        .zip(src.outer_iter().into_par_iter())
        .for_each(|(mut dst, s)| {
            for (mut df, sf) in dst.outer_iter_mut().zip(s.outer_iter()) {
                df.assign(&f(&fft, &sf.to_owned()));
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;

    fn rand_video(t: usize, h: usize, w: usize, seed: u64) -> ComplexVideo {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        Array3::from_shape_simple_fn((t, h, w), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        })
    }

    fn unit_setup(h: usize, w: usize) -> (BodyMask, PhaseMap, CoilSet) {
        let mask = BodyMask {
            data: Array2::ones((h, w)),
            params: EllipseParams {
                semi_x: 1.0,
                semi_y: 1.0,
                rotation: 0.0,
                offset: (0.0, 0.0),
            },
        };
        let phase = PhaseMap::from_control(h, w, Array2::zeros((6, 6)));
        let coils = CoilSet::from_maps(Array3::from_elem((1, h, w), Complex64::new(1.0, 0.0)));
        (mask, phase, coils)
    }

    #[test]
    fn centered_mask() {
        let p = EllipseParams {
            semi_x: 0.95,
            semi_y: 0.95,
            rotation: 0.0,
            offset: (0.0, 0.0),
        };
        let m = BodyMask::from_params(32, 32, p);
        assert_eq!(m.data[[16, 16]], 1.0);
        assert_eq!(m.data[[15, 15]], 1.0);
    }

    #[test]
    fn circle_rotation_invariance() {
        let mut p = EllipseParams {
            semi_x: 0.7,
            semi_y: 0.7,
            rotation: 0.4,
            offset: (0.05, -0.03),
        };
        let a = BodyMask::from_params(40, 40, p);
        p.rotation += PI;
        let b = BodyMask::from_params(40, 40, p);
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn mask_idempotent() {
        let m = make_body_mask(
            24,
            24,
            &ForwardRanges::default(),
            &mut Xoshiro256PlusPlus::seed_from_u64(4),
        );
        let once = &m.data * &m.data;
        assert_eq!(once, m.data);
        assert!(m.data.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn phase_constant_and_control_points() {
        let c = PhaseMap::from_control(31, 31, Array2::from_elem((6, 6), 0.3));
        assert!(c.data.iter().all(|&x| (x - 0.3).abs() < 1e-15));
        // 31 pixels, 6 nodes: node j sits at pixel 6j.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        let control = Array2::from_shape_simple_fn((6, 6), || rng.uniform(-PI, PI));
        let m = PhaseMap::from_control(31, 31, control.clone());
        for j in 0..6 {
            for i in 0..6 {
                assert_eq!(m.data[[6 * j, 6 * i]], control[[j, i]]);
            }
        }
    }

    #[test]
    fn phase_within_control_range() {
        let m = make_background_phase(50, 37, &mut Xoshiro256PlusPlus::seed_from_u64(2));
        let lo = m.control.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = m.control.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(m.data.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
        assert!(lo >= -PI && hi < PI);
    }

    #[test]
    fn coil_peak_and_bound() {
        let set = make_coil_maps(
            48,
            48,
            8,
            &ForwardRanges::default(),
            &mut Xoshiro256PlusPlus::seed_from_u64(6),
        );
        for (map, p) in set.maps.outer_iter().zip(&set.params) {
            let peak = p.sensitivity(p.center.0, p.center.1);
            assert!((peak.norm() - p.intensity).abs() < 1e-15);
            assert!(map.iter().all(|z| z.norm() <= p.intensity + 1e-15));
            assert!((0.5..1.0).contains(&p.intensity));
        }
    }

    #[test]
    fn identity_configuration() {
        let v = rand_video(3, 8, 8, 1);
        let (mask, phase, coils) = unit_setup(8, 8);
        let out = apply_forward_model(
            &v,
            &mask,
            &phase,
            &coils,
            0.0,
            &mut Xoshiro256PlusPlus::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(out.index_axis(Axis(0), 0), v);
    }

    #[test]
    fn constant_phase_leaves_magnitude() {
        let v = rand_video(2, 8, 8, 3);
        let (mask, _, coils) = unit_setup(8, 8);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let p0 = PhaseMap::from_control(8, 8, Array2::zeros((6, 6)));
        let p1 = PhaseMap::from_control(8, 8, Array2::from_elem((6, 6), 1.234));
        let a = apply_forward_model(&v, &mask, &p0, &coils, 0.0, &mut rng).unwrap();
        let b = apply_forward_model(&v, &mask, &p1, &coils, 0.0, &mut rng).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_statistics() {
        let v = ComplexVideo::zeros((1, 64, 64));
        let (mask, phase, coils) = unit_setup(64, 64);
        let out = apply_forward_model(
            &v,
            &mask,
            &phase,
            &coils,
            0.01,
            &mut Xoshiro256PlusPlus::seed_from_u64(12),
        )
        .unwrap();
        let comps: Vec<f64> = out.iter().flat_map(|z| [z.re, z.im]).collect();
        let n = comps.len() as f64;
        let mean = comps.iter().sum::<f64>() / n;
        let std = (comps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((0.009..=0.011).contains(&std), "std {std}");
    }

    #[test]
    fn noise_differs_across_coils_and_frames() {
        let v = ComplexVideo::zeros((2, 8, 8));
        let (mask, phase, _) = unit_setup(8, 8);
        let coils = CoilSet::from_maps(Array3::from_elem((2, 8, 8), Complex64::new(1.0, 0.0)));
        let out = apply_forward_model(
            &v,
            &mask,
            &phase,
            &coils,
            0.1,
            &mut Xoshiro256PlusPlus::seed_from_u64(1),
        )
        .unwrap();
        let px = |c: usize, t: usize| out[[c, t, 3, 3]];
        assert_ne!(px(0, 0), px(1, 0));
        assert_ne!(px(0, 0), px(0, 1));
        assert_ne!(px(0, 1), px(1, 1));
    }

    #[test]
    fn shape_mismatch() {
        let v = rand_video(1, 8, 8, 0);
        let (_, phase, coils) = unit_setup(8, 8);
        let (mask, _, _) = unit_setup(9, 8);
        assert!(matches!(
            apply_forward_model(
                &v,
                &mask,
                &phase,
                &coils,
                0.0,
                &mut Xoshiro256PlusPlus::seed_from_u64(0)
            ),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn kspace_roundtrip() {
        let v = rand_video(2, 12, 12, 5);
        let mc = v.clone().insert_axis(Axis(0));
        let k = to_cartesian_kspace(&mc);
        let back = from_cartesian_kspace(&k);
        let err: f64 = back
            .iter()
            .zip(mc.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12);
    }

    proptest! {
        #[test]
        fn corners_always_outside(seed in any::<u64>(), n in 8usize..64) {
            let m = make_body_mask(n, n, &ForwardRanges::default(), &mut Xoshiro256PlusPlus::seed_from_u64(seed));
            for (y, x) in [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)] {
                prop_assert_eq!(m.data[[y, x]], 0.0);
            }
        }

        #[test]
        fn forward_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let ranges = ForwardRanges::default();
            let v = rand_video(2, 10, 10, seed);
            let mask = make_body_mask(10, 10, &ranges, &mut rng);
            let phase = make_background_phase(10, 10, &mut rng);
            let coils = make_coil_maps(10, 10, 3, &ranges, &mut rng);
            let s = Complex64::new(a, b);
            let lhs = apply_forward_model(&v.mapv(|z| z * s), &mask, &phase, &coils, 0.0, &mut rng).unwrap();
            let rhs = apply_forward_model(&v, &mask, &phase, &coils, 0.0, &mut rng).unwrap().mapv(|z| z * s);
            for (x, y) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
