//! Compressed-sensing baseline: SENSE-type radial data consistency with a
//! smoothed temporal total-variation penalty, solved by fixed-step gradient
//! descent.
//!
//! ```text
//! f(x) = ½ Σ_{c,t} ‖A_t (S_c ⊙ x_t) − y_{c,t}‖² + λ Σ_{t,p} (sqrt(|x_{t+1,p} − x_{t,p}|² + ε²) − ε)
//! ```
//!
//! `A_t` is the gridding NUFFT onto frame `t`'s spokes and `S_c` the known coil
//! sensitivities. The step is `2 · safety / L`, with `L` the largest eigenvalue of
//! the data normal operator estimated by power iteration.

use ndarray::{Array2, Array3, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::rng::Xoshiro256PlusPlus;
use crate::kspace::nufft::{Gridding, NufftPlan};
use crate::kspace::{DcfWeights, RadialKspace, Trajectory};
use crate::ComplexVideo;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsParams {
    pub lambda: f64,
    pub n_iters: usize,
    pub tv_epsilon: f64,
    pub step_safety: f64,
    pub power_iters: usize,
    pub data_weighting: DataWeighting,
    /// Halve the step whenever an update would raise the objective.
    pub backtracking: bool,
}

/// Per-sample weights inside the data-consistency term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataWeighting {
    Uniform,
    Dcf,
}

impl Default for CsParams {
    fn default() -> Self {
        Self {
            lambda: 5e-4,
            n_iters: 50,
            tv_epsilon: 1e-6,
            step_safety: 0.9,
            power_iters: 10,
            data_weighting: DataWeighting::Uniform,
            backtracking: true,
        }
    }
}

impl CsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0)
            || self.n_iters < 1
            || !(self.tv_epsilon > 0.0)
            || !(self.step_safety > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "invalid CS parameters {self:?}"
            )));
        }
        Ok(())
    }
}

/// Smoothed temporal total variation
/// `Σ_{t,p} sqrt(|v[t+1,p] − v[t,p]|² + ε²) − ε`.
pub fn temporal_tv(v: &ComplexVideo, epsilon: f64) -> Result<f64> {
    let t = v.len_of(Axis(0));
    if t < 2 {
        return Err(Error::SingleFrame);
    }
    let eps2 = epsilon * epsilon;
    let per_frame: Vec<f64> = (0..t - 1)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (v.index_axis(Axis(0), i), v.index_axis(Axis(0), i + 1));
            Zip::from(&a).and(&b).fold(0.0, |acc, x, y| {
                acc + (((y - x).norm_sqr() + eps2).sqrt() - epsilon)
            })
        })
        .collect();
    Ok(per_frame.iter().sum())
}

/// Gradient of [`temporal_tv`] (real-parameter gradient packed as complex).
pub fn temporal_tv_gradient(v: &ComplexVideo, epsilon: f64) -> ComplexVideo {
    let (t, h, w) = v.dim();
    let eps2 = epsilon * epsilon;
    let mut g = ComplexVideo::zeros((t, h, w));
    for i in 0..t.saturating_sub(1) {
        let d = &v.index_axis(Axis(0), i + 1) - &v.index_axis(Axis(0), i);
        let unit = d.mapv(|z| z / (z.norm_sqr() + eps2).sqrt());
        let mut gi = g.index_axis_mut(Axis(0), i);
        gi -= &unit;
        let mut gn = g.index_axis_mut(Axis(0), i + 1);
        gn += &unit;
    }
    g
}

/// Multi-coil radial encoding `x ↦ { A_t (S_c ⊙ x_t) }`.
#[derive(Debug, Clone)]
pub struct SenseRadialOp<'a> {
    plan: &'a NufftPlan,
    griddings: Vec<Gridding>,
    maps: &'a Array3<Complex64>,
    samples: usize,
}

impl<'a> SenseRadialOp<'a> {
    pub fn new(
        plan: &'a NufftPlan,
        traj: &Trajectory,
        maps: &'a Array3<Complex64>,
    ) -> Result<Self> {
        let (_, h, w) = maps.dim();
        if (h, w) != (plan.size(), plan.size()) || traj.n != plan.size() {
            return Err(Error::PlanMismatch {
                plan: plan.size(),
                actual: h.max(w),
            });
        }
        Ok(Self {
            plan,
            griddings: traj.frames.iter().map(|f| plan.gridding(f)).collect(),
            maps,
            samples: traj.samples_per_frame(),
        })
    }

    pub fn coils(&self) -> usize {
        self.maps.len_of(Axis(0))
    }

    pub fn frames(&self) -> usize {
        self.griddings.len()
    }

    pub fn forward(&self, x: &ComplexVideo) -> RadialKspace {
        let (nc, t) = (self.coils(), self.frames());
        let per_frame: Vec<Array2<Complex64>> = (0..t)
            .into_par_iter()
            .map(|f| {
                let xf = x.index_axis(Axis(0), f);
                let mut out = Array2::zeros((nc, self.samples));
                for (c, mut row) in out.outer_iter_mut().enumerate() {
                    let img = &self.maps.index_axis(Axis(0), c) * &xf;
                    let s = self
                        .plan
                        .try_forward(&img, &self.griddings[f])
                        .expect("validated shapes");
                    row.iter_mut().zip(s).for_each(|(o, v)| *o = v);
                }
                out
            })
            .collect();
        let mut out = RadialKspace::zeros((nc, t, self.samples));
        for (f, block) in per_frame.into_iter().enumerate() {
            out.index_axis_mut(Axis(1), f).assign(&block);
        }
        out
    }

    /// `Σ_c conj(S_c) ⊙ A_tᴴ (w ⊙ r_{c,t})`; unit weights when `dcf` is `None`.
    pub fn adjoint(&self, r: &RadialKspace, dcf: Option<&DcfWeights>) -> ComplexVideo {
        let (nc, t) = (self.coils(), self.frames());
        let n = self.plan.size();
        let frames: Vec<Array2<Complex64>> = (0..t)
            .into_par_iter()
            .map(|f| {
                let mut acc = Array2::<Complex64>::zeros((n, n));
                for c in 0..nc {
                    let samples: Vec<Complex64> =
                        r.slice(ndarray::s![c, f, ..]).iter().copied().collect();
                    let img = self
                        .plan
                        .try_adjoint(&samples, &self.griddings[f], dcf.map(|d| d.frame(f)))
                        .expect("validated shapes");
                    Zip::from(&mut acc)
                        .and(&img)
                        .and(&self.maps.index_axis(Axis(0), c))
                        .for_each(|a, &v, &s| *a += s.conj() * v);
                }
                acc
            })
            .collect();
        let mut out = ComplexVideo::zeros((t, n, n));
        for (f, img) in frames.into_iter().enumerate() {
            out.index_axis_mut(Axis(0), f).assign(&img);
        }
        out
    }

    /// Largest eigenvalue of `Eᴴ W E` by power iteration from a fixed start.
    pub fn lipschitz(&self, iters: usize, weights: Option<&DcfWeights>) -> f64 {
        let n = self.plan.size();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5EED);
        let mut x = ComplexVideo::from_shape_simple_fn((self.frames(), n, n), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        });
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            let norm = l2(&x);
            x.mapv_inplace(|z| z / norm);
            let y = self.adjoint(&self.forward(&x), weights);
            lambda = l2(&y);
            x = y;
        }
        lambda
    }
}

fn l2(x: &ComplexVideo) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual_energy(
    op: &SenseRadialOp,
    x: &ComplexVideo,
    y: &RadialKspace,
    w: Option<&DcfWeights>,
) -> (RadialKspace, f64) {
    let mut r = op.forward(x);
    Zip::from(&mut r).and(y).for_each(|a, &b| *a -= b);
    let e = match w {
        None => r.iter().map(|z| z.norm_sqr()).sum::<f64>(),
        Some(w) => r
            .axis_iter(Axis(1))
            .enumerate()
            .map(|(t, frame)| {
                frame
                    .outer_iter()
                    .map(|row| {
                        row.iter()
                            .zip(w.frame(t))
                            .map(|(z, wi)| wi * z.norm_sqr())
                            .sum::<f64>()
                    })
                    .sum::<f64>()
            })
            .sum(),
    };
    (r, 0.5 * e)
}

/// Value of the CS objective at `x`; `dcf` is only read under
/// [`DataWeighting::Dcf`].
pub fn cs_objective(
    op: &SenseRadialOp,
    x: &ComplexVideo,
    y: &RadialKspace,
    dcf: &DcfWeights,
    p: &CsParams,
) -> Result<f64> {
    let (_, data) = residual_energy(op, x, y, data_weights(dcf, p));
    let tv = if p.lambda > 0.0 {
        temporal_tv(x, p.tv_epsilon)?
    } else {
        0.0
    };
    Ok(data + p.lambda * tv)
}

/// Gradient of [`cs_objective`] at `x`.
pub fn cs_gradient(
    op: &SenseRadialOp,
    x: &ComplexVideo,
    y: &RadialKspace,
    dcf: &DcfWeights,
    p: &CsParams,
) -> ComplexVideo {
    let w = data_weights(dcf, p);
    let (r, _) = residual_energy(op, x, y, w);
    let mut g = op.adjoint(&r, w);
    if p.lambda > 0.0 && x.len_of(Axis(0)) > 1 {
        let tv = temporal_tv_gradient(x, p.tv_epsilon);
        Zip::from(&mut g)
            .and(&tv)
            .for_each(|a, &b| *a += b * p.lambda);
    }
    g
}

fn data_weights<'a>(dcf: &'a DcfWeights, p: &CsParams) -> Option<&'a DcfWeights> {
    match p.data_weighting {
        DataWeighting::Uniform => None,
        DataWeighting::Dcf => Some(dcf),
    }
}

/// Coil-combined DCF-weighted adjoint, normalized by `Σ_c |S_c|²`.
pub fn dcf_initialization(op: &SenseRadialOp, y: &RadialKspace, dcf: &DcfWeights) -> ComplexVideo {
    let mut x = op.adjoint(y, Some(dcf));
    let norm = op
        .maps
        .map_axis(Axis(0), |s| s.iter().map(|z| z.norm_sqr()).sum::<f64>());
    let floor = 1e-3 * norm.iter().cloned().fold(0.0, f64::max);
    for mut frame in x.outer_iter_mut() {
        Zip::from(&mut frame)
            .and(&norm)
            .for_each(|v, &s| *v /= s.max(floor));
    }
    x
}

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone)]
pub struct CsResult {
    pub image: ComplexVideo,
    /// Objective before the first update and after every iteration
    /// (`n_iters + 1` values).
    pub objective: Vec<f64>,
    pub lipschitz: f64,
    /// Step used by the first iteration.
    pub step: f64,
    /// Number of times backtracking halved the step.
    pub step_halvings: usize,
    pub initial: ComplexVideo,
}

/// Temporal-TV reconstruction of radial multi-coil data with known coil maps.
pub fn cs_reconstruct(
    y: &RadialKspace,
    maps: &Array3<Complex64>,
    traj: &Trajectory,
    dcf: &DcfWeights,
    plan: &NufftPlan,
    p: &CsParams,
) -> Result<CsResult> {
    p.validate()?;
    let (nc, t, s) = y.dim();
    if nc != maps.len_of(Axis(0)) || t != traj.n_frames() || s != traj.samples_per_frame() {
        return Err(Error::ShapeMismatch {
            expected: vec![
                maps.len_of(Axis(0)),
                traj.n_frames(),
                traj.samples_per_frame(),
            ],
            actual: vec![nc, t, s],
        });
    }
    let op = SenseRadialOp::new(plan, traj, maps)?;
    let lipschitz = op.lipschitz(p.power_iters, data_weights(dcf, p));
    let step = 2.0 * p.step_safety / lipschitz;
    let initial = dcf_initialization(&op, y, dcf);
    let mut x = initial.clone();
    let mut objective = Vec::with_capacity(p.n_iters + 1);
    objective.push(cs_objective(&op, &x, y, dcf, p)?);
    let (mut current_step, mut step_halvings) = (step, 0);
    for iteration in 1..=p.n_iters {
        let g = cs_gradient(&op, &x, y, dcf, p);
        let previous = *objective.last().unwrap();
        loop {
            let mut trial = x.clone();
            Zip::from(&mut trial)
                .and(&g)
                .for_each(|v, &d| *v -= d * current_step);
            let f = cs_objective(&op, &trial, y, dcf, p)?;
            let rejected = p.backtracking && !(f <= previous);
            if rejected && step_halvings < MAX_HALVINGS {
                current_step *= 0.5;
                step_halvings += 1;
                continue;
            }
            if rejected {
                objective.push(previous);
            } else {
                if !f.is_finite() {
                    return Err(Error::NonFiniteObjective { iteration });
                }
                x = trial;
                objective.push(f);
            }
            break;
        }
    }
    Ok(CsResult {
        image: x,
        objective,
        lipschitz,
        step,
        step_halvings,
        initial,
    })
}

/// Coil images `S_c ⊙ x_t`, laid out `[coil, t, y, x]`.
pub fn coil_images(x: &ComplexVideo, maps: &Array3<Complex64>) -> crate::MultiCoilVideo {
    let (t, h, w) = x.dim();
    let nc = maps.len_of(Axis(0));
    crate::MultiCoilVideo::from_shape_fn((nc, t, h, w), |(c, f, i, j)| {
        maps[[c, i, j]] * x[[f, i, j]]
    })
}

/// `rss_c(S_c ⊙ x)` scaled to peak 1; comparable with the RSS training target.
pub fn combined_magnitude(x: &ComplexVideo, maps: &Array3<Complex64>) -> crate::ScalarVideo {
    let mag = crate::kspace::rss_combine(&coil_images(x, maps));
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        mag / peak
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::golden_angle_trajectory;
    use ndarray::Array3;

    fn rand_video(t: usize, n: usize, seed: u64) -> ComplexVideo {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        Array3::from_shape_simple_fn((t, n, n), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        })
    }

    #[test]
    fn tv_cases() {
        let c = Array3::from_elem((4, 3, 3), Complex64::new(0.2, 0.1));
        assert_eq!(temporal_tv(&c, 1e-6).unwrap(), 0.0);
        let mut v = ComplexVideo::zeros((2, 1, 1));
        v[[1, 0, 0]] = Complex64::new(1.0, 0.0);
        assert!((temporal_tv(&v, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            temporal_tv(&ComplexVideo::zeros((1, 2, 2)), 1e-6),
            Err(Error::SingleFrame)
        ));
    }

    #[test]
    fn tv_matches_scalar_loop() {
        let v = rand_video(5, 6, 3);
        let eps = 1e-3;
        let mut expected = 0.0;
        for t in 0..4 {
            for y in 0..6 {
                for x in 0..6 {
                    let d = v[[t + 1, y, x]] - v[[t, y, x]];
                    expected += (d.re * d.re + d.im * d.im + eps * eps).sqrt() - eps;
                }
            }
        }
        assert!((temporal_tv(&v, eps).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn tv_gradient_matches_finite_differences() {
        let v = rand_video(3, 4, 5);
        let eps = 1e-2;
        let g = temporal_tv_gradient(&v, eps);
        let h = 1e-6;
        for (idx, gz) in g.indexed_iter() {
            for (dir, analytic) in [
                (Complex64::new(h, 0.0), gz.re),
                (Complex64::new(0.0, h), gz.im),
            ] {
                let mut a = v.clone();
                let mut b = v.clone();
                a[idx] += dir;
                b[idx] -= dir;
                let fd =
                    (temporal_tv(&a, eps).unwrap() - temporal_tv(&b, eps).unwrap()) / (2.0 * h);
                assert!((fd - analytic).abs() < 1e-6, "{idx:?}: {fd} vs {analytic}");
            }
        }
    }

    #[test]
    fn operator_pair_is_adjoint() {
        let n = 8;
        let plan = NufftPlan::new(n);
        let traj = golden_angle_trajectory(3, 4, 16, n);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let maps = Array3::from_shape_simple_fn((2, n, n), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        });
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let x = rand_video(3, n, 2);
        let y = RadialKspace::from_shape_simple_fn((2, 3, 64), || {
            Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        });
        let lhs: Complex64 = op
            .forward(&x)
            .iter()
            .zip(y.iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        let rhs: Complex64 = x
            .iter()
            .zip(op.adjoint(&y, None).iter())
            .map(|(a, b)| a * b.conj())
            .sum();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn shape_and_param_errors() {
        let n = 8;
        let plan = NufftPlan::new(n);
        let traj = golden_angle_trajectory(2, 3, 16, n);
        let dcf = DcfWeights::unit(&traj);
        let maps = Array3::from_elem((2, n, n), Complex64::new(1.0, 0.0));
        let y = RadialKspace::zeros((3, 2, 48));
        assert!(matches!(
            cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &CsParams::default()),
            Err(Error::ShapeMismatch { .. })
        ));
        let bad = CsParams {
            n_iters: 0,
            ..CsParams::default()
        };
        assert!(matches!(
            cs_reconstruct(
                &RadialKspace::zeros((2, 2, 48)),
                &maps,
                &traj,
                &dcf,
                &plan,
                &bad
            ),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn oversized_step_is_reported() {
        let n = 8;
        let plan = NufftPlan::new(n);
        let traj = golden_angle_trajectory(2, 8, 16, n);
        let dcf = DcfWeights::unit(&traj);
        let maps = Array3::from_elem((1, n, n), Complex64::new(1.0, 0.0));
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let y = op.forward(&rand_video(2, n, 4));
        let p = CsParams {
            step_safety: 1e6,
            n_iters: 200,
            lambda: 0.0,
            backtracking: false,
            ..CsParams::default()
        };
        assert!(matches!(
            cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &p),
            Err(Error::NonFiniteObjective { .. })
        ));
    }

    fn phantom_setup(
        n: usize,
        t: usize,
        spokes: usize,
        ncoils: usize,
    ) -> (
        NufftPlan,
        Trajectory,
        DcfWeights,
        Array3<Complex64>,
        ComplexVideo,
    ) {
        use crate::forward::{make_coil_maps, ForwardRanges};
        let plan = NufftPlan::new(n);
        let traj = golden_angle_trajectory(t, spokes, 2 * n, n);
        let dcf = crate::kspace::density_compensation(&traj);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let maps = make_coil_maps(n, n, ncoils, &ForwardRanges::default(), &mut rng).maps;
        // Gaussian blobs: spectrum well inside the sampled disk |k| <= n/2.
        let c = (n as f64 - 1.0) / 2.0;
        let sigma = n as f64 / 10.0;
        let truth = Array3::from_shape_fn((t, n, n), |(f, y, x)| {
            let blob = |cx: f64, cy: f64| {
                (-((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
            };
            let shift = n as f64 / 16.0 * f as f64;
            let amp =
                blob(c - shift, c) + 0.6 * blob(c + n as f64 / 5.0, c - n as f64 / 6.0 + shift);
            Complex64::from_polar(amp, 0.3 * (x as f64 - c) / n as f64)
        });
        (plan, traj, dcf, maps, truth)
    }

    fn rel_err(a: &ComplexVideo, b: &ComplexVideo) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (num / b.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    #[test]
    fn unregularized_dense_recovers_truth() {
        let (plan, traj, dcf, maps, truth) = phantom_setup(32, 4, 64, 4);
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let y = op.forward(&truth);
        let p = CsParams {
            lambda: 0.0,
            ..CsParams::default()
        };
        let r = cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &p).unwrap();
        assert_eq!(r.objective.len(), 51);
        let err = rel_err(&r.image, &truth);
        assert!(err < 0.05, "relative error {err}");
        let weighted = CsParams {
            data_weighting: DataWeighting::Dcf,
            ..p
        };
        let r = cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &weighted).unwrap();
        assert!(rel_err(&r.image, &truth) < err);
    }

    #[test]
    fn objective_nonincreasing_at_default_step() {
        let (plan, traj, dcf, maps, truth) = phantom_setup(32, 6, 13, 4);
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let y = op.forward(&truth);
        let fixed = CsParams {
            backtracking: false,
            ..CsParams::default()
        };
        let r = cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &fixed).unwrap();
        for (k, w) in r.objective.windows(2).enumerate().skip(3) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-8),
                "uptick at {k}: {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(r.objective.last().unwrap() < &r.objective[0]);
    }

    #[test]
    fn heavy_regularization_flattens_time() {
        let (plan, traj, dcf, maps, truth) = phantom_setup(16, 4, 13, 2);
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let y = op.forward(&truth);
        let p = CsParams {
            lambda: 1e3,
            ..CsParams::default()
        };
        let r = cs_reconstruct(&y, &maps, &traj, &dcf, &plan, &p).unwrap();
        let eps = p.tv_epsilon;
        assert!(temporal_tv(&r.image, eps).unwrap() < temporal_tv(&r.initial, eps).unwrap());
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let (plan, traj, _, maps, _) = phantom_setup(8, 3, 5, 2);
        let op = SenseRadialOp::new(&plan, &traj, &maps).unwrap();
        let x = rand_video(3, 8, 21);
        let y = op.forward(&rand_video(3, 8, 22));
        let dcf = crate::kspace::density_compensation(&traj);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for data_weighting in [DataWeighting::Uniform, DataWeighting::Dcf] {
            let p = CsParams {
                lambda: 0.5,
                tv_epsilon: 1e-6,
                data_weighting,
                ..CsParams::default()
            };
            let g = cs_gradient(&op, &x, &y, &dcf, &p);
            for (idx, gz) in g.indexed_iter() {
                for (dir, analytic) in [
                    (Complex64::new(h, 0.0), gz.re),
                    (Complex64::new(0.0, h), gz.im),
                ] {
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[idx] += dir;
                    b[idx] -= dir;
                    let fd = (cs_objective(&op, &a, &y, &dcf, &p).unwrap()
                        - cs_objective(&op, &b, &y, &dcf, &p).unwrap())
                        / (2.0 * h);
                    worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
                }
            }
        }
        assert!(worst < 1e-4, "worst relative mismatch {worst}");
    }
}
