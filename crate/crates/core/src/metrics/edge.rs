use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ScalarVideo;

/// Line segment across an edge. Endpoints are `[x, y]` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeProbe {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub samples: usize,
    /// Physical size of one pixel; 1 gives ES in px⁻¹.
    pub pixel_spacing: f64,
}

impl EdgeProbe {
    pub fn new(start: [f64; 2], end: [f64; 2], samples: usize) -> Self {
        Self {
            start,
            end,
            samples,
            pixel_spacing: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start == self.end || self.samples < 8 || !(self.pixel_spacing > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid edge probe {self:?}")));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    /// Sample distances (px) and bilinearly interpolated intensities.
    pub fn profile(&self, frame: ArrayView2<f64>) -> (Vec<f64>, Vec<f64>) {
        let n = self.samples;
        let len = self.length();
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                let x = self.start[0] + s * (self.end[0] - self.start[0]);
                let y = self.start[1] + s * (self.end[1] - self.start[1]);
                (s * len, bilinear(frame, x, y))
            })
            .unzip()
    }
}

fn bilinear(img: ArrayView2<f64>, x: f64, y: f64) -> f64 {
    let (h, w) = img.dim();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = img[[y0, x0]] * (1.0 - fx) + img[[y0, x1]] * fx;
    let bottom = img[[y1, x0]] * (1.0 - fx) + img[[y1, x1]] * fx;
    top * (1.0 - fy) + bottom * fy
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Fitted profile `a + b·logistic((d − d0)/w)`, distances in px.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub a: f64,
    pub b: f64,
    pub d0: f64,
    pub w: f64,
    pub r_squared: f64,
}

/// Optimal `(a, b)` and residual sum of squares for fixed `(d0, w)`.
fn linear_fit(d: &[f64], v: &[f64], d0: f64, w: f64) -> (f64, f64, f64) {
    let n = d.len() as f64;
    let g: Vec<f64> = d.iter().map(|&x| logistic((x - d0) / w)).collect();
    let sg = g.iter().sum::<f64>();
    let sv = v.iter().sum::<f64>();
    let sgg = g.iter().map(|x| x * x).sum::<f64>();
    let sgv = g.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let det = n * sgg - sg * sg;
    let (a, b) = if det.abs() < 1e-12 * n * n {
        (sv / n, 0.0)
    } else {
        let b = (n * sgv - sg * sv) / det;
        ((sv - b * sg) / n, b)
    };
    let sse = g.iter().zip(v).map(|(x, y)| (a + b * x - y).powi(2)).sum();
    (a, b, sse)
}

fn fit_profile(d: &[f64], v: &[f64]) -> Result<EdgeFit> {
    let len = *d.last().unwrap();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sst: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let range =
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    if sst == 0.0 || range == 0.0 {
        return Err(Error::FitFailure("flat profile".into()));
    }
    let spacing = len / (d.len() - 1) as f64;
    let (w_min, w_max) = (0.05 * spacing, len);
    let cost = |d0: f64, lw: f64| linear_fit(d, v, d0, lw.exp()).2;

    let (n_d0, n_w) = (4 * d.len(), 40);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=n_d0 {
        let d0 = len * i as f64 / n_d0 as f64;
        for j in 0..=n_w {
            let lw = w_min.ln() + (w_max / w_min).ln() * j as f64 / n_w as f64;
            let c = cost(d0, lw);
            if c < best.0 {
                best = (c, d0, lw);
            }
        }
    }

    let (mut c, mut d0, mut lw) = best;
    let (mut step_d, mut step_w) = (len / n_d0 as f64, (w_max / w_min).ln() / n_w as f64);
    while step_d > 1e-10 * len.max(1.0) || step_w > 1e-10 {
        let mut moved = false;
        for (dd, dw) in [(step_d, 0.0), (-step_d, 0.0), (0.0, step_w), (0.0, -step_w)] {
            let (nd, nw) = (d0 + dd, (lw + dw).clamp(w_min.ln(), w_max.ln()));
            let nc = cost(nd, nw);
            if nc < c {
                (c, d0, lw, moved) = (nc, nd, nw, true);
            }
        }
        if !moved {
            step_d *= 0.5;
            step_w *= 0.5;
        }
    }

    let w = lw.exp();
    let (a, b, sse) = linear_fit(d, v, d0, w);
    let r_squared = 1.0 - sse / sst;
    if r_squared < 0.5 {
        return Err(Error::FitFailure(format!("R² = {r_squared:.3} below 0.5")));
    }
    if b.abs() < 0.01 * range {
        return Err(Error::FitFailure(format!(
            "edge amplitude {b:.3e} below 1% of range {range:.3e}"
        )));
    }
    Ok(EdgeFit {
        a,
        b,
        d0,
        w,
        r_squared,
    })
}

/// Logistic fit along the probe.
pub fn edge_sharpness_fit(frame: ArrayView2<f64>, probe: &EdgeProbe) -> Result<EdgeFit> {
    probe.validate()?;
    let (d, v) = probe.profile(frame);
    fit_profile(&d, &v)
}

/// `1 / (4 w · spacing)`: the peak slope of the amplitude-normalized fitted edge.
pub fn edge_sharpness(frame: ArrayView2<f64>, probe: &EdgeProbe) -> Result<f64> {
    let fit = edge_sharpness_fit(frame, probe)?;
    Ok(1.0 / (4.0 * fit.w * probe.pixel_spacing))
}

pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalEs {
    pub value: f64,
    /// Per-frame ES; `None` where the fit failed.
    pub per_frame: Vec<Option<f64>>,
    pub excluded_frames: usize,
}

/// Population standard deviation of per-frame ES over frames whose fit succeeds.
pub fn temporal_std_es(video: &ScalarVideo, probe: &EdgeProbe) -> Result<TemporalEs> {
    probe.validate()?;
    let per_frame: Vec<Option<f64>> = (0..video.len_of(Axis(0)))
        .into_par_iter()
        .map(|t| edge_sharpness(video.index_axis(Axis(0), t), probe).ok())
        .collect();
    let fitted: Vec<f64> = per_frame.iter().flatten().copied().collect();
    if fitted.len() < 2 {
        return Err(Error::TooFewFits {
            fitted: fitted.len(),
        });
    }
    Ok(TemporalEs {
        value: population_std(&fitted),
        excluded_frames: per_frame.len() - fitted.len(),
        per_frame,
    })
}
