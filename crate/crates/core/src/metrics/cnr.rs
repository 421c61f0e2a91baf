use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::ScalarVideo;

/// Pixel masks shared by every frame: two tissue regions and a noise region.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiSpec {
    pub region_a: Array2<bool>,
    pub region_b: Array2<bool>,
    pub noise: Array2<bool>,
}

impl RoiSpec {
    pub fn validate(&self, h: usize, w: usize) -> Result<()> {
        for m in [&self.region_a, &self.region_b, &self.noise] {
            if m.dim() != (h, w) {
                return Err(Error::ShapeMismatch {
                    expected: vec![h, w],
                    actual: m.shape().to_vec(),
                });
            }
            if !m.iter().any(|&v| v) {
                return Err(Error::InvalidConfig("empty ROI mask".into()));
            }
        }
        let overlap = ndarray::Zip::from(&self.region_a)
            .and(&self.region_b)
            .and(&self.noise)
            .fold(false, |acc, &a, &b, &n| {
                acc || (a as u8 + b as u8 + n as u8) > 1
            });
        if overlap {
            return Err(Error::InvalidConfig("ROI masks overlap".into()));
        }
        Ok(())
    }
}

fn pooled(video: &ScalarVideo, mask: &Array2<bool>) -> Vec<f64> {
    video
        .axis_iter(Axis(0))
        .flat_map(|frame| {
            frame
                .iter()
                .zip(mask.iter())
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .collect::<Vec<_>>()
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(mean_A − mean_B) / std_noise`, each statistic pooled over all frames;
/// population standard deviation.
pub fn cnr(video: &ScalarVideo, roi: &RoiSpec) -> Result<f64> {
    let (_, h, w) = video.dim();
    roi.validate(h, w)?;
    let a = mean(&pooled(video, &roi.region_a));
    let b = mean(&pooled(video, &roi.region_b));
    let noise = pooled(video, &roi.noise);
    let mu = mean(&noise);
    let var = noise.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / noise.len() as f64;
    if var == 0.0 {
        return Err(Error::ZeroNoise);
    }
    Ok((a - b) / var.sqrt())
}
