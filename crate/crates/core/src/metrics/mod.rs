//! Image-quality scores for magnitude videos.

mod cnr;
mod edge;
mod ssim;

pub use cnr::{cnr, RoiSpec};
pub use edge::{
    edge_sharpness, edge_sharpness_fit, population_std, temporal_std_es, EdgeFit, EdgeProbe,
    TemporalEs,
};
pub use ssim::{ssim, ssim_frame, SsimParams};

use serde::{Deserialize, Serialize};

/// One scored quantity as written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    pub params: serde_json::Value,
    pub excluded_frames: usize,
}

impl MetricRecord {
    pub fn new(metric: impl Into<String>, value: f64, params: impl Serialize) -> Self {
        Self {
            metric: metric.into(),
            value,
            params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
            excluded_frames: 0,
        }
    }

    pub fn with_excluded(mut self, excluded: usize) -> Self {
        self.excluded_frames = excluded;
        self
    }
}
