//! Dataset layout, manifest and train/validation/test split.
//!
//! ```text
//! dataset_dir/
//!   manifest.json
//!   examples/NNNNNN/{input.arr, target.arr, meta.json}
//! ```

use std::path::{Path, PathBuf};

use ndarray::{ArrayD, Axis};
use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use super::container::{read_array, write_array, ArrayData};
use crate::error::{Error, Result};
use crate::forward::{CoilParams, EllipseParams};
use crate::pipeline::PipelineConfig;
use crate::synthesis::SynthesisParams;
use crate::{MultiCoilVideo, Quaternion, ScalarVideo};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INPUT_FILE: &str = "input.arr";
pub const TARGET_FILE: &str = "target.arr";
pub const META_FILE: &str = "meta.json";

/// Everything that was sampled or derived while producing one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub index: usize,
    pub dataset_seed: u64,
    pub c: Quaternion,
    /// Mandelbrot count of `c`.
    pub c_count: u32,
    pub synthesis: SynthesisParams,
    pub mask: EllipseParams,
    pub phase_control: Vec<f64>,
    pub coils: Vec<CoilParams>,
    pub noise_sigma: f64,
    pub input_scale: f64,
    pub target_scale: f64,
    pub retained_energy: f64,
    pub singular_values: Vec<f64>,
    pub config: PipelineConfig,
}

/// Aliased multi-coil input, RSS target and provenance.
#[derive(Debug, Clone)]
pub struct DatasetExample {
    pub input: MultiCoilVideo,
    pub target: ScalarVideo,
    pub meta: ExampleMeta,
}

impl DatasetExample {
    pub fn input_array(&self) -> ArrayData {
        ArrayData::C64(
            self.input
                .mapv(|z| Complex32::new(z.re as f32, z.im as f32))
                .into_dyn(),
        )
    }

    pub fn target_array(&self) -> ArrayData {
        ArrayData::F32(self.target.mapv(|x| x as f32).into_dyn())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleFiles {
    pub input: String,
    pub target: String,
    pub meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub index: usize,
    pub c: Quaternion,
    pub c_count: u32,
    pub synthesis: SynthesisParams,
    pub noise_sigma: f64,
    pub input_scale: f64,
    pub target_scale: f64,
    pub retained_energy: f64,
    pub files: ExampleFiles,
    /// Seconds spent simulating and writing the example. Reported, never
    /// persisted, so manifests are reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_seed: u64,
    pub config: PipelineConfig,
    pub split: SplitSizes,
    pub examples: Vec<ManifestRecord>,
    /// Set when generation stopped early.
    #[serde(default)]
    pub incomplete: bool,
    /// Not persisted, like [`ManifestRecord::wall_time_s`].
    #[serde(skip)]
    pub total_wall_time_s: f64,
}

impl Manifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn example_dir(dataset_dir: &Path, index: usize) -> PathBuf {
    dataset_dir.join("examples").join(format!("{index:06}"))
}

/// Write the three example files under `dataset_dir/examples/NNNNNN/`.
/// `wall_time_s` of the returned record is left at zero for the caller.
pub fn write_example(ex: &DatasetExample, dataset_dir: &Path) -> Result<ManifestRecord> {
    let dir = example_dir(dataset_dir, ex.meta.index);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_array(&ex.input_array(), &dir.join(INPUT_FILE))?;
    write_array(&ex.target_array(), &dir.join(TARGET_FILE))?;
    let meta_path = dir.join(META_FILE);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&ex.meta)?)
        .map_err(|e| Error::io(&meta_path, e))?;
    let rel = |f: &str| format!("examples/{:06}/{f}", ex.meta.index);
    let m = &ex.meta;
    Ok(ManifestRecord {
        index: m.index,
        c: m.c,
        c_count: m.c_count,
        synthesis: m.synthesis,
        noise_sigma: m.noise_sigma,
        input_scale: m.input_scale,
        target_scale: m.target_scale,
        retained_energy: m.retained_energy,
        files: ExampleFiles {
            input: rel(INPUT_FILE),
            target: rel(TARGET_FILE),
            meta: rel(META_FILE),
        },
        wall_time_s: 0.0,
    })
}

/// Example as stored on disk.
#[derive(Debug, Clone)]
pub struct StoredExample {
    pub input: ArrayD<Complex32>,
    pub target: ArrayD<f32>,
    pub meta: ExampleMeta,
}

pub fn read_meta(example_dir: &Path) -> Result<ExampleMeta> {
    let path = example_dir.join(META_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_example(example_dir: &Path) -> Result<StoredExample> {
    let meta = read_meta(example_dir)?;
    let input = read_array(&example_dir.join(INPUT_FILE))?.into_c64()?;
    let target = read_array(&example_dir.join(TARGET_FILE))?.into_f32()?;
    let cfg = &meta.config;
    let (t, n) = (cfg.frames, cfg.n);
    let expected_in = [cfg.coils_out, t, n, n];
    if input.shape() != expected_in {
        return Err(Error::ShapeMismatch {
            expected: expected_in.to_vec(),
            actual: input.shape().to_vec(),
        });
    }
    if target.shape() != [t, n, n] {
        return Err(Error::ShapeMismatch {
            expected: vec![t, n, n],
            actual: target.shape().to_vec(),
        });
    }
    debug_assert_eq!(input.len_of(Axis(0)), cfg.coils_out);
    Ok(StoredExample {
        input,
        target,
        meta,
    })
}

/// Contiguous index partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.train.len(),
            val: self.val.len(),
            test: self.test.len(),
        }
    }
}

/// `round(0.75 n)` / `round(0.10 n)` / remainder, with every partition
/// holding at least one example (taken from the largest one).
pub fn split_dataset(n: usize) -> Result<Split> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 examples to split, got {n}"
        )));
    }
    let train = (0.75 * n as f64).round() as usize;
    let val = (0.10 * n as f64).round() as usize;
    let mut sizes = [train, val, n - train - val];
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let largest = (0..3)
            .max_by_key(|&i| (sizes[i], std::cmp::Reverse(i)))
            .expect("three partitions");
        sizes[largest] -= 1;
        sizes[empty] += 1;
    }
    let (a, b) = (sizes[0], sizes[0] + sizes[1]);
    Ok(Split {
        train: (0..a).collect(),
        val: (a..b).collect(),
        test: (b..n).collect(),
    })
}
