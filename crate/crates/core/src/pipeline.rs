//! End-to-end example generation.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    apply_forward_model, make_background_phase, make_body_mask, make_coil_maps,
    to_cartesian_kspace, ForwardRanges,
};
use crate::fractal::{
    render_julia_slice, CCatalogue, CatalogueEntry, GridSpec4, IterationParams, CATALOGUE_RANGE,
    DEFAULT_SCAN_SAMPLES,
};
use crate::io::dataset::{
    split_dataset, write_example, DatasetExample, ExampleMeta, Manifest, ManifestRecord,
};
use crate::io::rng::{derive_rng, Purpose};
use crate::kspace::{
    density_compensation, golden_angle_trajectory, make_training_pair, svd_coil_compress,
    DcfWeights, NufftPlan, RadialKspace, Trajectory,
};
use crate::synthesis::{synthesize_complex_video, SynthesisRanges};

/// Generation settings shared by every example of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Image matrix size (square).
    pub n: usize,
    pub frames: usize,
    pub coils_simulated: usize,
    pub coils_out: usize,
    pub spokes_per_frame: usize,
    /// Readout samples per spoke; `2 n` when absent.
    pub samples_per_spoke: Option<usize>,
    pub dataset_size: usize,
    pub seed: u64,
    pub iteration: IterationParams,
    pub catalogue_range: (u32, u32),
    pub scan_samples: usize,
    pub synthesis: SynthesisRanges,
    pub forward: ForwardRanges,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n: 192,
            frames: 20,
            coils_simulated: 16,
            coils_out: 10,
            spokes_per_frame: 13,
            samples_per_spoke: None,
            dataset_size: 692,
            seed: 0,
            iteration: IterationParams::default(),
            catalogue_range: CATALOGUE_RANGE,
            scan_samples: DEFAULT_SCAN_SAMPLES,
            synthesis: SynthesisRanges::default(),
            forward: ForwardRanges::default(),
        }
    }
}

impl PipelineConfig {
    pub fn samples_per_spoke(&self) -> usize {
        self.samples_per_spoke.unwrap_or(2 * self.n)
    }

    /// Rendering grid: `n x n` pixels on the `z = 0` plane, `frames` time points.
    pub fn render_grid(&self) -> GridSpec4 {
        GridSpec4::with_counts(self.n, self.n, 1, self.frames)
    }

    pub fn scan_grid(&self) -> GridSpec4 {
        GridSpec4::uniform(self.scan_samples)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 8 || !self.n.is_multiple_of(2) {
            return bad(format!(
                "image size must be even and at least 8, got {}",
                self.n
            ));
        }
        if self.frames < 1 {
            return bad("need at least one frame".into());
        }
        if self.coils_out < 1 || self.coils_out > self.coils_simulated {
            return bad(format!(
                "compressed coil count {} must lie in 1..={}",
                self.coils_out, self.coils_simulated
            ));
        }
        if self.spokes_per_frame < 1 {
            return bad("need at least one spoke per frame".into());
        }
        let r = self.samples_per_spoke();
        if r < 2 || !r.is_multiple_of(2) {
            return bad(format!(
                "samples per spoke must be even and at least 2, got {r}"
            ));
        }
        self.iteration.validate()?;
        let (lo, hi) = self.catalogue_range;
        if lo > hi || hi > self.iteration.max_iter {
            return bad(format!(
                "catalogue range {lo}:{hi} is not ordered within max_iter"
            ));
        }
        if self.scan_samples < 1 {
            return bad("scan grid needs at least one sample per axis".into());
        }
        let s = &self.synthesis;
        if !(s.f2.0 <= s.f2.1
            && s.blur_sigma.0 >= 0.0
            && s.blur_sigma.0 <= s.blur_sigma.1
            && s.unsharp_sigma >= 0.0)
        {
            return bad("synthesis ranges are inconsistent".into());
        }
        let f = &self.forward;
        for (name, (lo, hi)) in [
            ("mask semi-axis", f.mask_semi_axis),
            ("mask offset", f.mask_offset),
            ("coil radius", f.coil_radius),
            ("coil sigma", f.coil_sigma),
            ("coil intensity", f.coil_intensity),
            ("noise sigma", f.noise_sigma),
        ] {
            if !(lo <= hi) {
                return bad(format!("{name} range is empty"));
            }
        }
        if f.noise_sigma.0 < 0.0 || f.coil_sigma.0 <= 0.0 || f.mask_semi_axis.0 <= 0.0 {
            return bad("forward-model ranges must be positive".into());
        }
        Ok(())
    }
}

/// A generated example together with the acquisition state needed to
/// reconstruct it.
#[derive(Debug, Clone)]
pub struct SimulatedExample {
    pub example: DatasetExample,
    /// Radial samples `[coil, frame, sample]`, on the input scale.
    pub radial: RadialKspace,
    /// Compressed coil sensitivities `[coil, y, x]`.
    pub coil_maps: Array3<Complex64>,
    pub trajectory: Trajectory,
    pub dcf: DcfWeights,
}

/// Shared per-dataset objects: trajectory, DCF and NUFFT plan.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub trajectory: Trajectory,
    pub dcf: DcfWeights,
    pub plan: NufftPlan,
}

impl Acquisition {
    pub fn new(cfg: &PipelineConfig) -> Self {
        let trajectory = golden_angle_trajectory(
            cfg.frames,
            cfg.spokes_per_frame,
            cfg.samples_per_spoke(),
            cfg.n,
        );
        let dcf = density_compensation(&trajectory);
        Self {
            trajectory,
            dcf,
            plan: NufftPlan::new(cfg.n),
        }
    }
}

/// Produce example `index` of the dataset described by `cfg` from the given
/// catalogue entry. Output depends only on `(cfg, index, entry)`.
pub fn simulate_example(
    cfg: &PipelineConfig,
    acq: &Acquisition,
    index: usize,
    entry: &CatalogueEntry,
) -> Result<SimulatedExample> {
    let (n, seed, idx) = (cfg.n, cfg.seed, index as u64);
    let field = render_julia_slice(entry.c, &cfg.render_grid(), &cfg.iteration);
    let synthesis = cfg
        .synthesis
        .sample(&mut derive_rng(seed, idx, Purpose::Synthesis));
    let video = synthesize_complex_video(&field, &synthesis)?;
    drop(field);

    let mask = make_body_mask(
        n,
        n,
        &cfg.forward,
        &mut derive_rng(seed, idx, Purpose::Mask),
    );
    let phase = make_background_phase(n, n, &mut derive_rng(seed, idx, Purpose::Phase));
    let coils = make_coil_maps(
        n,
        n,
        cfg.coils_simulated,
        &cfg.forward,
        &mut derive_rng(seed, idx, Purpose::Coils),
    );
    let mut noise_rng = derive_rng(seed, idx, Purpose::Noise);
    let noise_sigma = noise_rng.uniform(cfg.forward.noise_sigma.0, cfg.forward.noise_sigma.1);
    let images = apply_forward_model(&video, &mask, &phase, &coils, noise_sigma, &mut noise_rng)?;
    drop(video);

    let kspace = to_cartesian_kspace(&images);
    drop(images);
    let (compressed, cc) = svd_coil_compress(&kspace, cfg.coils_out)?;
    drop(kspace);
    let pair = make_training_pair(&compressed, &acq.trajectory, &acq.dcf, &acq.plan)?;

    let meta = ExampleMeta {
        index,
        dataset_seed: seed,
        c: entry.c,
        c_count: entry.count,
        synthesis,
        mask: mask.params,
        phase_control: phase.control.iter().copied().collect(),
        coils: coils.params.clone(),
        noise_sigma,
        input_scale: pair.input_scale,
        target_scale: pair.target_scale,
        retained_energy: cc.retained_energy,
        singular_values: cc.singular_values.clone(),
        config: cfg.clone(),
    };
    Ok(SimulatedExample {
        example: DatasetExample {
            input: pair.input,
            target: pair.target,
            meta,
        },
        radial: pair.radial,
        coil_maps: cc.apply3(&coils.maps),
        trajectory: acq.trajectory.clone(),
        dcf: acq.dcf.clone(),
    })
}

/// Regenerate an example from its stored metadata.
pub fn regenerate(meta: &ExampleMeta) -> Result<SimulatedExample> {
    let acq = Acquisition::new(&meta.config);
    let entry = CatalogueEntry {
        c: meta.c,
        count: meta.c_count,
    };
    simulate_example(&meta.config, &acq, meta.index, &entry)
}

/// Generate `cfg.dataset_size` examples into `out_dir` on a pool of `jobs`
/// threads, then write the manifest. `c` values are taken from the catalogue
/// round robin by example index. `progress` is called once per finished
/// example, in completion order.
pub fn generate_dataset(
    cfg: &PipelineConfig,
    catalogue: &CCatalogue,
    out_dir: &Path,
    jobs: usize,
    progress: impl Fn(&ManifestRecord) + Sync,
) -> Result<Manifest> {
    cfg.validate()?;
    if catalogue.is_empty() {
        return Err(Error::EmptyCatalogue {
            lo: catalogue.range[0],
            hi: catalogue.range[1],
        });
    }
    let split = split_dataset(cfg.dataset_size)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let failed = AtomicBool::new(false);
    let results: Vec<Option<Result<ManifestRecord>>> = pool.install(|| {
        let acq = Acquisition::new(cfg);
        (0..cfg.dataset_size)
            .into_par_iter()
            .map(|index| {
                if failed.load(Ordering::Relaxed) {
                    return None;
                }
                let t0 = Instant::now();
                let res =
                    simulate_example(cfg, &acq, index, catalogue.pick(index)).and_then(|sim| {
                        let mut rec = write_example(&sim.example, out_dir)?;
                        rec.wall_time_s = t0.elapsed().as_secs_f64();
                        Ok(rec)
                    });
                match &res {
                    Ok(rec) => progress(rec),
                    Err(_) => failed.store(true, Ordering::Relaxed),
                }
                Some(res)
            })
            .collect()
    });
    let mut examples = Vec::with_capacity(results.len());
    let mut first_err = None;
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => examples.push(rec),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let manifest = Manifest {
        dataset_seed: cfg.seed,
        config: cfg.clone(),
        split: split.sizes(),
        examples,
        incomplete: first_err.is_some(),
        total_wall_time_s: start.elapsed().as_secs_f64(),
    };
    manifest.save(out_dir)?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
