use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use fracsynth::fractal::{scan_c_catalogue, CCatalogue, GridSpec4, IterationParams};
use fracsynth::io::dataset::{read_example, StoredExample, INPUT_FILE};
use fracsynth::io::{write_array, ArrayData};
use fracsynth::metrics::{
    cnr, ssim, temporal_std_es, EdgeProbe, MetricRecord, RoiSpec, SsimParams,
};
use fracsynth::pipeline::{generate_dataset, regenerate, PipelineConfig, SimulatedExample};
use fracsynth::recon::{combined_magnitude, cs_reconstruct, CsParams, DataWeighting};
use fracsynth::{Error, ScalarVideo};
use image::codecs::gif::{GifEncoder, Repeat};
use image::{Delay, Frame, GrayImage, RgbaImage};
use ndarray::{Array2, Array3, Axis};
use serde_json::json;

use crate::convert::{load_magnitude, narrow_c, narrow_r, widen_c};
use crate::{
    EvalArgs, GenArgs, Method, PreviewArgs, ReconArgs, ScanArgs, UndersampleArgs, UsageError,
    Weighting,
};

pub const RECON_FILE: &str = "recon.arr";
pub const METRICS_FILE: &str = "metrics.json";

fn usage(e: Error) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

pub fn scan_c(a: ScanArgs) -> Result<()> {
    let params = IterationParams {
        max_iter: a.max_iter,
        ..IterationParams::default()
    };
    params.validate().map_err(usage)?;
    if a.range.1 > a.max_iter {
        bail!(UsageError(format!(
            "range upper bound {} exceeds --max-iter {}",
            a.range.1, a.max_iter
        )));
    }
    let grid = GridSpec4::uniform(a.samples as usize);
    let start = Instant::now();
    let catalogue = match scan_c_catalogue(&grid, &params, (a.range.0, a.range.1)) {
        Err(e @ Error::EmptyCatalogue { .. }) => {
            return Err(
                anyhow!(e).context("no qualifying c values; widen --range or raise --samples")
            );
        }
        r => r?,
    };
    catalogue.save(&a.out)?;
    println!(
        "{} qualifying c values with escape count in [{}, {}] on a {}^4 grid ({:.2} s) -> {}",
        catalogue.len(),
        a.range.0,
        a.range.1,
        a.samples,
        start.elapsed().as_secs_f64(),
        a.out.display()
    );
    Ok(())
}

pub fn gen_dataset(a: GenArgs) -> Result<()> {
    let mut cfg = PipelineConfig {
        n: a.size,
        frames: a.frames,
        coils_simulated: a.coils,
        coils_out: a.coils_out,
        spokes_per_frame: a.spokes,
        samples_per_spoke: a.samples_per_spoke,
        dataset_size: a.n,
        seed: a.seed,
        catalogue_range: (a.range.0, a.range.1),
        scan_samples: a.scan_samples,
        ..PipelineConfig::default()
    };
    cfg.iteration.max_iter = a.max_iter;
    let catalogue = match &a.catalogue {
        Some(path) => {
            let cat = CCatalogue::load(path)
                .with_context(|| format!("loading catalogue {}", path.display()))?;
            cfg.catalogue_range = (cat.range[0], cat.range[1]);
            cfg.iteration.max_iter = cat.max_iter;
            cat
        }
        None => {
            cfg.validate().map_err(usage)?;
            scan_c_catalogue(&cfg.scan_grid(), &cfg.iteration, cfg.catalogue_range)
                .context("inline c scan; widen --range or raise --scan-samples")?
        }
    };
    cfg.validate().map_err(usage)?;
    fracsynth::io::dataset::split_dataset(cfg.dataset_size).map_err(usage)?;
    let jobs = a
        .jobs
        .map(|j| j as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    println!(
        "generating {} examples ({}x{}x{}, {}->{} coils, {} spokes/frame) with {} job(s) into {}",
        cfg.dataset_size,
        cfg.n,
        cfg.n,
        cfg.frames,
        cfg.coils_simulated,
        cfg.coils_out,
        cfg.spokes_per_frame,
        jobs,
        a.out.display()
    );
    let manifest = generate_dataset(&cfg, &catalogue, &a.out, jobs, |rec| {
        let line = format!(
            "example {:06}  c_count {:>2}  {:.2} s\n",
            rec.index, rec.c_count, rec.wall_time_s
        );
        let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), line.as_bytes());
    })?;
    let n = manifest.examples.len().max(1) as f64;
    println!(
        "done: {} examples in {:.2} s ({:.2} s/example wall, {:.2} s/example worker); split {}/{}/{}",
        manifest.examples.len(),
        manifest.total_wall_time_s,
        manifest.total_wall_time_s / n,
        manifest.examples.iter().map(|r| r.wall_time_s).sum::<f64>() / n,
        manifest.split.train,
        manifest.split.val,
        manifest.split.test
    );
    Ok(())
}

/// Regenerate the acquisition behind a stored example and check it still
/// produces the stored input bit for bit.
fn load_simulation(dir: &Path) -> Result<(StoredExample, SimulatedExample)> {
    let stored = read_example(dir).with_context(|| format!("reading example {}", dir.display()))?;
    let sim = regenerate(&stored.meta)?;
    if narrow_c(&sim.example.input) != stored.input {
        bail!(
            "regenerated input differs from stored {}; example was written by an incompatible build",
            dir.join(INPUT_FILE).display()
        );
    }
    Ok((stored, sim))
}

pub fn undersample(a: UndersampleArgs) -> Result<()> {
    let (_, sim) = load_simulation(&a.example)?;
    let out = a.out.unwrap_or_else(|| a.example.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let traj = &sim.trajectory;
    let (t, s) = (traj.n_frames(), traj.samples_per_frame());
    let coords = Array3::from_shape_fn((t, s, 2), |(f, i, d)| traj.frame(f)[i][d]);
    let dcf = Array2::from_shape_fn((t, s), |(f, i)| sim.dcf.frame(f)[i]);
    let files = [
        ("kspace.arr", ArrayData::C64(narrow_c(&sim.radial))),
        ("traj.arr", ArrayData::F32(narrow_r(&coords))),
        ("dcf.arr", ArrayData::F32(narrow_r(&dcf))),
        ("coils.arr", ArrayData::C64(narrow_c(&sim.coil_maps))),
    ];
    for (name, data) in &files {
        write_array(data, &out.join(name))?;
        println!("{:<11} {:?} {}", name, data.shape(), data.dtype());
    }
    Ok(())
}

fn target_video(stored: &StoredExample) -> Result<ScalarVideo> {
    Ok(stored.target.mapv(f64::from).into_dimensionality()?)
}

pub fn recon(a: ReconArgs) -> Result<()> {
    let params = CsParams {
        lambda: a.lambda,
        n_iters: a.iters as usize,
        tv_epsilon: a.tv_epsilon,
        step_safety: a.step_safety,
        data_weighting: match a.data_weighting {
            Weighting::Uniform => DataWeighting::Uniform,
            Weighting::Dcf => DataWeighting::Dcf,
        },
        backtracking: !a.no_backtracking,
        ..CsParams::default()
    };
    params.validate().map_err(usage)?;
    let out = a.out.clone().unwrap_or_else(|| a.example.clone());
    let start = Instant::now();
    let (magnitude, target, extra) = match a.method {
        Method::Adjoint => {
            let stored = read_example(&a.example)
                .with_context(|| format!("reading example {}", a.example.display()))?;
            let input = widen_c(&stored.input).into_dimensionality()?;
            let mag = fracsynth::kspace::rss_combine(&input);
            (mag, target_video(&stored)?, json!({}))
        }
        Method::Cs => {
            let (stored, sim) = load_simulation(&a.example)?;
            let plan = fracsynth::kspace::NufftPlan::new(stored.meta.config.n);
            let r = cs_reconstruct(
                &sim.radial,
                &sim.coil_maps,
                &sim.trajectory,
                &sim.dcf,
                &plan,
                &params,
            )?;
            let extra = json!({
                "cs": params,
                "lipschitz": r.lipschitz,
                "step": r.step,
                "step_halvings": r.step_halvings,
                "objective_trace": r.objective,
            });
            (
                combined_magnitude(&r.image, &sim.coil_maps),
                target_video(&stored)?,
                extra,
            )
        }
    };
    let sp = SsimParams::default();
    let score = ssim(&magnitude, &target, &sp)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_array(&ArrayData::F32(narrow_r(&magnitude)), &out.join(RECON_FILE))?;
    let method = match a.method {
        Method::Adjoint => "adjoint",
        Method::Cs => "cs",
    };
    let mut report = json!({
        "method": method,
        "example": a.example,
        "metrics": [MetricRecord::new("ssim", score, sp)],
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    if let (Some(obj), Some(ext)) = (report.as_object_mut(), extra.as_object()) {
        obj.extend(ext.clone());
    }
    write_json(&out.join(METRICS_FILE), &report)?;
    println!(
        "{method}: SSIM vs target {score:.4} ({:.2} s) -> {}",
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)` as a mask.
fn rect_mask(r: [f64; 4], h: usize, w: usize) -> Array2<bool> {
    let [x0, y0, x1, y1] = r;
    Array2::from_shape_fn((h, w), |(y, x)| {
        let (x, y) = (x as f64, y as f64);
        x >= x0 && x < x1 && y >= y0 && y < y1
    })
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let recon = load_magnitude(&a.recon)?;
    let target = load_magnitude(&a.target)?;
    if recon.dim() != target.dim() {
        return Err(Error::ShapeMismatch {
            expected: target.shape().to_vec(),
            actual: recon.shape().to_vec(),
        }
        .into());
    }
    let sp = SsimParams::default();
    let mut records = vec![MetricRecord::new("ssim", ssim(&recon, &target, &sp)?, sp)];
    let (_, h, w) = recon.dim();
    if let (Some(ra), Some(rb), Some(rn)) = (a.roi_a, a.roi_b, a.roi_noise) {
        let roi = RoiSpec {
            region_a: rect_mask(ra, h, w),
            region_b: rect_mask(rb, h, w),
            noise: rect_mask(rn, h, w),
        };
        roi.validate(h, w).map_err(usage)?;
        records.push(MetricRecord::new(
            "cnr",
            cnr(&recon, &roi)?,
            json!({"roi_a": ra, "roi_b": rb, "roi_noise": rn}),
        ));
    }
    if let Some([x0, y0, x1, y1]) = a.probe {
        let probe = EdgeProbe {
            start: [x0, y0],
            end: [x1, y1],
            samples: a.probe_samples,
            pixel_spacing: a.pixel_spacing,
        };
        probe.validate().map_err(usage)?;
        let t = temporal_std_es(&recon, &probe)?;
        let fitted: Vec<f64> = t.per_frame.iter().flatten().copied().collect();
        let mean = fitted.iter().sum::<f64>() / fitted.len() as f64;
        records.push(
            MetricRecord::new("edge_sharpness_mean", mean, probe).with_excluded(t.excluded_frames),
        );
        records.push(
            MetricRecord::new("temporal_std_es", t.value, probe).with_excluded(t.excluded_frames),
        );
    }
    let value = serde_json::to_value(&records)?;
    match &a.out {
        Some(path) => write_json(path, &value)?,
        None => println!("{}", serde_json::to_string_pretty(&value)?),
    }
    Ok(())
}

fn to_gray(frame: ndarray::ArrayView2<f64>) -> GrayImage {
    let (h, w) = frame.dim();
    GrayImage::from_fn(w as u32, h as u32, |x, y| {
        let v = frame[[y as usize, x as usize]];
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        image::Luma([(v * 255.0).round() as u8])
    })
}

pub fn preview(a: PreviewArgs) -> Result<()> {
    let video = load_magnitude(&a.input)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let frames: Vec<GrayImage> = video.axis_iter(Axis(0)).map(to_gray).collect();
    let digits = frames.len().to_string().len().max(3);
    for (t, img) in frames.iter().enumerate() {
        let path = a.out.join(format!("frame_{t:0digits$}.png"));
        img.save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if a.gif {
        let path = a.out.join("preview.gif");
        let file =
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut enc = GifEncoder::new(std::io::BufWriter::new(file));
        enc.set_repeat(Repeat::Infinite)?;
        for img in &frames {
            let rgba = RgbaImage::from_fn(img.width(), img.height(), |x, y| {
                let v = img.get_pixel(x, y)[0];
                image::Rgba([v, v, v, 255])
            });
            enc.encode_frame(Frame::from_parts(
                rgba,
                0,
                0,
                Delay::from_numer_denom_ms(a.delay_ms, 1),
            ))?;
        }
    }
    println!(
        "{} frame(s) -> {}{}",
        frames.len(),
        a.out.display(),
        if a.gif { " (+ preview.gif)" } else { "" }
    );
    Ok(())
}
