//! Conversions between stored containers (f32 / complex f32) and the f64
//! arrays the library computes with.

use anyhow::{bail, Context, Result};
use fracsynth::io::{read_array, ArrayData};
use fracsynth::kspace::rss_combine;
use fracsynth::ScalarVideo;
use ndarray::{ArrayD, Axis, Ix3, Ix4};
use num_complex::{Complex32, Complex64};
use std::path::Path;

pub fn widen_c(x: &ArrayD<Complex32>) -> ArrayD<Complex64> {
    x.mapv(|z| Complex64::new(z.re as f64, z.im as f64))
}

pub fn narrow_c<D: ndarray::Dimension>(x: &ndarray::Array<Complex64, D>) -> ArrayD<Complex32> {
    x.mapv(|z| Complex32::new(z.re as f32, z.im as f32))
        .into_dyn()
}

pub fn narrow_r<D: ndarray::Dimension>(x: &ndarray::Array<f64, D>) -> ArrayD<f32> {
    x.mapv(|v| v as f32).into_dyn()
}

/// Magnitude video `[t, y, x]` from any supported container layout:
/// real `[t,y,x]` or `[y,x]`, complex `[t,y,x]` (modulus) or `[coil,t,y,x]` (RSS).
pub fn load_magnitude(path: &Path) -> Result<ScalarVideo> {
    let data = read_array(path).with_context(|| format!("reading {}", path.display()))?;
    let shape = data.shape().to_vec();
    let video = match data {
        ArrayData::F32(a) => match a.ndim() {
            2 => a
                .mapv(f64::from)
                .insert_axis(Axis(0))
                .into_dimensionality::<Ix3>()?,
            3 => a.mapv(f64::from).into_dimensionality::<Ix3>()?,
            _ => bail!("{}: unsupported real array shape {shape:?}", path.display()),
        },
        ArrayData::C64(a) => match a.ndim() {
            3 => a.mapv(|z| z.norm() as f64).into_dimensionality::<Ix3>()?,
            4 => rss_combine(&widen_c(&a).into_dimensionality::<Ix4>()?),
            _ => bail!(
                "{}: unsupported complex array shape {shape:?}",
                path.display()
            ),
        },
    };
    Ok(video)
}
