//! Quaternion Julia iteration fields and the Mandelbrot catalogue of `c`
//! parameters.
//!
//! A grid point `(x, y, z, t)` seeds the orbit `q0 = x + y i + z j + t k`,
//! which is iterated as `q_n = q_{n-1}^2 + c` until `|q_n| > 4`. The pixel
//! value is the first `n` at which the orbit escapes, or `max_iter` if it never
//! does. The Mandelbrot variant fixes `q0 = 0` and varies `c` over the grid.

use std::path::Path;

use ndarray::{Array3, Array4, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use crate::ScalarVideo;

/// Uniform, endpoint-inclusive sampling of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis1 {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis1 {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    /// Coordinate of sample `i`. A single-sample axis sits at its midpoint.
    pub fn coord(&self, i: usize) -> f64 {
        if self.count == 1 {
            0.5 * (self.lo + self.hi)
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.coord(i)).collect()
    }
}

/// 4D sampling grid over `(X, Y, Z, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec4 {
    pub x: Axis1,
    pub y: Axis1,
    pub z: Axis1,
    pub t: Axis1,
}

impl GridSpec4 {
    /// Grid over the standard extents `[-1,1] x [-1,1] x [-0.5,0.5] x [-0.2,0.2]`.
    pub fn with_counts(nx: usize, ny: usize, nz: usize, nt: usize) -> Self {
        Self {
            x: Axis1::new(-1.0, 1.0, nx),
            y: Axis1::new(-1.0, 1.0, ny),
            z: Axis1::new(-0.5, 0.5, nz),
            t: Axis1::new(-0.2, 0.2, nt),
        }
    }

    /// Same number of samples on every axis.
    pub fn uniform(n: usize) -> Self {
        Self::with_counts(n, n, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("x", self.x), ("y", self.y), ("z", self.z), ("t", self.t)] {
            if a.count == 0 {
                return Err(Error::InvalidConfig(format!(
                    "grid axis {name} has no samples"
                )));
            }
            if !(a.lo.is_finite() && a.hi.is_finite()) || a.lo > a.hi {
                return Err(Error::InvalidConfig(format!(
                    "grid axis {name} has a bad extent"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.count * self.y.count * self.z.count * self.t.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationParams {
    pub max_iter: u32,
    pub escape_threshold: f64,
}

impl Default for IterationParams {
    fn default() -> Self {
        Self {
            max_iter: 100,
            escape_threshold: 4.0,
        }
    }
}

impl IterationParams {
    pub fn with_max_iter(max_iter: u32) -> Self {
        Self {
            max_iter,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter <= CATALOGUE_RANGE.1 {
            return Err(Error::InvalidConfig(format!(
                "max_iter must exceed {}, got {}",
                CATALOGUE_RANGE.1, self.max_iter
            )));
        }
        if !(self.escape_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "escape threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Default Mandelbrot count band that yields structurally rich Julia fields.
pub const CATALOGUE_RANGE: (u32, u32) = (10, 30);

/// Default samples per axis for the Mandelbrot scan.
pub const DEFAULT_SCAN_SAMPLES: usize = 17;

/// Escape count of the orbit of `q0` under `q -> q^2 + c`.
///
/// Returns the smallest `n >= 1` with `|q_n| > threshold`, or `max_iter`.
#[inline]
pub fn julia_iterations(q0: Quaternion, c: Quaternion, params: &IterationParams) -> u32 {
    let bound = params.escape_threshold * params.escape_threshold;
    let mut q = q0;
    for n in 1..=params.max_iter {
        q = q.square() + c;
        if q.norm_sqr() > bound {
            return n;
        }
    }
    params.max_iter
}

#[inline]
pub fn mandelbrot_iterations(c: Quaternion, params: &IterationParams) -> u32 {
    julia_iterations(Quaternion::ZERO, c, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub c: Quaternion,
    pub count: u32,
}

/// `c` values whose Mandelbrot count lies in `range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCatalogue {
    pub range: [u32; 2],
    pub max_iter: u32,
    pub entries: Vec<CatalogueEntry>,
}

impl CCatalogue {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry assigned to dataset example `index` (round robin).
    pub fn pick(&self, index: usize) -> &CatalogueEntry {
        &self.entries[index % self.entries.len()]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cat: CCatalogue = serde_json::from_str(&text)?;
        if cat.entries.is_empty() {
            return Err(Error::EmptyCatalogue {
                lo: cat.range[0],
                hi: cat.range[1],
            });
        }
        Ok(cat)
    }
}

/// Scan the grid as Mandelbrot parameter space (`c = x + y i + z j + t k`) and
/// keep every point whose count lies in `[lo, hi]`.
///
/// Entries are ordered row-major over `(x, y, z, t)`, with `t` fastest.
pub fn scan_c_catalogue(
    grid: &GridSpec4,
    params: &IterationParams,
    (lo, hi): (u32, u32),
) -> Result<CCatalogue> {
    grid.validate()?;
    if lo > hi || hi > params.max_iter {
        return Err(Error::InvalidConfig(format!(
            "catalogue range [{lo}, {hi}] must satisfy lo <= hi <= max_iter ({})",
            params.max_iter
        )));
    }
    let (xs, ys, zs, ts) = (
        grid.x.coords(),
        grid.y.coords(),
        grid.z.coords(),
        grid.t.coords(),
    );
    let per_x: Vec<Vec<CatalogueEntry>> = xs
        .par_iter()
        .map(|&x| {
            let mut out = Vec::new();
            for &y in &ys {
                for &z in &zs {
                    for &t in &ts {
                        let c = Quaternion::new(x, y, z, t);
                        let count = mandelbrot_iterations(c, params);
                        if (lo..=hi).contains(&count) {
                            out.push(CatalogueEntry { c, count });
                        }
                    }
                }
            }
            out
        })
        .collect();
    let entries: Vec<_> = per_x.into_iter().flatten().collect();
    if entries.is_empty() {
        return Err(Error::EmptyCatalogue { lo, hi });
    }
    Ok(CCatalogue {
        range: [lo, hi],
        max_iter: params.max_iter,
        entries,
    })
}

/// Iteration field on the `z = 0` plane: `nt` frames of `ny x nx` counts.
///
/// `out[[ti, yi, xi]] = julia_iterations((x, y, 0, t), c)`. The `z` axis of the
/// grid is ignored.
pub fn render_julia_slice(
    c: Quaternion,
    grid: &GridSpec4,
    params: &IterationParams,
) -> ScalarVideo {
    let (xs, ys, ts) = (grid.x.coords(), grid.y.coords(), grid.t.coords());
    let mut out = Array3::<f64>::zeros((ts.len(), ys.len(), xs.len()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(ts.par_iter())
        .for_each(|(mut frame, &t)| {
            for (yi, &y) in ys.iter().enumerate() {
                for (xi, &x) in xs.iter().enumerate() {
                    let q0 = Quaternion::new(x, y, 0.0, t);
                    frame[[yi, xi]] = julia_iterations(q0, c, params) as f64;
                }
            }
        });
    out
}

/// Full 4D iteration field indexed `[t, z, y, x]`.
pub fn render_julia_volume(
    c: Quaternion,
    grid: &GridSpec4,
    params: &IterationParams,
) -> Array4<f64> {
    let (xs, ys, zs, ts) = (
        grid.x.coords(),
        grid.y.coords(),
        grid.z.coords(),
        grid.t.coords(),
    );
    let mut out = Array4::<f64>::zeros((ts.len(), zs.len(), ys.len(), xs.len()));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(ts.par_iter())
        .for_each(|(mut vol, &t)| {
            for (zi, &z) in zs.iter().enumerate() {
                for (yi, &y) in ys.iter().enumerate() {
                    for (xi, &x) in xs.iter().enumerate() {
                        let q0 = Quaternion::new(x, y, z, t);
                        vol[[zi, yi, xi]] = julia_iterations(q0, c, params) as f64;
                    }
                }
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p100() -> IterationParams {
        IterationParams::with_max_iter(100)
    }

    #[test]
    fn julia_hand_vectors() {
        let p = p100();
        assert_eq!(
            julia_iterations(Quaternion::new(2.0, 0.0, 0.0, 0.0), Quaternion::ZERO, &p),
            2
        );
        assert_eq!(
            julia_iterations(Quaternion::ZERO, Quaternion::ZERO, &p),
            100
        );
        assert_eq!(
            julia_iterations(Quaternion::new(5.0, 0.0, 0.0, 0.0), Quaternion::ZERO, &p),
            1
        );
    }

    #[test]
    fn mandelbrot_hand_vectors() {
        let p = p100();
        assert_eq!(mandelbrot_iterations(Quaternion::ZERO, &p), 100);
        assert_eq!(mandelbrot_iterations(Quaternion::ONE, &p), 3);
        assert_eq!(
            mandelbrot_iterations(Quaternion::new(-1.0, 0.0, 0.0, 0.0), &p),
            100
        );
    }

    fn single_point_grid(c: Quaternion) -> GridSpec4 {
        GridSpec4 {
            x: Axis1::new(c.w, c.w, 1),
            y: Axis1::new(c.x, c.x, 1),
            z: Axis1::new(c.y, c.y, 1),
            t: Axis1::new(c.z, c.z, 1),
        }
    }

    #[test]
    fn scan_rejects_points_outside_band() {
        for c in [Quaternion::new(-1.0, 0.0, 0.0, 0.0), Quaternion::ONE] {
            let err =
                scan_c_catalogue(&single_point_grid(c), &p100(), CATALOGUE_RANGE).unwrap_err();
            assert!(matches!(err, Error::EmptyCatalogue { lo: 10, hi: 30 }));
        }
    }

    #[test]
    fn scan_rejects_bad_range() {
        let g = GridSpec4::uniform(3);
        assert!(matches!(
            scan_c_catalogue(&g, &p100(), (30, 10)),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            scan_c_catalogue(&g, &p100(), (10, 101)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn default_scan_is_banded() {
        let cat = scan_c_catalogue(
            &GridSpec4::uniform(DEFAULT_SCAN_SAMPLES),
            &p100(),
            CATALOGUE_RANGE,
        )
        .unwrap();
        assert!(!cat.is_empty());
        assert!(cat.entries.iter().all(|e| (10..=30).contains(&e.count)));
        for e in &cat.entries {
            assert_eq!(mandelbrot_iterations(e.c, &p100()), e.count);
        }
    }

    #[test]
    fn catalogue_json_layout() {
        let cat = CCatalogue {
            range: [10, 30],
            max_iter: 100,
            entries: vec![CatalogueEntry {
                c: Quaternion::new(0.25, -0.5, 0.0, 0.125),
                count: 12,
            }],
        };
        let v: serde_json::Value = serde_json::to_value(&cat).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "range": [10, 30],
                "max_iter": 100,
                "entries": [{"c": [0.25, -0.5, 0.0, 0.125], "count": 12}]
            })
        );
    }

    #[test]
    fn slice_corner_matches_scalar_reference() {
        // 3x3 grid: the (x, y) = (1, 1) corner starts at q0 = 1 + i.
        let grid = GridSpec4::with_counts(3, 3, 1, 1);
        let c = Quaternion::ONE;
        let img = render_julia_slice(c, &grid, &p100());
        // Independent reference: explicit component recurrence.
        let reference = {
            let (mut w, mut x, mut y, mut z) = (1.0f64, 1.0f64, 0.0f64, 0.0f64);
            let mut n = 0;
            loop {
                n += 1;
                let nw = w * w - x * x - y * y - z * z + 1.0;
                let (nx, ny, nz) = (2.0 * w * x, 2.0 * w * y, 2.0 * w * z);
                (w, x, y, z) = (nw, nx, ny, nz);
                if (w * w + x * x + y * y + z * z).sqrt() > 4.0 || n == 100 {
                    break n;
                }
            }
        };
        assert_eq!(reference, 2);
        assert_eq!(img[[0, 2, 2]], reference as f64);
    }

    #[test]
    fn slice_equals_volume_center_plane() {
        let grid = GridSpec4::with_counts(9, 7, 5, 3);
        let c = Quaternion::new(-0.2, 0.6, 0.1, -0.05);
        let slice = render_julia_slice(c, &grid, &p100());
        let vol = render_julia_volume(c, &grid, &p100());
        // z has 5 samples over [-0.5, 0.5]; index 2 is z = 0.
        assert_eq!(slice, vol.index_axis(Axis(1), 2));
    }

    #[test]
    fn center_pixel_is_mandelbrot_count() {
        let grid = GridSpec4::with_counts(5, 5, 1, 3);
        let img = render_julia_slice(Quaternion::ZERO, &grid, &p100());
        assert_eq!(img[[1, 2, 2]], 100.0);
    }

    fn scalar_count(b: f64, a: f64, max_iter: u32) -> u32 {
        let mut x = b;
        for n in 1..=max_iter {
            x = x * x + a;
            if x.abs() > 4.0 {
                return n;
            }
        }
        max_iter
    }

    proptest! {
        #[test]
        fn julia_center_identity(c in prop::array::uniform4(-1.0f64..1.0)) {
            let c = Quaternion::from(c);
            prop_assert_eq!(julia_iterations(Quaternion::ZERO, c, &p100()), mandelbrot_iterations(c, &p100()));
        }

        #[test]
        fn real_axis_matches_scalar_iteration(a in -2.5f64..1.0, b in -2.5f64..2.5) {
            let got = julia_iterations(Quaternion::new(b, 0.0, 0.0, 0.0), Quaternion::new(a, 0.0, 0.0, 0.0), &p100());
            prop_assert_eq!(got, scalar_count(b, a, 100));
        }

        #[test]
        fn escape_monotone_in_max_iter(q in prop::array::uniform4(-1.5f64..1.5), c in prop::array::uniform4(-1.0f64..1.0)) {
            let (q, c) = (Quaternion::from(q), Quaternion::from(c));
            let small = julia_iterations(q, c, &IterationParams::with_max_iter(40));
            let large = julia_iterations(q, c, &IterationParams::with_max_iter(200));
            if small < 40 {
                prop_assert_eq!(small, large);
            } else {
                prop_assert!(large >= 40);
            }
        }
    }
}
