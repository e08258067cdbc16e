//! Ground-truth rasters, synthetic fields, pooled sampling and camera
//! footprint geometry.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Point, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Ground sample distance of the reference orthomosaics, metres per pixel.
pub const DEFAULT_GSD: f64 = 0.0104;
/// Side of the square patch averaged into one pooled training sample.
pub const DEFAULT_PATCH_PX: usize = 150;

/// Grayscale ground-truth field. Values are in `[0, 1]`, 1 meaning weed.
#[derive(Debug, Clone, PartialEq)]
pub struct WeedRaster {
    width: usize,
    height: usize,
    values: Vec<f64>,
    gsd: f64,
}

impl WeedRaster {
    pub fn new(width: usize, height: usize, values: Vec<f64>, gsd: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("raster must have non-zero width and height"));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: width * height,
            });
        }
        if !(gsd > 0.0) || !gsd.is_finite() {
            return Err(Error::invalid("gsd must be positive"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("raster values must lie in [0, 1]"));
        }
        Ok(WeedRaster {
            width,
            height,
            values,
            gsd,
        })
    }

    /// Builds a raster from 8-bit intensities, scaling 255 to 1.0.
    pub fn from_u8(width: usize, height: usize, pixels: &[u8], gsd: f64) -> Result<Self> {
        let values = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
        Self::new(width, height, values, gsd)
    }

    pub fn constant(width: usize, height: usize, value: f64, gsd: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], gsd)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gsd(&self) -> f64 {
        self.gsd
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Side length of the mapped area in metres (along the raster width).
    pub fn map_size_m(&self) -> f64 {
        self.width as f64 * self.gsd
    }

    /// Value of the pixel containing a normalised map coordinate.
    pub fn sample(&self, p: Point) -> f64 {
        let col = pixel_index(p.x, self.width);
        let row = pixel_index(p.y, self.height);
        self.get(col, row)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Pixel bounds of a `size_px` square window centred on `centre`,
    /// clipped to the raster.
    pub fn window(&self, centre: Point, size_px: usize) -> PixelWindow {
        let (c0, c1) = window_1d(centre.x * self.width as f64, size_px, self.width);
        let (r0, r1) = window_1d(centre.y * self.height as f64, size_px, self.height);
        PixelWindow { c0, c1, r0, r1 }
    }

    fn window_mean(&self, w: &PixelWindow) -> f64 {
        let mut sum = 0.0;
        for row in w.r0..w.r1 {
            sum += self.values[row * self.width + w.c0..row * self.width + w.c1]
                .iter()
                .sum::<f64>();
        }
        sum / w.area() as f64
    }
}

fn pixel_index(v: f64, n: usize) -> usize {
    let i = (v * n as f64).floor();
    if i < 0.0 {
        0
    } else {
        (i as usize).min(n - 1)
    }
}

/// `[start, end)` of a `size` window centred at continuous pixel position `c`.
fn window_1d(c: f64, size: usize, n: usize) -> (usize, usize) {
    let start = (c - size as f64 / 2.0 + 0.5).floor() as i64;
    let start = start.min(n as i64 - 1);
    let end = start + size as i64;
    (start.max(0) as usize, end.clamp(1, n as i64) as usize)
}

/// Half-open pixel rectangle `[c0, c1) × [r0, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelWindow {
    pub c0: usize,
    pub c1: usize,
    pub r0: usize,
    pub r1: usize,
}

impl PixelWindow {
    pub fn area(&self) -> usize {
        (self.c1 - self.c0) * (self.r1 - self.r0)
    }
}

/// A pooled training sample: location in the unit square and mean weed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub pos: Point,
    pub value: f64,
}

impl Observation {
    pub fn new(x: f64, y: f64, value: f64) -> Self {
        Observation {
            pos: Point::new(x, y),
            value,
        }
    }
}

/// One Gaussian-profile blob of a synthetic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub centre: Point,
    /// Standard deviation of the profile in normalised units.
    pub radius: f64,
    pub amplitude: f64,
}

/// Recipe for a synthetic ground-truth field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub width: usize,
    pub height: usize,
    pub gsd: f64,
    pub blobs: Vec<Blob>,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise: f64,
}

impl FieldSpec {
    /// `count` blobs with random centres, radii in `radius_range` and unit
    /// amplitude.
    pub fn random_blobs(
        res: usize,
        gsd: f64,
        count: usize,
        radius_range: (f64, f64),
        noise: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blobs = (0..count)
            .map(|_| Blob {
                centre: Point::new(rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)),
                radius: rng.random_range(radius_range.0..=radius_range.1),
                amplitude: 1.0,
            })
            .collect();
        FieldSpec {
            width: res,
            height: res,
            gsd,
            blobs,
            noise,
        }
    }
}

/// Renders a synthetic field: the pointwise maximum of the blob profiles plus
/// clamped Gaussian noise. Deterministic for a fixed seed.
pub fn synth_field(spec: &FieldSpec, seed: u64) -> Result<WeedRaster> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::invalid("synthetic field needs non-zero dimensions"));
    }
    if !(spec.noise >= 0.0) {
        return Err(Error::invalid("noise level must be non-negative"));
    }
    for b in &spec.blobs {
        if !b.centre.in_unit_square() || !(b.radius > 0.0) {
            return Err(Error::invalid("blob centres must be in the unit square with radius > 0"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE))
        .map_err(|_| Error::invalid("bad noise level"))?;
    let mut values = Vec::with_capacity(spec.width * spec.height);
    for row in 0..spec.height {
        for col in 0..spec.width {
            let p = Point::new(
                (col as f64 + 0.5) / spec.width as f64,
                (row as f64 + 0.5) / spec.height as f64,
            );
            let mut v = spec
                .blobs
                .iter()
                .map(|b| b.amplitude * (-p.dist2(b.centre) / (2.0 * b.radius * b.radius)).exp())
                .fold(0.0, f64::max);
            if spec.noise > 0.0 {
                v += noise.sample(&mut rng);
            }
            values.push(v.clamp(0.0, 1.0));
        }
    }
    WeedRaster::new(spec.width, spec.height, values, spec.gsd)
}

/// Uniformly scattered points, each valued by the mean of the clipped
/// `patch_px` square around it.
pub fn pooled_samples(
    raster: &WeedRaster,
    n: usize,
    patch_px: usize,
    seed: u64,
) -> Result<Vec<Observation>> {
    if n == 0 || patch_px == 0 {
        return Err(Error::invalid("pooled sampling needs n >= 1 and patch_px >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let p = Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let w = raster.window(p, patch_px);
            Observation {
                pos: p,
                value: raster.window_mean(&w),
            }
        })
        .collect())
}

fn check_footprint_inputs(altitude: f64, fov_deg: f64, gsd: f64) -> Result<()> {
    if !(altitude > 0.0) || !(gsd > 0.0) || !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::invalid(
            "footprint needs altitude > 0, 0 < fov < 180 degrees and gsd > 0",
        ));
    }
    Ok(())
}

/// Unrounded pixels per side of a square camera footprint,
/// `2 H tan(FOV / 2) / GSD`.
pub fn footprint_extent_px(altitude: f64, fov_deg: f64, gsd: f64) -> Result<f64> {
    check_footprint_inputs(altitude, fov_deg, gsd)?;
    Ok(2.0 * altitude * (fov_deg.to_radians() / 2.0).tan() / gsd)
}

/// Footprint side in whole pixels (at least one).
pub fn footprint_px(altitude: f64, fov_deg: f64, gsd: f64) -> Result<usize> {
    let n = footprint_extent_px(altitude, fov_deg, gsd)?;
    Ok((n.round() as usize).max(1))
}

/// A camera footprint cut from the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub window: PixelWindow,
    /// Row-major in-bounds pixel values of the window.
    pub patch: Vec<f64>,
    pub mean: f64,
}

pub fn extract_footprint(raster: &WeedRaster, centre: Point, size_px: usize) -> Result<Footprint> {
    if !centre.in_unit_square() {
        return Err(Error::invalid("footprint centre must be in the unit square"));
    }
    if size_px == 0 {
        return Err(Error::invalid("footprint size must be at least one pixel"));
    }
    let w = raster.window(centre, size_px);
    let mut patch = Vec::with_capacity(w.area());
    for row in w.r0..w.r1 {
        patch.extend_from_slice(&raster.values[row * raster.width + w.c0..row * raster.width + w.c1]);
    }
    let (lo, hi) = patch.iter().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let mean = (patch.iter().sum::<f64>() / patch.len() as f64).clamp(lo, hi);
    Ok(Footprint {
        window: w,
        patch,
        mean,
    })
}

/// Binary grid of already-sensed cells over the unit square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl CoverageMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        Ok(CoverageMask {
            width,
            height,
            bits: alloc::vec![false; width * height],
        })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        let mut m = Self::new(width, height)?;
        m.bits.iter_mut().for_each(|b| *b = true);
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize) {
        self.bits[row * self.width + col] = true;
    }

    /// Whether the cell under a normalised coordinate is covered.
    pub fn at(&self, p: Point) -> bool {
        self.get(pixel_index(p.x, self.width), pixel_index(p.y, self.height))
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    /// Marks every cell of the `size_px` square centred on `pose`.
    pub fn apply(&mut self, pose: Point, size_px: usize) {
        let (c0, c1) = window_1d(pose.x * self.width as f64, size_px, self.width);
        let (r0, r1) = window_1d(pose.y * self.height as f64, size_px, self.height);
        for r in r0..r1 {
            self.bits[r * self.width + c0..r * self.width + c1].iter_mut().for_each(|b| *b = true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_and_half(res: usize) -> WeedRaster {
        let values = (0..res * res)
            .map(|i| if i % res < res / 2 { 0.0 } else { 1.0 })
            .collect();
        WeedRaster::new(res, res, values, DEFAULT_GSD).unwrap()
    }

    #[test]
    fn u8_scaling() {
        let r = WeedRaster::from_u8(2, 1, &[0, 255], DEFAULT_GSD).unwrap();
        assert_eq!(r.values(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_bad_rasters() {
        assert!(WeedRaster::new(0, 3, vec![], 0.01).is_err());
        assert!(WeedRaster::new(1, 1, vec![1.5], 0.01).is_err());
        assert!(WeedRaster::new(1, 1, vec![0.5], 0.0).is_err());
        assert!(WeedRaster::new(2, 1, vec![0.5], 0.01).is_err());
    }

    #[test]
    fn synth_zero_blobs_is_zero() {
        let spec = FieldSpec {
            width: 16,
            height: 16,
            gsd: 0.1,
            blobs: vec![],
            noise: 0.0,
        };
        let r = synth_field(&spec, 1).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synth_blob_peaks_at_centre() {
        let spec = FieldSpec {
            width: 33,
            height: 33,
            gsd: 0.1,
            blobs: vec![Blob {
                centre: Point::new(0.5, 0.5),
                radius: 0.1,
                amplitude: 1.0,
            }],
            noise: 0.0,
        };
        let r = synth_field(&spec, 0).unwrap();
        let (argmax, _) = r
            .values()
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(argmax, 16 * 33 + 16);
    }

    #[test]
    fn synth_is_deterministic_and_rejects_empty() {
        let spec = FieldSpec::random_blobs(32, 0.1, 3, (0.05, 0.1), 0.05, 9);
        assert_eq!(synth_field(&spec, 4).unwrap(), synth_field(&spec, 4).unwrap());
        let empty = FieldSpec {
            width: 0,
            ..spec
        };
        assert!(synth_field(&empty, 4).is_err());
    }

    #[test]
    fn pooled_constant_and_single_pixel() {
        let r = WeedRaster::constant(20, 20, 0.25, DEFAULT_GSD).unwrap();
        for o in pooled_samples(&r, 30, 7, 3).unwrap() {
            assert_eq!(o.value, 0.25);
        }
        let spec = FieldSpec::random_blobs(24, 0.1, 2, (0.05, 0.2), 0.1, 1);
        let r = synth_field(&spec, 2).unwrap();
        for o in pooled_samples(&r, 50, 1, 8).unwrap() {
            assert_eq!(o.value, r.sample(o.pos));
        }
    }

    #[test]
    fn pooled_patch_straddling_edge_is_half() {
        let r = half_and_half(40);
        // A 10 px window centred on the boundary column 20.
        let w = r.window(Point::new(0.5, 0.5), 10);
        assert_eq!((w.c0, w.c1), (15, 25));
        // Direct pixel-average oracle.
        let mut s = 0.0;
        for row in w.r0..w.r1 {
            for col in w.c0..w.c1 {
                s += r.get(col, row);
            }
        }
        assert_eq!(s / w.area() as f64, 0.5);
        assert_eq!(r.window_mean(&w), 0.5);
    }

    #[test]
    fn footprint_sizes() {
        assert_eq!(footprint_px(7.0, 33.0, DEFAULT_GSD).unwrap(), 399);
        assert_eq!(footprint_px(0.0052, 90.0, 0.0104).unwrap(), 1);
        let a = footprint_extent_px(3.0, 40.0, 0.01).unwrap();
        let b = footprint_extent_px(6.0, 40.0, 0.01).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9);
        assert!(footprint_px(0.0, 33.0, 0.01).is_err());
        assert!(footprint_px(1.0, 180.0, 0.01).is_err());
        assert!(footprint_px(1.0, 30.0, -1.0).is_err());
    }

    #[test]
    fn mask_footprints() {
        let mut m = CoverageMask::new(256, 256).unwrap();
        m.apply(Point::new(0.5, 0.5), 128);
        assert_eq!(m.count(), 256 * 256 / 4);
        let once = m.clone();
        m.apply(Point::new(0.5, 0.5), 128);
        assert_eq!(m, once);
        m.apply(Point::new(0.2, 0.9), 600);
        assert_eq!(m.fraction(), 1.0);
    }

    #[test]
    fn footprint_means() {
        let r = WeedRaster::constant(30, 30, 0.4, 0.1).unwrap();
        assert_eq!(extract_footprint(&r, Point::new(0.3, 0.7), 9).unwrap().mean, 0.4);

        let spec = FieldSpec::random_blobs(30, 0.1, 3, (0.05, 0.2), 0.1, 5);
        let r = synth_field(&spec, 5).unwrap();
        let full = extract_footprint(&r, Point::new(0.5, 0.5), 30).unwrap();
        assert!((full.mean - r.mean()).abs() < 1e-12);

        // Corner-centred: only the top-left 5×5 survives clipping of a 10 px window.
        let fp = extract_footprint(&r, Point::new(0.0, 0.0), 10).unwrap();
        assert_eq!(fp.window, PixelWindow { c0: 0, c1: 5, r0: 0, r1: 5 });
        let mut s = 0.0;
        for row in 0..5 {
            for col in 0..5 {
                s += r.get(col, row);
            }
        }
        assert!((fp.mean - s / 25.0).abs() < 1e-12);
    }

    #[test]
    fn footprint_at_far_corner_is_not_empty() {
        let r = WeedRaster::constant(8, 8, 1.0, 0.1).unwrap();
        let fp = extract_footprint(&r, Point::new(1.0, 1.0), 1).unwrap();
        assert_eq!(fp.window.area(), 1);
    }
}
