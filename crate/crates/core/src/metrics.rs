//! Fidelity metrics between fields, mission metrics against ground truth,
//! field features and the composite-score / rank-correlation analysis.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Not;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gp::GpModel;
use crate::partition::{rasterize, Field, Partition};
use crate::raster::{CoverageMask, WeedRaster};
use crate::{Error, Point, Result};

pub const SSIM_WINDOW: usize = 7;
const SSIM_C1: f64 = 1e-4;
const SSIM_C2: f64 = 9e-4;
pub const DEFAULT_HASH_BITS: usize = 4096;
pub const DEFAULT_WEED_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DBSCAN_EPS: f64 = 5.0;
pub const DEFAULT_DBSCAN_MIN_PTS: usize = 10;
pub const DEFAULT_RMSE_SAMPLES: usize = 5000;

fn same_dims(a: &Field, b: &Field) -> Result<()> {
    if a.res() != b.res() {
        return Err(Error::DimensionMismatch {
            left: a.res(),
            right: b.res(),
        });
    }
    Ok(())
}

/// Summed-area table with a zero first row and column.
struct Integral {
    w: usize,
    t: Vec<f64>,
}

impl Integral {
    fn new(res: usize, f: impl Fn(usize) -> f64) -> Self {
        let w = res + 1;
        let mut t = vec![0.0; w * w];
        for r in 0..res {
            let mut row = 0.0;
            for c in 0..res {
                row += f(r * res + c);
                t[(r + 1) * w + c + 1] = t[r * w + c + 1] + row;
            }
        }
        Integral { w, t }
    }

    fn sum(&self, c: usize, r: usize, k: usize) -> f64 {
        let w = self.w;
        self.t[(r + k) * w + c + k] - self.t[r * w + c + k] - self.t[(r + k) * w + c] + self.t[r * w + c]
    }
}

/// Mean SSIM over all fully contained 7×7 windows (uniform weights, sample
/// statistics, dynamic range 1). Grids smaller than the window use one
/// window covering everything.
pub fn ssim(a: &Field, b: &Field) -> Result<f64> {
    same_dims(a, b)?;
    let res = a.res();
    let k = SSIM_WINDOW.min(res);
    let (va, vb) = (a.values(), b.values());
    let sa = Integral::new(res, |i| va[i]);
    let sb = Integral::new(res, |i| vb[i]);
    let saa = Integral::new(res, |i| va[i] * va[i]);
    let sbb = Integral::new(res, |i| vb[i] * vb[i]);
    let sab = Integral::new(res, |i| va[i] * vb[i]);
    let n = (k * k) as f64;
    let dof = if k * k > 1 { n - 1.0 } else { 1.0 };
    let mut total = 0.0;
    let mut windows = 0usize;
    for r in 0..=res - k {
        for c in 0..=res - k {
            let (xa, xb) = (sa.sum(c, r, k), sb.sum(c, r, k));
            let (ma, mb) = (xa / n, xb / n);
            let var_a = (saa.sum(c, r, k) - xa * xa / n) / dof;
            let var_b = (sbb.sum(c, r, k) - xb * xb / n) / dof;
            let cov = (sab.sum(c, r, k) - xa * xb / n) / dof;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
            total += num / den;
            windows += 1;
        }
    }
    Ok(total / windows as f64)
}

/// Fixed-length bit vector produced by [`perceptual_hash`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitHash {
    len: usize,
    words: Vec<u64>,
}

impl BitHash {
    fn zeros(len: usize) -> Self {
        BitHash {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }
}

impl Not for &BitHash {
    type Output = BitHash;

    fn not(self) -> BitHash {
        let mut h = BitHash::zeros(self.len);
        for i in 0..self.len {
            if !self.get(i) {
                h.set(i);
            }
        }
        h
    }
}

/// DCT perceptual hash: the field is resampled to `4·side` pixels, the
/// low-frequency `side × side` block of its 2-D DCT-II is kept and each
/// coefficient becomes one bit (above the block median or not).
/// `hash_bits = side²` must be a perfect square.
pub fn perceptual_hash(a: &Field, hash_bits: usize) -> Result<BitHash> {
    let side = (hash_bits as f64).sqrt().round() as usize;
    if hash_bits == 0 || side * side != hash_bits {
        return Err(Error::invalid("hash length must be a positive perfect square"));
    }
    let m = 4 * side;
    let src = a.values();
    let res = a.res();
    let img: Vec<f64> = (0..m * m)
        .map(|i| {
            let (c, r) = Point::pixel_centre(i % m, i / m, m).pixel(res);
            src[r * res + c]
        })
        .collect();
    let basis: Vec<f64> = (0..side * m)
        .map(|i| {
            let (k, x) = (i / m, i % m);
            (core::f64::consts::PI * (2 * x + 1) as f64 * k as f64 / (2 * m) as f64).cos()
        })
        .collect();
    // rows: tmp[r][k] = Σ_x img[r][x] cos(..k..x)
    let mut tmp = vec![0.0; m * side];
    for r in 0..m {
        for k in 0..side {
            let b = &basis[k * m..(k + 1) * m];
            tmp[r * side + k] = (0..m).map(|x| img[r * m + x] * b[x]).sum();
        }
    }
    let mut block = vec![0.0; side * side];
    for ky in 0..side {
        let b = &basis[ky * m..(ky + 1) * m];
        for kx in 0..side {
            block[ky * side + kx] = (0..m).map(|r| tmp[r * side + kx] * b[r]).sum();
        }
    }
    let mut sorted = block.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let mut h = BitHash::zeros(hash_bits);
    for (i, &v) in block.iter().enumerate() {
        if v > median {
            h.set(i);
        }
    }
    Ok(h)
}

pub fn hamming(h1: &BitHash, h2: &BitHash) -> Result<usize> {
    if h1.len != h2.len {
        return Err(Error::DimensionMismatch {
            left: h1.len,
            right: h2.len,
        });
    }
    Ok(h1
        .words
        .iter()
        .zip(&h2.words)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum())
}

/// Mean squared per-pixel difference on the unit value scale.
pub fn mse(a: &Field, b: &Field) -> Result<f64> {
    same_dims(a, b)?;
    let s: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(s / a.values().len() as f64)
}

/// Fidelity of a partition against its source field. Build time is filled in
/// by the caller, who owns the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub ssim_complement: f64,
    pub hamming: usize,
    pub mse: f64,
    pub build_time_s: f64,
    pub memory_bytes: usize,
}

pub fn fidelity(reference: &Field, p: &Partition, hash_bits: usize) -> Result<FidelityReport> {
    let rendered = rasterize(p, reference.res())?;
    Ok(FidelityReport {
        ssim_complement: 1.0 - ssim(reference, &rendered)?,
        hamming: hamming(&perceptual_hash(reference, hash_bits)?, &perceptual_hash(&rendered, hash_bits)?)?,
        mse: mse(reference, &rendered)?,
        build_time_s: 0.0,
        memory_bytes: p.serialized_bytes(),
    })
}

/// RMSE between the GP mean and the truth at `n` uniform random locations.
pub fn rmse_vs_truth(model: &GpModel, truth: &WeedRaster, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("rmse needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0.0;
    for _ in 0..n {
        let p = Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let d = model.predict_mean(p) - truth.sample(p);
        s += d * d;
    }
    Ok((s / n as f64).sqrt())
}

/// Mean latent predictive variance over the pixel centres of a square grid.
pub fn mean_uncertainty(model: &GpModel, grid_res: usize) -> Result<f64> {
    if grid_res == 0 {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let mut s = 0.0;
    for r in 0..grid_res {
        for c in 0..grid_res {
            s += model.predict_one(Point::pixel_centre(c, r, grid_res)).1;
        }
    }
    Ok(s / (grid_res * grid_res) as f64)
}

/// `(weed coverage, map coverage)`: observed weed pixels over all weed pixels
/// (1 when there are none) and observed pixels over all pixels.
pub fn coverage(mask: &CoverageMask, truth: &WeedRaster, weed_threshold: f64) -> Result<(f64, f64)> {
    if mask.width() != truth.width() || mask.height() != truth.height() {
        return Err(Error::DimensionMismatch {
            left: mask.width() * mask.height(),
            right: truth.width() * truth.height(),
        });
    }
    let (mut weeds, mut seen) = (0usize, 0usize);
    for (v, &b) in truth.values().iter().zip(mask.bits()) {
        if *v > weed_threshold {
            weeds += 1;
            seen += b as usize;
        }
    }
    let weed_cov = if weeds == 0 { 1.0 } else { seen as f64 / weeds as f64 };
    Ok((weed_cov, mask.fraction()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldFeatures {
    pub weed_coverage_ratio: f64,
    pub num_weed_patches: usize,
    pub largest_patch_fraction: f64,
    pub avg_patch_size: f64,
    pub patch_size_std: f64,
    pub dbscan_num_clusters: usize,
    pub dbscan_avg_cluster_size: f64,
}

impl FieldFeatures {
    pub const NAMES: [&'static str; 7] = [
        "weed_coverage_ratio",
        "num_weed_patches",
        "largest_patch_fraction",
        "avg_patch_size",
        "patch_size_std",
        "dbscan_num_clusters",
        "dbscan_avg_cluster_size",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.weed_coverage_ratio,
            self.num_weed_patches as f64,
            self.largest_patch_fraction,
            self.avg_patch_size,
            self.patch_size_std,
            self.dbscan_num_clusters as f64,
            self.dbscan_avg_cluster_size,
        ]
    }
}

/// Sizes of the 8-connected components of `mask` (row-major, `w` wide).
pub fn component_sizes(mask: &[bool], w: usize) -> Vec<usize> {
    let h = mask.len() / w.max(1);
    let mut seen = vec![false; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (c, r) = ((i % w) as isize, (i / w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (cc, rr) = (c + dc, r + dr);
                    if cc < 0 || rr < 0 || cc >= w as isize || rr >= h as isize {
                        continue;
                    }
                    let j = rr as usize * w + cc as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

/// DBSCAN over the set pixels of `mask` with Euclidean radius `eps` (pixels,
/// inclusive) and `min_pts` counting the point itself. Returns cluster sizes
/// including border points.
pub fn dbscan_sizes(mask: &[bool], w: usize, eps: f64, min_pts: usize) -> Vec<usize> {
    let h = mask.len() / w.max(1);
    let reach = eps.floor() as isize;
    let offsets: Vec<(isize, isize)> = (-reach..=reach)
        .flat_map(|dr| (-reach..=reach).map(move |dc| (dc, dr)))
        .filter(|&(dc, dr)| ((dc * dc + dr * dr) as f64) <= eps * eps)
        .collect();
    let neighbours = |i: usize| {
        let (c, r) = ((i % w) as isize, (i / w) as isize);
        offsets.iter().filter_map(move |&(dc, dr)| {
            let (cc, rr) = (c + dc, r + dr);
            if cc < 0 || rr < 0 || cc >= w as isize || rr >= h as isize {
                return None;
            }
            let j = rr as usize * w + cc as usize;
            mask[j].then_some(j)
        })
    };
    let core: Vec<bool> = (0..mask.len())
        .map(|i| mask[i] && neighbours(i).count() >= min_pts)
        .collect();
    const UNSET: usize = usize::MAX;
    let mut cluster = vec![UNSET; mask.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !core[start] || cluster[start] != UNSET {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        cluster[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            if !core[i] {
                continue;
            }
            for j in neighbours(i) {
                if cluster[j] == UNSET {
                    cluster[j] = id;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

fn mean_std(xs: &[usize]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<usize>() as f64 / n;
    let v = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

pub fn field_features(
    truth: &WeedRaster,
    weed_threshold: f64,
    dbscan_eps: f64,
    dbscan_min_pts: usize,
) -> Result<FieldFeatures> {
    if !weed_threshold.is_finite() || !(dbscan_eps > 0.0) || dbscan_min_pts == 0 {
        return Err(Error::invalid("feature thresholds must be finite and positive"));
    }
    let mask: Vec<bool> = truth.values().iter().map(|&v| v > weed_threshold).collect();
    let weeds = mask.iter().filter(|&&b| b).count();
    let patches = component_sizes(&mask, truth.width());
    let clusters = dbscan_sizes(&mask, truth.width(), dbscan_eps, dbscan_min_pts);
    let (avg, sd) = mean_std(&patches);
    Ok(FieldFeatures {
        weed_coverage_ratio: weeds as f64 / mask.len() as f64,
        num_weed_patches: patches.len(),
        largest_patch_fraction: if weeds == 0 {
            0.0
        } else {
            *patches.iter().max().unwrap() as f64 / weeds as f64
        },
        avg_patch_size: avg,
        patch_size_std: sd,
        dbscan_num_clusters: clusters.len(),
        dbscan_avg_cluster_size: mean_std(&clusters).0,
    })
}

/// Per-method composite score in `[0, 1]`. Each row holds one method's
/// lower-is-better metrics (1−SSIM, Hamming distance, MSE); each metric is
/// min-max normalised across methods with 1 = best and the normalised values
/// are averaged. A metric with no spread contributes 1 to every method.
pub fn composite_scores(rows: &[[f64; 3]]) -> Result<Vec<f64>> {
    if rows.len() < 2 {
        return Err(Error::invalid("composite scores need at least two methods"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("metrics must be finite"));
    }
    let mut scores = vec![0.0; rows.len()];
    for m in 0..3 {
        let lo = rows.iter().map(|r| r[m]).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r[m]).fold(f64::NEG_INFINITY, f64::max);
        for (s, r) in scores.iter_mut().zip(rows) {
            *s += if hi > lo { (hi - r[m]) / (hi - lo) } else { 1.0 };
        }
    }
    Ok(scores.into_iter().map(|s| s / 3.0).collect())
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::invalid("rank correlation needs at least three pairs"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("rank correlation inputs must not be NaN"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("rank variance is zero".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
