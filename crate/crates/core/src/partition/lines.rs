//! Shared straight-line split search.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// A pixel is on the positive side of a cut when its projection exceeds the
/// offset by more than this margin, so pixels lying on the line go negative.
pub(crate) const SIDE_EPS: f64 = 1e-9;

pub(crate) fn positive(proj: f64, offset: f64) -> bool {
    proj > offset + SIDE_EPS
}

/// Projections of pixel-space positions onto the unit normal at `angle`.
pub(crate) fn project(points: &[(f64, f64)], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    points.iter().map(|&(x, y)| x * c + y * s).collect()
}

/// Sorted projections with prefix sums of (centred) values, for scoring many
/// offsets along one direction.
pub(crate) struct Sweep {
    sorted: Vec<f64>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl Sweep {
    pub fn new(proj: &[f64], vals: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..proj.len()).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
        let mut sorted = Vec::with_capacity(order.len());
        let mut sum = Vec::with_capacity(order.len() + 1);
        let mut sumsq = Vec::with_capacity(order.len() + 1);
        sum.push(0.0);
        sumsq.push(0.0);
        let (mut s, mut q) = (0.0, 0.0);
        for &i in &order {
            sorted.push(proj[i]);
            s += vals[i];
            q += vals[i] * vals[i];
            sum.push(s);
            sumsq.push(q);
        }
        Sweep { sorted, sum, sumsq }
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Two-side sum of squared errors for the cut at `offset`; `None` when a
    /// side is empty.
    pub fn sse(&self, offset: f64) -> Option<f64> {
        let n = self.sorted.len();
        let m = self.sorted.partition_point(|&p| !positive(p, offset));
        if m == 0 || m == n {
            return None;
        }
        let side = |s: f64, q: f64, k: usize| (q - s * s / k as f64).max(0.0);
        let lo = side(self.sum[m], self.sumsq[m], m);
        let hi = side(self.sum[n] - self.sum[m], self.sumsq[n] - self.sumsq[m], n - m);
        Some(lo + hi)
    }

    /// Lowest-SSE cut over every gap between distinct projections, placed at
    /// the gap midpoint. Ties keep the lower offset.
    pub fn best_split(&self) -> Option<(f64, f64)> {
        let n = self.sorted.len();
        let mut best: Option<(f64, f64)> = None;
        for m in 1..n {
            if self.sorted[m] - self.sorted[m - 1] <= 2.0 * SIDE_EPS {
                continue;
            }
            let side = |s: f64, q: f64, k: usize| (q - s * s / k as f64).max(0.0);
            let sse = side(self.sum[m], self.sumsq[m], m)
                + side(self.sum[n] - self.sum[m], self.sumsq[n] - self.sumsq[m], n - m);
            if best.is_none_or(|b| sse < b.1) {
                best = Some(((self.sorted[m - 1] + self.sorted[m]) / 2.0, sse));
            }
        }
        best
    }
}

/// Evenly spaced interior offsets: `count` lines splitting `[lo, hi]` into
/// `count + 1` equal slabs.
pub(crate) fn offsets(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (count + 1) as f64;
    (1..=count).map(move |k| lo + k as f64 * step)
}

/// Best cut found by a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cut {
    pub angle: f64,
    pub offset: f64,
    pub sse: f64,
}

/// Scores `angles` directions over `[0, π)` with `n_offsets` offsets each.
/// Returns the lowest-SSE cut; ties keep the earlier candidate.
pub(crate) fn coarse_search(
    points: &[(f64, f64)],
    vals: &[f64],
    angles: usize,
    n_offsets: usize,
) -> Option<Cut> {
    let mut best: Option<Cut> = None;
    for a in 0..angles {
        let angle = core::f64::consts::PI * a as f64 / angles as f64;
        let sweep = Sweep::new(&project(points, angle), vals);
        for offset in offsets(sweep.min(), sweep.max(), n_offsets) {
            consider(&mut best, &sweep, angle, offset);
        }
    }
    best
}

pub(crate) fn consider(best: &mut Option<Cut>, sweep: &Sweep, angle: f64, offset: f64) {
    if let Some(sse) = sweep.sse(offset) {
        if best.is_none_or(|b| sse < b.sse) {
            *best = Some(Cut { angle, offset, sse });
        }
    }
}

/// Values shifted by their mean, which keeps the prefix-sum SSE accurate.
pub(crate) fn centred(vals: &[f64]) -> Vec<f64> {
    let m = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    vals.iter().map(|v| v - m).collect()
}
