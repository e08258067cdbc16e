use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Field, Geometry, Method, Partition};
use crate::{Error, Point, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Added to every pixel value so that empty regions still attract seeds.
const DENSITY_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiParams {
    pub n_seeds: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for VoronoiParams {
    fn default() -> Self {
        VoronoiParams {
            n_seeds: 256,
            iters: 20,
            seed: 0,
        }
    }
}

/// Nearest-site labelling by jump flooding on the pixel grid. Sites are in
/// pixel units; ties go to the lower site index.
pub(crate) fn jump_flood(res: usize, sites: &[(f64, f64)]) -> Vec<u32> {
    const NONE: u32 = u32::MAX;
    let mut cur = vec![NONE; res * res];
    for (k, &(x, y)) in sites.iter().enumerate() {
        let c = (x.floor() as usize).min(res - 1);
        let r = (y.floor() as usize).min(res - 1);
        let i = r * res + c;
        if cur[i] == NONE {
            cur[i] = k as u32;
        }
    }
    let dist = |i: usize, k: u32| {
        let (x, y) = sites[k as usize];
        let dx = (i % res) as f64 + 0.5 - x;
        let dy = (i / res) as f64 + 0.5 - y;
        dx * dx + dy * dy
    };
    let mut next = cur.clone();
    let mut step = res.next_power_of_two() / 2;
    let mut steps = Vec::new();
    while step >= 1 {
        steps.push(step);
        step /= 2;
    }
    steps.push(1);
    for step in steps {
        let s = step as isize;
        for r in 0..res as isize {
            for c in 0..res as isize {
                let i = (r as usize) * res + c as usize;
                let mut best = cur[i];
                let mut bd = if best == NONE { f64::INFINITY } else { dist(i, best) };
                for dr in [-s, 0, s] {
                    for dc in [-s, 0, s] {
                        let (rr, cc) = (r + dr, c + dc);
                        if rr < 0 || cc < 0 || rr >= res as isize || cc >= res as isize {
                            continue;
                        }
                        let k = cur[rr as usize * res + cc as usize];
                        if k == NONE || k == best {
                            continue;
                        }
                        let d = dist(i, k);
                        if d < bd || (d == bd && k < best) {
                            best = k;
                            bd = d;
                        }
                    }
                }
                next[i] = best;
            }
        }
        core::mem::swap(&mut cur, &mut next);
    }
    cur
}

struct CellStats {
    mass: f64,
    wx: f64,
    wy: f64,
    sse: f64,
    count: usize,
}

fn cell_stats(res: usize, labels: &[u32], vals: &[f64], n: usize) -> Vec<CellStats> {
    let mut st: Vec<CellStats> = (0..n)
        .map(|_| CellStats {
            mass: 0.0,
            wx: 0.0,
            wy: 0.0,
            sse: 0.0,
            count: 0,
        })
        .collect();
    let mut sum = vec![0.0; n];
    for (i, &l) in labels.iter().enumerate() {
        let s = &mut st[l as usize];
        let d = vals[i] + DENSITY_FLOOR;
        s.mass += d;
        s.wx += d * ((i % res) as f64 + 0.5);
        s.wy += d * ((i / res) as f64 + 0.5);
        s.count += 1;
        sum[l as usize] += vals[i];
    }
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        let m = sum[l] / st[l].count as f64;
        st[l].sse += (vals[i] - m) * (vals[i] - m);
    }
    st
}

/// Density-adaptive Voronoi tessellation: rejection-sampled seeds, Lloyd
/// relaxation towards density-weighted centroids, and per-iteration
/// split/merge of the worst/best cells keeping the count within ±20 %.
pub fn build_voronoi(field: &Field, params: &VoronoiParams) -> Result<Partition> {
    if params.n_seeds == 0 {
        return Err(Error::invalid("voronoi needs at least one seed"));
    }
    let res = field.res();
    let vals = field.values();
    let n_seeds = params.n_seeds.min(res * res);
    let min_count = ((n_seeds as f64 * 0.8).ceil() as usize).max(1);
    let max_count = ((n_seeds as f64 * 1.2).floor() as usize).clamp(min_count, res * res);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dmax = vals.iter().fold(0.0f64, |m, &v| m.max(v)) + DENSITY_FLOOR;
    let mut taken = vec![false; res * res];
    let mut sites: Vec<(f64, f64)> = Vec::with_capacity(n_seeds);
    let mut attempts = 0usize;
    while sites.len() < n_seeds {
        attempts += 1;
        let x: f64 = rng.random::<f64>() * res as f64;
        let y: f64 = rng.random::<f64>() * res as f64;
        let i = (y as usize).min(res - 1) * res + (x as usize).min(res - 1);
        if taken[i] {
            if attempts > 1000 * n_seeds {
                break;
            }
            continue;
        }
        let u: f64 = rng.random();
        if u * dmax <= vals[i] + DENSITY_FLOOR || attempts > 1000 * n_seeds {
            taken[i] = true;
            sites.push((x, y));
        }
    }

    for _ in 0..params.iters {
        let labels = jump_flood(res, &sites);
        let st = cell_stats(res, &labels, vals, sites.len());
        let mut moved: Vec<(f64, f64)> = Vec::with_capacity(sites.len());
        let mut errs = Vec::with_capacity(sites.len());
        let mut old_idx = Vec::with_capacity(sites.len());
        for (k, s) in st.iter().enumerate() {
            if s.count > 0 {
                moved.push((s.wx / s.mass, s.wy / s.mass));
                errs.push(s.sse);
                old_idx.push(k as u32);
            }
        }
        let mean_err = errs.iter().sum::<f64>() / errs.len() as f64;
        let argmax = (0..errs.len()).fold(0, |b, k| if errs[k] > errs[b] { k } else { b });
        let argmin = (0..errs.len()).fold(0, |b, k| if errs[k] < errs[b] { k } else { b });
        let mut extra = None;
        if errs[argmax] > 2.0 * mean_err && moved.len() < max_count {
            // new seed at the pixel that deviates most from its cell mean
            let cell = old_idx[argmax];
            let (mut sum, mut cnt) = (0.0, 0usize);
            for (i, &l) in labels.iter().enumerate() {
                if l == cell {
                    sum += vals[i];
                    cnt += 1;
                }
            }
            let m = sum / cnt as f64;
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (i, &l) in labels.iter().enumerate() {
                if l == cell && (vals[i] - m).abs() > best.0 {
                    best = ((vals[i] - m).abs(), i);
                }
            }
            let p = ((best.1 % res) as f64 + 0.5, (best.1 / res) as f64 + 0.5);
            if moved.iter().all(|q| (q.0 - p.0).abs() > 1e-9 || (q.1 - p.1).abs() > 1e-9) {
                extra = Some(p);
            }
        }
        let merge = errs[argmin] < 0.5 * mean_err
            && argmin != argmax
            && moved.len() + extra.is_some() as usize > min_count;
        if merge {
            moved.remove(argmin);
        }
        moved.extend(extra);
        sites = moved;
    }

    let mut labels = jump_flood(res, &sites);
    let st = cell_stats(res, &labels, vals, sites.len());
    let cents: Vec<Point> = st
        .iter()
        .filter(|s| s.count > 0)
        .map(|s| Point::new(s.wx / s.mass / res as f64, s.wy / s.mass / res as f64))
        .collect();
    let sites: Vec<Geometry> = sites
        .iter()
        .map(|&(x, y)| Geometry::Site(Point::new(x / res as f64, y / res as f64)))
        .collect();
    let geoms = super::compact(&mut labels, sites);
    Ok(Partition::from_labels_with(Method::Voronoi, field, labels, geoms, Some(cents)))
}
