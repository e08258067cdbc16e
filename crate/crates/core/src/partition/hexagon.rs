use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{Field, Geometry, Method, Partition};
use crate::{Error, Point, Result};
#[allow(unused_imports)]
use num_traits::Float;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const MAX_LEVELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexParams {
    /// Base hexagons across the unit width.
    pub base_res: usize,
    /// A parent replaces its children when its pixel MSE is at most this.
    pub tol: f64,
}

impl Default for HexParams {
    fn default() -> Self {
        HexParams {
            base_res: 16,
            tol: 2e-4,
        }
    }
}

fn hex_dist(dq: i32, dr: i32) -> i32 {
    (dq.abs() + dr.abs() + (dq + dr).abs()) / 2
}

/// Axial coordinates of the pointy-top hexagon of size `size` containing `p`.
fn axial(p: Point, size: f64) -> (i32, i32) {
    let q = (SQRT3 / 3.0 * p.x - p.y / 3.0) / size;
    let r = (2.0 / 3.0 * p.y) / size;
    let s = -q - r;
    let (mut rq, mut rr, rs) = (q.round(), r.round(), s.round());
    let (dq, dr, ds) = ((rq - q).abs(), (rr - r).abs(), (rs - s).abs());
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    (rq as i32, rr as i32)
}

/// Aperture-7 parent: the cluster centre `(2i - j, i + 3j)` within hex
/// distance one of `(q, r)`, returned in the parent lattice coordinates.
fn parent(q: i32, r: i32) -> (i32, i32) {
    let fi = (3 * q + r) as f64 / 7.0;
    let fj = (2 * r - q) as f64 / 7.0;
    let (i0, j0) = (fi.floor() as i32, fj.floor() as i32);
    for i in i0 - 1..=i0 + 2 {
        for j in j0 - 1..=j0 + 2 {
            if hex_dist(q - (2 * i - j), r - (i + 3 * j)) <= 1 {
                return (i, j);
            }
        }
    }
    unreachable!("aperture-7 clusters tile the lattice")
}

struct Level {
    /// Axial id of each cell.
    ids: Vec<(i32, i32)>,
    /// Cell of each pixel at this level.
    of_pixel: Vec<u32>,
    mse: Vec<f64>,
    children: Vec<Vec<u32>>,
}

/// Multi-resolution hexagon map: pointy-top base tiling with aperture-7
/// parents, selected top-down wherever a cell's pixel MSE is within `tol`.
pub fn build_hexmap(field: &Field, params: &HexParams) -> Result<Partition> {
    if params.base_res == 0 {
        return Err(Error::invalid("hexagon base resolution must be positive"));
    }
    let res = field.res();
    let vals = field.values();
    let size = 1.0 / (params.base_res as f64 * SQRT3);

    let mut index: BTreeMap<(i32, i32), u32> = BTreeMap::new();
    let base: Vec<(i32, i32)> = (0..res * res)
        .map(|i| axial(Point::pixel_centre(i % res, i / res, res), size))
        .collect();
    for &id in &base {
        let k = index.len() as u32;
        index.entry(id).or_insert(k);
    }
    let mut levels = vec![make_level(&index, base.iter().map(|id| index[id]).collect(), vals, Vec::new())];

    while levels.len() < MAX_LEVELS {
        let prev = levels.last().unwrap();
        if prev.ids.len() <= 1 {
            break;
        }
        let up: Vec<(i32, i32)> = prev.ids.iter().map(|&(q, r)| parent(q, r)).collect();
        let mut index: BTreeMap<(i32, i32), u32> = BTreeMap::new();
        for &id in &up {
            let k = index.len() as u32;
            index.entry(id).or_insert(k);
        }
        if index.len() >= prev.ids.len() {
            break;
        }
        let mut children = vec![Vec::new(); index.len()];
        for (child, id) in up.iter().enumerate() {
            children[index[id] as usize].push(child as u32);
        }
        let of_pixel = prev.of_pixel.iter().map(|&c| index[&up[c as usize]]).collect();
        let level = make_level(&index, of_pixel, vals, children);
        levels.push(level);
    }

    // top-down selection
    let top = levels.len() - 1;
    let mut chosen: Vec<Vec<u32>> = levels.iter().map(|l| vec![u32::MAX; l.ids.len()]).collect();
    let mut geoms = Vec::new();
    let mut stack: Vec<(usize, u32)> = (0..levels[top].ids.len() as u32).rev().map(|c| (top, c)).collect();
    while let Some((lv, c)) = stack.pop() {
        let level = &levels[lv];
        if lv == 0 || level.mse[c as usize] <= params.tol {
            chosen[lv][c as usize] = geoms.len() as u32;
            let (q, r) = level.ids[c as usize];
            geoms.push(Geometry::Hexagon {
                level: lv as u8,
                q,
                r,
                centre: cluster_centre(q, r, lv, size),
            });
        } else {
            for &k in level.children[c as usize].iter().rev() {
                stack.push((lv - 1, k));
            }
        }
    }
    let labels = (0..res * res)
        .map(|i| {
            (0..=top)
                .rev()
                .map(|lv| chosen[lv][levels[lv].of_pixel[i] as usize])
                .find(|&l| l != u32::MAX)
                .expect("every pixel has a selected ancestor")
        })
        .collect();
    Ok(Partition::from_labels(Method::Hexagon, field, labels, geoms))
}

fn make_level(
    index: &BTreeMap<(i32, i32), u32>,
    of_pixel: Vec<u32>,
    vals: &[f64],
    children: Vec<Vec<u32>>,
) -> Level {
    let n = index.len();
    let mut ids = vec![(0, 0); n];
    for (&id, &k) in index {
        ids[k as usize] = id;
    }
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (i, &c) in of_pixel.iter().enumerate() {
        sum[c as usize] += vals[i];
        count[c as usize] += 1;
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &k)| s / k as f64).collect();
    let mut sse = vec![0.0; n];
    for (i, &c) in of_pixel.iter().enumerate() {
        let d = vals[i] - mean[c as usize];
        sse[c as usize] += d * d;
    }
    let mse = sse.iter().zip(&count).map(|(s, &k)| s / k as f64).collect();
    Level {
        ids,
        of_pixel,
        mse,
        children,
    }
}

/// Centre of a cluster, mapping its lattice coordinates back to level 0.
fn cluster_centre(q: i32, r: i32, level: usize, size: f64) -> Point {
    let (mut q, mut r) = (q as i64, r as i64);
    for _ in 0..level {
        (q, r) = (2 * q - r, q + 3 * r);
    }
    let (q, r) = (q as f64, r as f64);
    Point::new(size * SQRT3 * (q + r / 2.0), size * 1.5 * r)
}
