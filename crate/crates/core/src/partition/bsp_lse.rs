use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::lines::{centred, coarse_search, positive, project, Cut, Sweep};
use super::{mean_var, Field, Geometry, Method, Partition};
use crate::{Error, Point, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BspLseParams {
    pub max_depth: usize,
    /// Stop splitting once a region's pixel variance is at most this.
    pub tol: f64,
    pub angles: usize,
    pub offsets: usize,
    /// Angle refinement half-width, in quarter steps around the coarse best.
    /// Offsets at refined angles are searched exhaustively.
    pub refine: usize,
}

impl Default for BspLseParams {
    fn default() -> Self {
        BspLseParams {
            max_depth: 9,
            tol: 2e-4,
            angles: 36,
            offsets: 32,
            refine: 4,
        }
    }
}

/// Angle refinement rounds, each at a quarter of the previous step. Seven
/// rounds bring the step below the angular gap between pixel centres on a
/// 256 px map, so straight edges separate exactly.
const REFINE_ROUNDS: usize = 7;

struct Region {
    pixels: Vec<usize>,
    poly: Vec<(f64, f64)>,
    depth: usize,
}

/// Binary space partition by least-squares line fitting: each region is cut
/// by the sampled line that minimises the summed squared error of the two
/// sides, coarse-to-fine over angle and offset.
pub fn build_bsp_lse(field: &Field, params: &BspLseParams) -> Result<Partition> {
    if params.angles == 0 || params.offsets == 0 {
        return Err(Error::invalid("line search needs at least one angle and offset"));
    }
    let res = field.res();
    let vals = field.values();
    let side = res as f64;
    let mut stack = vec![Region {
        pixels: (0..res * res).collect(),
        poly: vec![(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)],
        depth: 0,
    }];
    let mut labels = vec![0u32; res * res];
    let mut geoms = Vec::new();
    while let Some(reg) = stack.pop() {
        let (_, var) = mean_var(reg.pixels.iter().map(|&i| vals[i]));
        let cut = if var > params.tol && reg.depth < params.max_depth && reg.pixels.len() > 1 {
            best_cut(&reg.pixels, res, vals, params)
        } else {
            None
        };
        let Some(cut) = cut else {
            let id = geoms.len() as u32;
            for &i in &reg.pixels {
                labels[i] = id;
            }
            let poly = reg.poly.iter().map(|&(x, y)| Point::new(x / side, y / side)).collect();
            geoms.push(Geometry::Polygon(poly));
            continue;
        };
        let pts = pixel_points(&reg.pixels, res);
        let proj = project(&pts, cut.angle);
        let (mut neg, mut pos) = (Vec::new(), Vec::new());
        for (k, &i) in reg.pixels.iter().enumerate() {
            if positive(proj[k], cut.offset) {
                pos.push(i);
            } else {
                neg.push(i);
            }
        }
        let (s, c) = cut.angle.sin_cos();
        let pos_poly = clip(&reg.poly, -c, -s, -cut.offset);
        let neg_poly = clip(&reg.poly, c, s, cut.offset);
        stack.push(Region {
            pixels: pos,
            poly: pos_poly,
            depth: reg.depth + 1,
        });
        stack.push(Region {
            pixels: neg,
            poly: neg_poly,
            depth: reg.depth + 1,
        });
    }
    Ok(Partition::from_labels(Method::BspLse, field, labels, geoms))
}

fn pixel_points(pixels: &[usize], res: usize) -> Vec<(f64, f64)> {
    pixels
        .iter()
        .map(|&i| ((i % res) as f64 + 0.5, (i / res) as f64 + 0.5))
        .collect()
}

fn best_cut(pixels: &[usize], res: usize, vals: &[f64], params: &BspLseParams) -> Option<Cut> {
    let pts = pixel_points(pixels, res);
    let v: Vec<f64> = centred(&pixels.iter().map(|&i| vals[i]).collect::<Vec<_>>());
    let coarse = coarse_search(&pts, &v, params.angles, params.offsets)?;
    let k = params.refine as i64;
    let mut best = coarse;
    let mut step = PI / params.angles as f64;
    for _ in 0..REFINE_ROUNDS {
        step /= 4.0;
        let centre = best.angle;
        for i in -k..=k {
            let angle = centre + i as f64 * step;
            let sweep = Sweep::new(&project(&pts, angle), &v);
            if let Some((offset, sse)) = sweep.best_split() {
                if sse < best.sse {
                    best = Cut { angle, offset, sse };
                }
            }
        }
    }
    Some(best)
}

/// Keeps the part of a convex polygon with `a·x + b·y <= c`.
fn clip(poly: &[(f64, f64)], a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    let f = |p: (f64, f64)| a * p.0 + b * p.1 - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (fp, fq) = (f(p), f(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::rasterize;

    #[test]
    fn defaults() {
        let p = BspLseParams::default();
        assert_eq!((p.max_depth, p.tol), (9, 2e-4));
    }

    #[test]
    fn constant_field_is_one_region() {
        let f = Field::constant(32, 0.4).unwrap();
        let p = build_bsp_lse(&f, &BspLseParams::default()).unwrap();
        assert_eq!(p.len(), 1);
        let Geometry::Polygon(vs) = &p.cells()[0].geometry else { panic!() };
        assert_eq!(vs.len(), 4);
    }

    /// Angle of the polygon edge that is not on the unit-square boundary.
    fn interior_edge_angle(vs: &[Point]) -> f64 {
        let on_border = |p: Point| p.x.abs() < 1e-9 || p.y.abs() < 1e-9 || (p.x - 1.0).abs() < 1e-9 || (p.y - 1.0).abs() < 1e-9;
        for k in 0..vs.len() {
            let (a, b) = (vs[k], vs[(k + 1) % vs.len()]);
            let mid = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
            if !on_border(mid) {
                return (b.y - a.y).atan2(b.x - a.x);
            }
        }
        panic!("no interior edge");
    }

    #[test]
    fn single_diagonal_edge() {
        let true_dir = 30f64.to_radians();
        let (s, c) = true_dir.sin_cos();
        // values by side of a line through the centre with direction 30°
        let f = Field::from_fn(32, |p| {
            if (p.x - 0.5) * s - (p.y - 0.5) * c > 0.0 { 0.9 } else { 0.1 }
        })
        .unwrap();
        let p = build_bsp_lse(&f, &BspLseParams::default()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(rasterize(&p, 32).unwrap(), f);
        let Geometry::Polygon(vs) = &p.cells()[0].geometry else { panic!() };
        let a = interior_edge_angle(vs).rem_euclid(PI);
        let diff = (a - true_dir).abs().min(PI - (a - true_dir).abs());
        assert!(diff < 5f64.to_radians(), "edge angle off by {}°", diff.to_degrees());
    }

    #[test]
    fn clip_square_in_half() {
        let sq = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)];
        let left = clip(&sq, 1.0, 0.0, 1.0);
        assert_eq!(left.len(), 4);
        assert!(left.iter().all(|p| p.0 <= 1.0));
    }
}
