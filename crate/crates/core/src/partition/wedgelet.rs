use alloc::vec::Vec;

use super::lines::{centred, coarse_search, positive, project};
use super::quadtree::{quad_recurse, Leaves};
use super::{Field, Geometry, Method, Partition, PixelRect};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeletParams {
    pub max_depth: usize,
    /// Homogeneity threshold on pixel variance, also the acceptance level
    /// for the two-sided MSE of a wedge.
    pub tol: f64,
    pub angles: usize,
    pub offsets: usize,
}

impl Default for WedgeletParams {
    fn default() -> Self {
        WedgeletParams {
            max_depth: 16,
            tol: 2e-4,
            angles: 16,
            offsets: 31,
        }
    }
}

/// Quadtree whose inhomogeneous squares may instead be cut by one straight
/// line into two constant halves when that fits within `tol`.
pub fn build_wedgelet(field: &Field, params: &WedgeletParams) -> Result<Partition> {
    if params.angles == 0 || params.offsets == 0 {
        return Err(Error::invalid("wedgelet search needs at least one angle and offset"));
    }
    let res = field.res();
    let vals = field.values();
    let p = quad_recurse(Method::Wedgelet, field, params.max_depth, params.tol, |rect| {
        wedge(rect, res, vals, params)
    });
    Ok(p)
}

fn wedge(rect: &PixelRect, res: usize, vals: &[f64], params: &WedgeletParams) -> Option<Leaves> {
    let cx = (rect.c0 + rect.c1) as f64 / 2.0;
    let cy = (rect.r0 + rect.r1) as f64 / 2.0;
    let pix: Vec<(usize, usize)> = rect.pixels().collect();
    let pts: Vec<(f64, f64)> = pix
        .iter()
        .map(|&(c, r)| (c as f64 + 0.5 - cx, r as f64 + 0.5 - cy))
        .collect();
    let v: Vec<f64> = pix.iter().map(|&(c, r)| vals[r * res + c]).collect();
    let cut = coarse_search(&pts, &centred(&v), params.angles, params.offsets)?;
    if cut.sse / pix.len() as f64 > params.tol {
        return None;
    }
    let proj = project(&pts, cut.angle);
    let (mut neg, mut pos) = (Vec::new(), Vec::new());
    for (i, &px) in pix.iter().enumerate() {
        if positive(proj[i], cut.offset) {
            pos.push(px);
        } else {
            neg.push(px);
        }
    }
    let half = |positive| Geometry::Wedge {
        rect: *rect,
        angle: cut.angle,
        offset: cut.offset,
        positive,
    };
    Some(alloc::vec![(half(false), neg), (half(true), pos)])
}
