use alloc::vec;
use alloc::vec::Vec;

use super::{rect_mean_var, Field, Geometry, Method, Partition, PixelRect};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadtreeParams {
    pub max_depth: usize,
    /// Split while the cell's pixel variance exceeds this.
    pub tol: f64,
}

impl Default for QuadtreeParams {
    fn default() -> Self {
        QuadtreeParams {
            max_depth: 16,
            tol: 2e-4,
        }
    }
}

/// Children of `rect` in reading order, split at the midpoints. A side of
/// one pixel is not split; a single pixel has no children.
pub(crate) fn quad_children(rect: &PixelRect) -> Vec<PixelRect> {
    let cm = rect.c0 + rect.width() / 2;
    let rm = rect.r0 + rect.height() / 2;
    let cols: &[(usize, usize)] = if rect.width() >= 2 {
        &[(rect.c0, cm), (cm, rect.c1)]
    } else {
        &[(rect.c0, rect.c1)]
    };
    let rows: &[(usize, usize)] = if rect.height() >= 2 {
        &[(rect.r0, rm), (rm, rect.r1)]
    } else {
        &[(rect.r0, rect.r1)]
    };
    if cols.len() == 1 && rows.len() == 1 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(4);
    for &(r0, r1) in rows {
        for &(c0, c1) in cols {
            out.push(PixelRect::new(c0, r0, c1, r1));
        }
    }
    out
}

/// Leaves that replace an inhomogeneous node, each with its pixels.
pub(crate) type Leaves = Vec<(Geometry, Vec<(usize, usize)>)>;

/// Shared top-down recursion for quadtree and wedgelet. `refine` may turn an
/// inhomogeneous node (below max depth) into leaves directly.
pub(crate) fn quad_recurse(
    method: Method,
    field: &Field,
    max_depth: usize,
    tol: f64,
    mut refine: impl FnMut(&PixelRect) -> Option<Leaves>,
) -> Partition {
    let res = field.res();
    let mut labels = vec![0u32; res * res];
    let mut geoms = Vec::new();
    let mut stack = vec![(PixelRect::new(0, 0, res, res), 0usize)];
    while let Some((rect, depth)) = stack.pop() {
        let (_, var) = rect_mean_var(field, &rect);
        let children = if var > tol && depth < max_depth {
            quad_children(&rect)
        } else {
            Vec::new()
        };
        if children.is_empty() {
            push_leaf(&mut labels, &mut geoms, res, Geometry::Rect(rect), rect.pixels());
            continue;
        }
        match refine(&rect) {
            Some(parts) => {
                for (g, px) in parts {
                    push_leaf(&mut labels, &mut geoms, res, g, px.into_iter());
                }
            }
            None => {
                for c in children.into_iter().rev() {
                    stack.push((c, depth + 1));
                }
            }
        }
    }
    Partition::from_labels(method, field, labels, geoms)
}

fn push_leaf(
    labels: &mut [u32],
    geoms: &mut Vec<Geometry>,
    res: usize,
    g: Geometry,
    px: impl Iterator<Item = (usize, usize)>,
) {
    let id = geoms.len() as u32;
    for (c, r) in px {
        labels[r * res + c] = id;
    }
    geoms.push(g);
}

/// Recursive 4-way split while the pixel variance exceeds `tol`.
///
/// Non power-of-two grids split at integer midpoints, so leaves may be
/// slightly non-square instead of padding the field.
pub fn build_quadtree(field: &Field, params: &QuadtreeParams) -> Result<Partition> {
    Ok(quad_recurse(Method::Quadtree, field, params.max_depth, params.tol, |_| None))
}
