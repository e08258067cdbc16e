use alloc::vec;
use alloc::vec::Vec;

use super::{Field, Geometry, Method, Partition, PixelRect};
use crate::{Error, Result};

/// Uniform grid of `cell_px`-square cells; edge cells are clipped.
pub fn build_grid(field: &Field, cell_px: usize) -> Result<Partition> {
    if cell_px == 0 {
        return Err(Error::invalid("grid cell size must be positive"));
    }
    let res = field.res();
    let per_side = res.div_ceil(cell_px);
    let mut labels = vec![0u32; res * res];
    let mut geoms = Vec::with_capacity(per_side * per_side);
    for gr in 0..per_side {
        for gc in 0..per_side {
            let rect = PixelRect::new(
                gc * cell_px,
                gr * cell_px,
                ((gc + 1) * cell_px).min(res),
                ((gr + 1) * cell_px).min(res),
            );
            let id = geoms.len() as u32;
            for (c, r) in rect.pixels() {
                labels[r * res + c] = id;
            }
            geoms.push(Geometry::Rect(rect));
        }
    }
    Ok(Partition::from_labels(Method::Grid, field, labels, geoms))
}
