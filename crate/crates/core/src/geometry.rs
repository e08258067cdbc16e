//! Points in the normalised unit-square map frame.

#[allow(unused_imports)]
use num_traits::Float;

/// A location in normalised map coordinates. `x` runs along raster columns,
/// `y` along raster rows, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    /// Index of the pixel containing this point on a `res`×`res` grid over the
    /// unit square. Points on the far edge belong to the last pixel.
    pub fn pixel(self, res: usize) -> (usize, usize) {
        let to_idx = |v: f64| {
            let i = (v * res as f64).floor();
            if i < 0.0 {
                0
            } else {
                (i as usize).min(res - 1)
            }
        };
        (to_idx(self.x), to_idx(self.y))
    }

    /// Centre of pixel `(col, row)` on a `res`×`res` grid.
    pub fn pixel_centre(col: usize, row: usize, res: usize) -> Point {
        Point::new((col as f64 + 0.5) / res as f64, (row as f64 + 0.5) / res as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_lookup_clamps_far_edge() {
        assert_eq!(Point::new(1.0, 1.0).pixel(4), (3, 3));
        assert_eq!(Point::new(0.0, 0.26).pixel(4), (0, 1));
        let c = Point::pixel_centre(2, 1, 4);
        assert_eq!(c.pixel(4), (2, 1));
    }
}
