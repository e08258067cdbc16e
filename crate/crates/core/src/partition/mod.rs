//! Discrete representations of a scalar field.
//!
//! Every builder produces a [`Partition`]: a per-pixel label map over a square
//! evaluation grid plus one [`Cell`] per label carrying the cell mean, its
//! centroid and its geometry. Labels always tile the grid exactly.

mod bsp_lse;
mod bsp_region;
mod grid;
mod hexagon;
mod lines;
mod quadtree;
mod voronoi;
mod wedgelet;

pub use bsp_lse::{build_bsp_lse, BspLseParams};
pub use bsp_region::{build_bsp_region, DEFAULT_MIN_REGION_PX};
pub use grid::build_grid;
pub use hexagon::{build_hexmap, HexParams};
pub use quadtree::{build_quadtree, QuadtreeParams};
pub use voronoi::{build_voronoi, VoronoiParams};
pub use wedgelet::{build_wedgelet, WedgeletParams};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};
use core::str::FromStr;

use crate::raster::WeedRaster;
use crate::{Error, Point, Result};

/// Default side of the square evaluation grid.
pub const DEFAULT_EVAL_RES: usize = 256;

/// A square scalar grid with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    res: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(res: usize, values: Vec<f64>) -> Result<Self> {
        if res == 0 {
            return Err(Error::invalid("field resolution must be positive"));
        }
        if values.len() != res * res {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: res * res,
            });
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("field values must lie in [0, 1]"));
        }
        Ok(Field { res, values })
    }

    pub fn constant(res: usize, value: f64) -> Result<Self> {
        Self::new(res, vec![value; res * res])
    }

    /// Evaluates `f` at every pixel centre, clamping into `[0, 1]`.
    pub fn from_fn(res: usize, mut f: impl FnMut(Point) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(res * res);
        for row in 0..res {
            for col in 0..res {
                let v = f(Point::pixel_centre(col, row, res));
                values.push(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
            }
        }
        Self::new(res, values)
    }

    /// Box-filter resample of a raster onto a `res`×`res` grid.
    pub fn from_raster(raster: &WeedRaster, res: usize) -> Result<Self> {
        if res == 0 {
            return Err(Error::invalid("field resolution must be positive"));
        }
        let (w, h) = (raster.width(), raster.height());
        let span = |i: usize, n: usize| {
            let a = i * n / res;
            let b = ((i + 1) * n / res).max(a + 1).min(n);
            (a.min(n - 1), b)
        };
        let mut values = Vec::with_capacity(res * res);
        for row in 0..res {
            let (r0, r1) = span(row, h);
            for col in 0..res {
                let (c0, c1) = span(col, w);
                let mut s = 0.0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        s += raster.get(c, r);
                    }
                }
                values.push((s / ((r1 - r0) * (c1 - c0)) as f64).clamp(0.0, 1.0));
            }
        }
        Self::new(res, values)
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.res + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Grid,
    Quadtree,
    Wedgelet,
    BspLse,
    BspRegion,
    Hexagon,
    Voronoi,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Grid,
        Method::Quadtree,
        Method::Wedgelet,
        Method::BspLse,
        Method::BspRegion,
        Method::Hexagon,
        Method::Voronoi,
    ];

    /// The six adaptive representations (everything except the plain grid).
    pub const ADAPTIVE: [Method; 6] = [
        Method::Quadtree,
        Method::Wedgelet,
        Method::BspLse,
        Method::BspRegion,
        Method::Hexagon,
        Method::Voronoi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::Quadtree => "quadtree",
            Method::Wedgelet => "wedgelet",
            Method::BspLse => "bsp_lse",
            Method::BspRegion => "bsp_region",
            Method::Hexagon => "hexagon",
            Method::Voronoi => "voronoi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(alloc::format!("unknown partition method '{s}'")))
    }
}

/// Half-open pixel rectangle `[c0, c1) × [r0, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub c0: usize,
    pub r0: usize,
    pub c1: usize,
    pub r1: usize,
}

impl PixelRect {
    pub fn new(c0: usize, r0: usize, c1: usize, r1: usize) -> Self {
        PixelRect { c0, r0, c1, r1 }
    }

    pub fn width(&self) -> usize {
        self.c1 - self.c0
    }

    pub fn height(&self) -> usize {
        self.r1 - self.r0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + Clone + '_ {
        (self.r0..self.r1).flat_map(move |r| (self.c0..self.c1).map(move |c| (c, r)))
    }
}

/// Shape of a cell. Pixel membership is always given by the label map; the
/// geometry records how the builder produced the cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Rect(PixelRect),
    /// One side of a rectangle cut by the line `n·p = offset`, where `p` is a
    /// pixel-space position relative to the rectangle centre and
    /// `n = (cos angle, sin angle)`.
    Wedge {
        rect: PixelRect,
        angle: f64,
        offset: f64,
        positive: bool,
    },
    /// Convex polygon in normalised coordinates.
    Polygon(Vec<Point>),
    /// Pointy-top hexagon (or aperture-7 cluster above level 0) in axial
    /// coordinates of its level.
    Hexagon { level: u8, q: i32, r: i32, centre: Point },
    /// Voronoi region of a generating site.
    Site(Point),
    /// Arbitrary connected pixel set.
    PixelSet,
}

impl Geometry {
    fn kind(&self) -> &'static str {
        match self {
            Geometry::Rect(_) => "rect",
            Geometry::Wedge { .. } => "wedge",
            Geometry::Polygon(_) => "polygon",
            Geometry::Hexagon { .. } => "hexagon",
            Geometry::Site(_) => "site",
            Geometry::PixelSet => "pixels",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub geometry: Geometry,
    pub mean_value: f64,
    pub centroid: Point,
    pub area_px: usize,
}

/// A complete tiling of the evaluation grid into valued cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    method: Method,
    res: usize,
    cells: Vec<Cell>,
    labels: Vec<u32>,
}

impl Partition {
    /// Assembles a partition from a label map. Labels must be dense
    /// `0..geometries.len()` and every label must own at least one pixel.
    /// Centroids are pixel-set centroids snapped into the cell.
    pub(crate) fn from_labels(
        method: Method,
        field: &Field,
        labels: Vec<u32>,
        geometries: Vec<Geometry>,
    ) -> Self {
        Self::from_labels_with(method, field, labels, geometries, None)
    }

    /// As [`Self::from_labels`] with caller-supplied raw centroids (snapped
    /// into their cells when they fall outside).
    pub(crate) fn from_labels_with(
        method: Method,
        field: &Field,
        labels: Vec<u32>,
        geometries: Vec<Geometry>,
        centroids: Option<Vec<Point>>,
    ) -> Self {
        let res = field.res();
        let n = geometries.len();
        debug_assert_eq!(labels.len(), res * res);
        let mut stats = vec![Stats::default(); n];
        let mut cx = vec![0.0; n];
        let mut cy = vec![0.0; n];
        for (i, &l) in labels.iter().enumerate() {
            let l = l as usize;
            stats[l].push(field.values()[i]);
            cx[l] += (i % res) as f64 + 0.5;
            cy[l] += (i / res) as f64 + 0.5;
        }
        let raw: Vec<Point> = match centroids {
            Some(c) => c,
            None => (0..n)
                .map(|k| {
                    let a = stats[k].count as f64;
                    Point::new(cx[k] / a / res as f64, cy[k] / a / res as f64)
                })
                .collect(),
        };
        let snapped = snap_centroids(res, &labels, &raw);
        let cells = geometries
            .into_iter()
            .enumerate()
            .map(|(k, geometry)| {
                debug_assert!(stats[k].count > 0, "empty cell {k}");
                Cell {
                    id: k,
                    geometry,
                    mean_value: stats[k].mean(),
                    centroid: snapped[k],
                    area_px: stats[k].count,
                }
            })
            .collect();
        Partition {
            method,
            res,
            cells,
            labels,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell id of every pixel, row-major.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Text dump: a header line, then one line per cell with id, method,
    /// mean, centroid, area and geometry. Pixel-set geometry is written as
    /// row runs `row:c0-c1` (inclusive).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# partition method={} res={} cells={}", self.method, self.res, self.cells.len());
        let _ = writeln!(out, "id,method,mean,cx,cy,area,kind,geometry");
        let runs = if self.cells.iter().any(|c| c.geometry == Geometry::PixelSet) {
            self.pixel_runs()
        } else {
            Vec::new()
        };
        for c in &self.cells {
            let _ = write!(
                out,
                "{},{},{:.6},{:.6},{:.6},{},{},",
                c.id,
                self.method,
                c.mean_value,
                c.centroid.x,
                c.centroid.y,
                c.area_px,
                c.geometry.kind()
            );
            match &c.geometry {
                Geometry::Rect(r) => {
                    let _ = write!(out, "{} {} {} {}", r.c0, r.r0, r.c1, r.r1);
                }
                Geometry::Wedge {
                    rect,
                    angle,
                    offset,
                    positive,
                } => {
                    let _ = write!(
                        out,
                        "{} {} {} {} {:.6} {:.6} {}",
                        rect.c0, rect.r0, rect.c1, rect.r1, angle, offset, *positive as u8
                    );
                }
                Geometry::Polygon(vs) => {
                    for (i, v) in vs.iter().enumerate() {
                        let sep = if i == 0 { "" } else { " " };
                        let _ = write!(out, "{sep}{:.6}:{:.6}", v.x, v.y);
                    }
                }
                Geometry::Hexagon { level, q, r, .. } => {
                    let _ = write!(out, "{level} {q} {r}");
                }
                Geometry::Site(p) => {
                    let _ = write!(out, "{:.6} {:.6}", p.x, p.y);
                }
                Geometry::PixelSet => {
                    for (i, (row, c0, c1)) in runs[c.id].iter().enumerate() {
                        let sep = if i == 0 { "" } else { " " };
                        let _ = write!(out, "{sep}{row}:{c0}-{c1}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Size of [`Self::dump`] in bytes, the memory footprint metric.
    pub fn serialized_bytes(&self) -> usize {
        self.dump().len()
    }

    fn pixel_runs(&self) -> Vec<Vec<(usize, usize, usize)>> {
        let res = self.res;
        let mut runs = vec![Vec::new(); self.cells.len()];
        for row in 0..res {
            let mut start = 0;
            for col in 1..=res {
                let cur = self.labels[row * res + start];
                if col == res || self.labels[row * res + col] != cur {
                    runs[cur as usize].push((row, start, col - 1));
                    start = col;
                }
            }
        }
        runs
    }
}

/// Parameters for every builder, so callers can pick a method by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSettings {
    pub grid_cell_px: usize,
    pub quadtree: QuadtreeParams,
    pub wedgelet: WedgeletParams,
    pub bsp_lse: BspLseParams,
    pub bsp_region_min_px: usize,
    pub hexagon: HexParams,
    pub voronoi: VoronoiParams,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        PartitionSettings {
            grid_cell_px: 8,
            quadtree: QuadtreeParams::default(),
            wedgelet: WedgeletParams::default(),
            bsp_lse: BspLseParams::default(),
            bsp_region_min_px: DEFAULT_MIN_REGION_PX,
            hexagon: HexParams::default(),
            voronoi: VoronoiParams::default(),
        }
    }
}

impl PartitionSettings {
    /// Builds `method` on `field`. `seed` replaces the Voronoi seed.
    pub fn build(&self, method: Method, field: &Field, seed: u64) -> Result<Partition> {
        match method {
            Method::Grid => build_grid(field, self.grid_cell_px),
            Method::Quadtree => build_quadtree(field, &self.quadtree),
            Method::Wedgelet => build_wedgelet(field, &self.wedgelet),
            Method::BspLse => build_bsp_lse(field, &self.bsp_lse),
            Method::BspRegion => build_bsp_region(field, self.bsp_region_min_px),
            Method::Hexagon => build_hexmap(field, &self.hexagon),
            Method::Voronoi => build_voronoi(field, &VoronoiParams { seed, ..self.voronoi }),
        }
    }
}

/// Renders a partition: every pixel takes its cell's mean. Other resolutions
/// sample the label at the pixel centre.
pub fn rasterize(p: &Partition, resolution: usize) -> Result<Field> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let values = if resolution == p.res {
        p.labels.iter().map(|&l| p.cells[l as usize].mean_value).collect()
    } else {
        let mut v = Vec::with_capacity(resolution * resolution);
        for row in 0..resolution {
            for col in 0..resolution {
                let (c, r) = Point::pixel_centre(col, row, resolution).pixel(p.res);
                v.push(p.cells[p.labels[r * p.res + c] as usize].mean_value);
            }
        }
        v
    };
    Field::new(resolution, values)
}

/// One candidate view position per cell.
pub fn centroids(p: &Partition) -> Vec<Point> {
    p.cells.iter().map(|c| c.centroid).collect()
}

/// Id of the cell whose pixels contain `point`.
pub fn locate(p: &Partition, point: Point) -> Result<usize> {
    if !point.in_unit_square() || point.x.is_nan() || point.y.is_nan() {
        return Err(Error::invalid("point outside the unit square"));
    }
    let (c, r) = point.pixel(p.res);
    Ok(p.labels[r * p.res + c] as usize)
}

/// Running statistics of a pixel set.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stats {
    pub count: usize,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Stats {
    fn default() -> Self {
        Stats {
            count: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Stats {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    /// Mean clamped into `[min, max]`, so constant sets reproduce exactly.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        if self.min == self.max {
            return self.min;
        }
        (self.sum / self.count as f64).clamp(self.min, self.max)
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }
}

/// Mean and population variance of the values yielded by `it`, computed in
/// two passes. Constant sets have variance exactly zero.
pub(crate) fn mean_var<I>(it: I) -> (f64, f64)
where
    I: Iterator<Item = f64> + Clone,
{
    let mut st = Stats::default();
    for v in it.clone() {
        st.push(v);
    }
    if st.count == 0 {
        return (0.0, 0.0);
    }
    let mean = st.mean();
    if st.is_constant() {
        return (mean, 0.0);
    }
    let ss: f64 = it.map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / st.count as f64)
}

pub(crate) fn rect_mean_var(field: &Field, rect: &PixelRect) -> (f64, f64) {
    let res = field.res();
    let vals = field.values();
    mean_var(rect.pixels().map(move |(c, r)| vals[r * res + c]))
}

/// Moves each centroid onto the nearest pixel of its own cell when the pixel
/// under it belongs to another cell.
fn snap_centroids(res: usize, labels: &[u32], raw: &[Point]) -> Vec<Point> {
    let n = raw.len();
    let mut best: Vec<(f64, Point)> = vec![(f64::INFINITY, Point::default()); n];
    let mut needs = vec![false; n];
    let mut any = false;
    for (k, p) in raw.iter().enumerate() {
        let (c, r) = p.pixel(res);
        if labels[r * res + c] as usize != k {
            needs[k] = true;
            any = true;
        }
    }
    if !any {
        return raw.to_vec();
    }
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        if needs[l] {
            let q = Point::pixel_centre(i % res, i / res, res);
            let d = q.dist2(raw[l]);
            if d < best[l].0 {
                best[l] = (d, q);
            }
        }
    }
    raw.iter()
        .enumerate()
        .map(|(k, &p)| if needs[k] { best[k].1 } else { p })
        .collect()
}

/// Renumbers labels so that they are dense, dropping geometries with no
/// pixels. Relative order of surviving cells is kept.
pub(crate) fn compact(labels: &mut [u32], geometries: Vec<Geometry>) -> Vec<Geometry> {
    let mut used = vec![false; geometries.len()];
    for &l in labels.iter() {
        used[l as usize] = true;
    }
    let mut remap = vec![u32::MAX; geometries.len()];
    let mut out = Vec::new();
    for (k, g) in geometries.into_iter().enumerate() {
        if used[k] {
            remap[k] = out.len() as u32;
            out.push(g);
        }
    }
    for l in labels.iter_mut() {
        *l = remap[*l as usize];
    }
    out
}
