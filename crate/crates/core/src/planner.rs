//! Traversal graph over candidate view positions and receding-horizon
//! waypoint selection.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;


use crate::gp::{mutual_information, PosteriorCache};
use crate::raster::CoverageMask;
use crate::{Error, Point, Result};

pub const DEFAULT_HORIZON: usize = 4;
pub const DEFAULT_PATH_CAP: usize = 5000;
pub const MERGE_TOL: f64 = 1e-9;

/// Node graph built from a Delaunay triangulation of candidate positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalGraph {
    nodes: Vec<Point>,
    /// First input index that landed on each node.
    source: Vec<usize>,
    /// Node of every input point (duplicates share a node).
    node_of: Vec<usize>,
    adj: Vec<Vec<usize>>,
    triangles: Vec<[usize; 3]>,
    degenerate: bool,
}

impl TraversalGraph {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Input index a node was created from.
    pub fn source(&self, node: usize) -> usize {
        self.source[node]
    }

    /// Node that an input point was merged into.
    pub fn node_of(&self, input: usize) -> usize {
        self.node_of[input]
    }

    /// Sorted neighbours of a node.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (a, ns) in self.adj.iter().enumerate() {
            for &b in ns {
                if a < b {
                    e.push((a, b));
                }
            }
        }
        e
    }

    /// Set when fewer than three distinct or only collinear points were
    /// given, or when extra links were needed to connect the graph.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Node closest to `p`; ties go to the lower index.
    pub fn nearest(&self, p: Point) -> usize {
        let mut best = 0;
        for i in 1..self.nodes.len() {
            if self.nodes[i].dist2(p) < self.nodes[best].dist2(p) {
                best = i;
            }
        }
        best
    }

    fn link(&mut self, a: usize, b: usize) {
        if a != b && !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Positive when `d` is strictly inside the circumcircle of the
/// counter-clockwise triangle `abc`.
pub fn in_circle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Delaunay graph of `points` by Bowyer–Watson insertion. Points closer than
/// [`MERGE_TOL`] share a node. Degenerate inputs give a connected fallback
/// graph (nearest-neighbour links) with the degenerate flag set.
pub fn delaunay(points: &[Point]) -> Result<TraversalGraph> {
    if points.is_empty() {
        return Err(Error::invalid("triangulation needs at least one point"));
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::invalid("points must be finite"));
    }
    let mut nodes: Vec<Point> = Vec::new();
    let mut source = Vec::new();
    let mut node_of = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        match nodes.iter().position(|q| q.dist(p) <= MERGE_TOL) {
            Some(k) => node_of.push(k),
            None => {
                node_of.push(nodes.len());
                nodes.push(p);
                source.push(i);
            }
        }
    }
    let n = nodes.len();
    let mut g = TraversalGraph {
        adj: vec![Vec::new(); n],
        nodes,
        source,
        node_of,
        triangles: Vec::new(),
        degenerate: n < 3,
    };
    if n >= 3 {
        g.triangles = bowyer_watson(&g.nodes);
        for t in g.triangles.clone() {
            g.link(t[0], t[1]);
            g.link(t[1], t[2]);
            g.link(t[2], t[0]);
        }
        if g.triangles.is_empty() {
            g.degenerate = true;
        }
    }
    if connect(&mut g) {
        g.degenerate = true;
    }
    for a in &mut g.adj {
        a.sort_unstable();
    }
    Ok(g)
}

fn bowyer_watson(pts: &[Point]) -> Vec<[usize; 3]> {
    let n = pts.len();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo_x = lo_x.min(p.x);
        lo_y = lo_y.min(p.y);
        hi_x = hi_x.max(p.x);
        hi_y = hi_y.max(p.y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12);
    let (cx, cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
    let big = 1e4 * span;
    let mut all = pts.to_vec();
    all.push(Point::new(cx - big, cy - big));
    all.push(Point::new(cx + big, cy - big));
    all.push(Point::new(cx, cy + big));
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for i in 0..n {
        let p = all[i];
        let mut bad = Vec::new();
        let mut keep = Vec::with_capacity(tris.len());
        for t in tris.drain(..) {
            if in_circle(all[t[0]], all[t[1]], all[t[2]], p) > 0.0 {
                bad.push(t);
            } else {
                keep.push(t);
            }
        }
        tris = keep;
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for t in &bad {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let shared = bad
                    .iter()
                    .any(|u| u != t && [(u[0], u[1]), (u[1], u[2]), (u[2], u[0])].contains(&(e.1, e.0)));
                if !shared {
                    boundary.push(e);
                }
            }
        }
        for (a, b) in boundary {
            if orient(all[a], all[b], p) > 0.0 {
                tris.push([a, b, i]);
            }
        }
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris
}

/// Joins components by their closest node pairs; true if any link was added.
fn connect(g: &mut TraversalGraph) -> bool {
    let n = g.len();
    let mut added = false;
    loop {
        let mut comp = vec![usize::MAX; n];
        let mut queue = VecDeque::from([0]);
        comp[0] = 0;
        while let Some(a) = queue.pop_front() {
            for &b in &g.adj[a] {
                if comp[b] == usize::MAX {
                    comp[b] = 0;
                    queue.push_back(b);
                }
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if comp[a] != 0 {
                continue;
            }
            for b in 0..n {
                if comp[b] == 0 {
                    continue;
                }
                let d = g.nodes[a].dist2(g.nodes[b]);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        match best {
            Some((_, a, b)) => {
                g.link(a, b);
                added = true;
            }
            None => return added,
        }
    }
}

/// All simple walks of 1..=`horizon` edges from `start`, breadth first, with
/// neighbours expanded in index order. At most `cap` walks are returned,
/// keeping the earliest in that order. Each walk starts with `start`.
pub fn enumerate_paths(g: &TraversalGraph, start: usize, horizon: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    if start >= g.len() {
        return Err(Error::invalid("start node is not in the graph"));
    }
    let mut out = Vec::new();
    let mut frontier = vec![vec![start]];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for path in &frontier {
            let last = *path.last().unwrap();
            for &nb in g.neighbours(last) {
                if path.contains(&nb) {
                    continue;
                }
                if out.len() >= cap {
                    return Ok(out);
                }
                let mut p = path.clone();
                p.push(nb);
                out.push(p.clone());
                next.push(p);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

/// Polyline length in metres for a unit-square path on a map `map_size_m` wide.
pub fn path_cost(waypoints: &[Point], map_size_m: f64) -> f64 {
    waypoints.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() * map_size_m
}

/// Mean coverage-mask value under the waypoints.
pub fn revisit_fraction(waypoints: &[Point], mask: &CoverageMask) -> f64 {
    if waypoints.is_empty() {
        return 0.0;
    }
    waypoints.iter().filter(|&&p| mask.at(p)).count() as f64 / waypoints.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    pub lambda_cost: f64,
    pub lambda_visit: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights {
            lambda_cost: 0.15,
            lambda_visit: 400.0,
        }
    }
}

/// A scored walk through the traversal graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    pub waypoints: Vec<usize>,
    pub utility: f64,
    pub info: f64,
    pub cost_m: f64,
    pub revisit: f64,
}

impl CandidatePath {
    /// First move of the path (the start itself for a single-node path).
    pub fn next_node(&self) -> usize {
        self.waypoints.get(1).copied().unwrap_or(self.waypoints[0])
    }
}

/// Scores one walk: information gain at the waypoints minus weighted travel
/// cost and revisit fraction.
pub fn utility(
    path: &[usize],
    cache: &PosteriorCache<'_>,
    mask: &CoverageMask,
    weights: &UtilityWeights,
    map_size_m: f64,
) -> Result<CandidatePath> {
    if path.is_empty() {
        return Err(Error::invalid("path must contain at least one node"));
    }
    let pts: Vec<Point> = path.iter().map(|&i| cache.node(i)).collect();
    let cov = cache.cov(path);
    let info = mutual_information(&cov, path.len(), cache.model().theta().sigma_n2)?;
    let cost_m = path_cost(&pts, map_size_m);
    let revisit = revisit_fraction(&pts, mask);
    Ok(CandidatePath {
        waypoints: path.to_vec(),
        utility: info - weights.lambda_cost * cost_m - weights.lambda_visit * revisit,
        info,
        cost_m,
        revisit,
    })
}

fn better(a: &CandidatePath, b: &CandidatePath) -> bool {
    match a.utility.total_cmp(&b.utility) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match a.cost_m.total_cmp(&b.cost_m) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.waypoints < b.waypoints,
        },
    }
}

/// Highest-utility path; ties go to lower cost, then the lexicographically
/// smaller node sequence. Returns the path and the node to execute next.
pub fn select_best(paths: &[CandidatePath]) -> Option<(&CandidatePath, usize)> {
    let mut best = paths.first()?;
    for p in &paths[1..] {
        if better(p, best) {
            best = p;
        }
    }
    Some((best, best.next_node()))
}

/// Outcome of scoring all candidate walks from one node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub scored: Vec<CandidatePath>,
    /// Walks dropped because their covariance could not be evaluated.
    pub discarded: usize,
    pub best: Option<CandidatePath>,
}

pub fn plan(
    g: &TraversalGraph,
    start: usize,
    cache: &PosteriorCache<'_>,
    mask: &CoverageMask,
    weights: &UtilityWeights,
    map_size_m: f64,
    horizon: usize,
    cap: usize,
) -> Result<PlanOutcome> {
    let paths = enumerate_paths(g, start, horizon, cap)?;
    let mut scored = Vec::with_capacity(paths.len());
    let mut discarded = 0;
    for p in &paths {
        match utility(p, cache, mask, weights, map_size_m) {
            Ok(c) => scored.push(c),
            Err(_) => discarded += 1,
        }
    }
    let best = select_best(&scored).map(|(b, _)| b.clone());
    Ok(PlanOutcome {
        scored,
        discarded,
        best,
    })
}
