use alloc::vec;
use alloc::vec::Vec;

use super::{Field, Geometry, Method, Partition};
use crate::{Error, Result};

pub const DEFAULT_MIN_REGION_PX: usize = 10;

struct Node {
    children: Option<(usize, usize)>,
    altitude: f64,
    size: usize,
    /// Endpoints of the merging edge, one pixel in each child.
    edge: (usize, usize),
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Altitude-ordered binary partition tree over the 4-adjacency graph, cut
/// top-down into regions of at least `min_region_px` pixels. A subtree
/// smaller than the limit is absorbed into the region on the other side of
/// the edge that merged it.
pub fn build_bsp_region(field: &Field, min_region_px: usize) -> Result<Partition> {
    if min_region_px == 0 {
        return Err(Error::invalid("minimum region size must be positive"));
    }
    let res = field.res();
    let n = res * res;
    let v = field.values();
    // Non-negative weights order like their bit patterns; the low half keeps
    // scan order among equal weights.
    let mut keys: Vec<u128> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (c, r) = (i % res, i / res);
        if c + 1 < res {
            keys.push(((v[i] - v[i + 1]).abs().to_bits() as u128) << 64 | (2 * i) as u128);
        }
        if r + 1 < res {
            keys.push(((v[i] - v[i + res]).abs().to_bits() as u128) << 64 | (2 * i + 1) as u128);
        }
    }
    keys.sort_unstable();
    let edges = keys.iter().map(|&k| {
        let id = k as u64 as usize;
        let a = id / 2;
        let b = if id % 2 == 0 { a + 1 } else { a + res };
        (f64::from_bits((k >> 64) as u64), a, b)
    });

    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            children: None,
            altitude: 0.0,
            size: 1,
            edge: (i, i),
        })
        .collect();
    let mut dsu = Dsu { parent: (0..n).collect() };
    let mut tree_of: Vec<usize> = (0..n).collect();
    for (w, a, b) in edges {
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra == rb {
            continue;
        }
        let (ta, tb) = (tree_of[ra], tree_of[rb]);
        let id = nodes.len();
        nodes.push(Node {
            children: Some((ta, tb)),
            altitude: w,
            size: nodes[ta].size + nodes[tb].size,
            edge: (a, b),
        });
        dsu.parent[ra] = rb;
        tree_of[rb] = id;
    }
    let root = nodes.len() - 1;

    let mut labels = vec![u32::MAX; n];
    let mut regions = 0u32;
    let mut absorbed: Vec<(usize, usize)> = Vec::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        let node = &nodes[id];
        let split = match node.children {
            Some((a, b)) if node.altitude > 0.0 => {
                let (sa, sb) = (nodes[a].size, nodes[b].size);
                match (sa < min_region_px, sb < min_region_px) {
                    (true, true) => None,
                    (true, false) => {
                        absorbed.push((a, node.edge.1));
                        Some(vec![b])
                    }
                    (false, true) => {
                        absorbed.push((b, node.edge.0));
                        Some(vec![a])
                    }
                    (false, false) => Some(vec![b, a]),
                }
            }
            _ => None,
        };
        match split {
            Some(next) => stack.extend(next),
            None => {
                fill(&nodes, id, regions, &mut labels);
                regions += 1;
            }
        }
    }
    // Later absorptions sit inside the targets of earlier ones.
    for &(sub, anchor) in absorbed.iter().rev() {
        let l = labels[anchor];
        fill(&nodes, sub, l, &mut labels);
    }
    let mut geoms = vec![Geometry::PixelSet; regions as usize];
    geoms = super::compact(&mut labels, geoms);
    Ok(Partition::from_labels(Method::BspRegion, field, labels, geoms))
}

fn fill(nodes: &[Node], id: usize, label: u32, labels: &mut [u32]) {
    let mut stack = vec![id];
    while let Some(k) = stack.pop() {
        match nodes[k].children {
            Some((a, b)) => {
                stack.push(a);
                stack.push(b);
            }
            None => labels[k] = label,
        }
    }
}
