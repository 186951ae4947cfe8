//! Small hand-built graphs for tests and examples.

use super::{CityGraph, NodeId};

/// `n` nodes on a north-pointing line, unit spacing.
pub fn path_graph(n: usize) -> CityGraph {
    let pos: Vec<(f64, f64)> = (0..n).map(|i| (0.0, i as f64)).collect();
    let pairs: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
    CityGraph::from_positions(&pos, &pairs, 4).expect("path graph is valid")
}

/// Center node 0 with `arms` (1..=4) unit-length spokes: north, east, south, west.
pub fn star_graph(arms: usize) -> CityGraph {
    let dirs = [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)];
    let mut pos = vec![(0.0, 0.0)];
    pos.extend(dirs.iter().take(arms));
    let pairs: Vec<(u32, u32)> = (1..=arms as u32).map(|i| (0, i)).collect();
    CityGraph::from_positions(&pos, &pairs, 4).expect("star graph is valid")
}

/// Four-way intersection at node 0 with arms at headings 0, 95, 180 and 280 degrees.
pub fn cross_intersection() -> CityGraph {
    let arm = |deg: f64| {
        let r = deg.to_radians();
        (r.sin(), r.cos())
    };
    let pos = vec![(0.0, 0.0), arm(0.0), arm(95.0), arm(180.0), arm(280.0)];
    CityGraph::from_positions(&pos, &[(0, 1), (0, 2), (0, 3), (0, 4)], 4).expect("cross is valid")
}

/// A `w x h` street lattice, row-major ids, unit spacing.
pub fn lattice(w: usize, h: usize) -> CityGraph {
    let mut pos = Vec::new();
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let id = (y * w + x) as u32;
            pos.push((x as f64, y as f64));
            if x + 1 < w {
                pairs.push((id, id + 1));
            }
            if y + 1 < h {
                pairs.push((id, id + w as u32));
            }
        }
    }
    CityGraph::from_positions(&pos, &pairs, 4).expect("lattice is valid")
}

pub fn ids(raw: &[u32]) -> Vec<NodeId> {
    raw.iter().copied().map(NodeId).collect()
}
