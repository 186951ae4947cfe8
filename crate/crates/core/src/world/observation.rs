//! Egocentric top-down rendering of nearby landmarks and streets.
//!
//! The view is a square window of half-width `view_range` centred on the
//! agent and rotated so that the current heading points to row 0. Cell
//! `(row, col)` covers forward offsets `R - (row+1)·s .. R - row·s` and
//! rightward offsets `-R + col·s .. -R + (col+1)·s`, with `s = 2R / L`.
//! Landmark channels mark the single cell containing the landmark; the
//! optional street channel marks every cell whose centre lies within
//! `0.6·s` of a street segment.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::generate::LANDMARK_OFFSET;
use super::{CityGraph, LandmarkKind, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub grid: usize,
    /// Half-width of the view window in world units.
    pub view_range: f64,
    pub street_channel: bool,
    /// Landmark offset from its node, in world units.
    pub landmark_offset: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self { grid: 16, view_range: 2.5, street_channel: true, landmark_offset: LANDMARK_OFFSET }
    }
}

impl ObservationConfig {
    pub fn channels(&self) -> usize {
        LandmarkKind::COUNT + usize::from(self.street_channel)
    }

    pub fn len(&self) -> usize {
        self.channels() * self.grid * self.grid
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self) -> f64 {
        2.0 * self.view_range / self.grid as f64
    }
}

/// `[channels, grid, grid]` occupancy tensor with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub channels: usize,
    pub grid: usize,
    pub data: Vec<f64>,
}

impl Observation {
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[(channel * self.grid + row) * self.grid + col]
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let g = self.grid;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, _)| (i / (g * g), (i / g) % g, i % g))
    }
}

/// Offset `(dx, dy)` in world axes to (forward, right) for heading `deg`.
fn egocentric(dx: f64, dy: f64, heading_deg: f64) -> (f64, f64) {
    let (s, c) = heading_deg.to_radians().sin_cos();
    (dx * s + dy * c, dx * c - dy * s)
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Renders the view from `node` while facing `heading`.
pub fn observe(graph: &CityGraph, node: NodeId, heading: f64, cfg: &ObservationConfig) -> Observation {
    let l = cfg.grid;
    let r = cfg.view_range;
    let cell = cfg.cell();
    let mut data = vec![0.0; cfg.len()];
    let here = graph.node(node);
    let reach = r * std::f64::consts::SQRT_2 + cfg.landmark_offset;

    let to_cell = |f: f64, rt: f64| -> Option<(usize, usize)> {
        if f.abs() >= r || rt.abs() >= r {
            return None;
        }
        let row = ((r - f) / cell).floor() as usize;
        let col = ((rt + r) / cell).floor() as usize;
        (row < l && col < l).then_some((row, col))
    };

    for (_, n) in graph.nodes() {
        let (dx, dy) = (n.x - here.x, n.y - here.y);
        if dx.abs() > reach || dy.abs() > reach {
            continue;
        }
        for lm in &n.landmarks {
            let (bs, bc) = lm.bearing.to_radians().sin_cos();
            let (f, rt) = egocentric(dx + cfg.landmark_offset * bs, dy + cfg.landmark_offset * bc, heading);
            if let Some((row, col)) = to_cell(f, rt) {
                data[(lm.kind.index() * l + row) * l + col] = 1.0;
            }
        }
    }

    if cfg.street_channel {
        let ch = LandmarkKind::COUNT;
        let band = 0.6 * cell;
        let mut segments = Vec::new();
        for (id, n) in graph.nodes() {
            let (dx, dy) = (n.x - here.x, n.y - here.y);
            for e in graph.edges(id) {
                if e.to < id {
                    continue;
                }
                let m = graph.node(e.to);
                let (ex, ey) = (m.x - here.x, m.y - here.y);
                let near = |x: f64, y: f64| x.abs() <= reach + 1.5 && y.abs() <= reach + 1.5;
                if near(dx, dy) || near(ex, ey) {
                    segments.push((egocentric(dx, dy, heading), egocentric(ex, ey, heading)));
                }
            }
        }
        for row in 0..l {
            let f = r - (row as f64 + 0.5) * cell;
            for col in 0..l {
                let rt = -r + (col as f64 + 0.5) * cell;
                if segments.iter().any(|&(a, b)| point_segment_distance((f, rt), a, b) <= band) {
                    data[(ch * l + row) * l + col] = 1.0;
                }
            }
        }
    }

    Observation { channels: cfg.channels(), grid: l, data }
}

/// Thread-safe memo of rendered observations keyed by node and heading.
#[derive(Debug, Default)]
pub struct ObservationCache {
    map: Mutex<HashMap<(NodeId, u64), Arc<Observation>>>,
}

impl ObservationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, graph: &CityGraph, node: NodeId, heading: f64, cfg: &ObservationConfig) -> Arc<Observation> {
        let key = (node, heading.to_bits());
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Arc::clone(hit);
        }
        let obs = Arc::new(observe(graph, node, heading, cfg));
        self.map.lock().expect("cache lock").insert(key, Arc::clone(&obs));
        obs
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
