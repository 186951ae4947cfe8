use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{heading_between, CityGraph, Edge, Landmark, LandmarkKind, Node, NodeId, WorldError};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityConfig {
    pub node_count: usize,
    /// Side length of the square lattice the streets are laid on.
    pub grid_extent: usize,
    /// Probability that a node carries a landmark.
    pub landmark_density: f64,
    pub max_degree: usize,
    /// Probability that a landmark gets a same-kind twin two or three hops away.
    pub distractor_prob: f64,
    /// Lattice spacing between neighboring nodes.
    pub spacing: f64,
    /// Uniform positional jitter, as a fraction of the spacing.
    pub jitter: f64,
}

impl Default for CityConfig {
    fn default() -> Self {
        Self {
            node_count: 300,
            grid_extent: 24,
            landmark_density: 0.3,
            max_degree: 4,
            distractor_prob: 0.5,
            spacing: 1.0,
            jitter: 0.08,
        }
    }
}

const DIRS: [(i32, i32); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
const MIN_STREET: usize = 2;
const MAX_STREET: usize = 7;

/// Distance from a node to its landmarks, in lattice spacings.
pub const LANDMARK_OFFSET: f64 = 0.3;

struct Builder {
    cells: Vec<(i32, i32)>,
    at: HashMap<(i32, i32), usize>,
    adj: Vec<Vec<usize>>,
    max_degree: usize,
}

impl Builder {
    fn add_node(&mut self, cell: (i32, i32)) -> usize {
        let id = self.cells.len();
        self.cells.push(cell);
        self.at.insert(cell, id);
        self.adj.push(Vec::new());
        id
    }

    fn linked(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    fn can_link(&self, a: usize, b: usize) -> bool {
        self.adj[a].len() < self.max_degree && self.adj[b].len() < self.max_degree
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }
}

/// Grows a street network on a jittered square lattice.
///
/// Streets are laid one at a time: pick an existing node and a free
/// direction, then extend a straight street for 2..=7 cells, linking into
/// any node it runs into. Growth stops at exactly `node_count` nodes.
/// Landmarks are then scattered with `landmark_density`, and each one may
/// get a same-kind distractor two or three hops away.
pub fn generate_city(config: &CityConfig, seed: u64) -> Result<CityGraph, WorldError> {
    let n = config.node_count;
    if n < 2 {
        return Err(WorldError::Config(format!("node_count must be >= 2, got {n}")));
    }
    if config.max_degree < 1 || (config.max_degree < 2 && n > 2) {
        return Err(WorldError::Config(format!(
            "max_degree {} cannot connect {n} nodes",
            config.max_degree
        )));
    }
    if config.grid_extent * config.grid_extent < n {
        return Err(WorldError::Config(format!(
            "grid_extent {} holds at most {} nodes, {n} requested",
            config.grid_extent,
            config.grid_extent * config.grid_extent
        )));
    }
    if !(0.0..=1.0).contains(&config.landmark_density) || !(0.0..=1.0).contains(&config.distractor_prob) {
        return Err(WorldError::Config("landmark_density and distractor_prob must lie in [0, 1]".into()));
    }
    if !(config.spacing > 0.0) || !(0.0..0.25).contains(&config.jitter) {
        return Err(WorldError::Config("spacing must be > 0 and jitter in [0, 0.25)".into()));
    }

    let mut rng = rng::stream("city.layout", seed);
    let extent = config.grid_extent as i32;
    let mut b = Builder { cells: vec![], at: HashMap::new(), adj: vec![], max_degree: config.max_degree };
    b.add_node((extent / 2, extent / 2));

    let mut stalls = 0usize;
    while b.cells.len() < n {
        if stalls > 200 * n {
            return Err(WorldError::Config(format!(
                "could not grow {n} nodes within extent {} and degree bound {}",
                config.grid_extent, config.max_degree
            )));
        }
        let start = rng.gen_range(0..b.cells.len());
        if b.adj[start].len() >= config.max_degree {
            stalls += 1;
            continue;
        }
        let dir = DIRS[rng.gen_range(0..4)];
        let len = rng.gen_range(MIN_STREET..=MAX_STREET);
        let mut cur = start;
        let mut grew = false;
        for _ in 0..len {
            let (cx, cy) = b.cells[cur];
            let next = (cx + dir.0, cy + dir.1);
            if next.0 < 0 || next.1 < 0 || next.0 >= extent || next.1 >= extent {
                break;
            }
            if let Some(&other) = b.at.get(&next) {
                if b.linked(cur, other) {
                    cur = other;
                    continue;
                }
                if b.can_link(cur, other) {
                    b.link(cur, other);
                    grew = true;
                }
                break;
            }
            if b.cells.len() >= n || b.adj[cur].len() >= config.max_degree {
                break;
            }
            let new = b.add_node(next);
            b.link(cur, new);
            grew = true;
            cur = new;
        }
        if grew {
            stalls = 0;
        } else {
            stalls += 1;
        }
    }

    let mut nodes: Vec<Node> = b
        .cells
        .iter()
        .map(|&(cx, cy)| {
            let jx = rng.gen_range(-config.jitter..=config.jitter);
            let jy = rng.gen_range(-config.jitter..=config.jitter);
            Node {
                x: (f64::from(cx) + jx) * config.spacing,
                y: (f64::from(cy) + jy) * config.spacing,
                landmarks: vec![],
            }
        })
        .collect();

    place_landmarks(&mut nodes, &b.adj, config, seed);

    let adj: Vec<Vec<Edge>> = b
        .adj
        .iter()
        .enumerate()
        .map(|(i, list)| {
            list.iter()
                .map(|&j| Edge {
                    to: NodeId(j as u32),
                    heading: heading_between(nodes[i].x, nodes[i].y, nodes[j].x, nodes[j].y),
                })
                .collect()
        })
        .collect();
    // Reverse headings are recomputed from swapped endpoints, so they agree up to rounding.
    CityGraph::new(nodes, adj, config.max_degree)
}

fn place_landmarks(nodes: &mut [Node], adj: &[Vec<usize>], config: &CityConfig, seed: u64) {
    let mut rng = rng::stream("city.landmarks", seed);
    let mut primary = Vec::new();
    for (i, node) in nodes.iter_mut().enumerate() {
        if rng.gen_bool(config.landmark_density) {
            let kind = LandmarkKind::ALL[rng.gen_range(0..LandmarkKind::COUNT)];
            let bearing = f64::from(rng.gen_range(0u32..3600)) / 10.0;
            node.landmarks.push(Landmark { kind, bearing });
            primary.push((i, kind));
        }
    }
    for (i, kind) in primary {
        if !rng.gen_bool(config.distractor_prob) {
            continue;
        }
        let ring = hop_ring(adj, i, 2, 3);
        if let Some(&j) = ring.choose(&mut rng) {
            if nodes[j].landmarks.len() < 2 {
                let bearing = f64::from(rng.gen_range(0u32..3600)) / 10.0;
                nodes[j].landmarks.push(Landmark { kind, bearing });
            }
        }
    }
}

/// Nodes whose hop distance from `src` lies in `[lo, hi]`, in index order.
fn hop_ring(adj: &[Vec<usize>], src: usize, lo: u32, hi: u32) -> Vec<usize> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        if dist[u] >= hi {
            continue;
        }
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    (0..adj.len()).filter(|&v| (lo..=hi).contains(&dist[v])).collect()
}
