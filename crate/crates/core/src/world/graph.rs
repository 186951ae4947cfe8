use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::WorldError;

/// Dense node index, `0..node_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The fixed landmark catalog, shared with the instruction vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LandmarkKind {
    Hydrant,
    Mailbox,
    Awning,
    Bench,
    Streetlight,
    Scaffolding,
    Kiosk,
    Planter,
}

impl LandmarkKind {
    pub const ALL: [LandmarkKind; 8] = [
        LandmarkKind::Hydrant,
        LandmarkKind::Mailbox,
        LandmarkKind::Awning,
        LandmarkKind::Bench,
        LandmarkKind::Streetlight,
        LandmarkKind::Scaffolding,
        LandmarkKind::Kiosk,
        LandmarkKind::Planter,
    ];

    pub const COUNT: usize = 8;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LandmarkKind::Hydrant => "hydrant",
            LandmarkKind::Mailbox => "mailbox",
            LandmarkKind::Awning => "awning",
            LandmarkKind::Bench => "bench",
            LandmarkKind::Streetlight => "streetlight",
            LandmarkKind::Scaffolding => "scaffolding",
            LandmarkKind::Kiosk => "kiosk",
            LandmarkKind::Planter => "planter",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub kind: LandmarkKind,
    /// Direction from the node to the landmark, degrees clockwise from north.
    pub bearing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    pub landmarks: Vec<Landmark>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: NodeId,
    /// Degrees clockwise from north, in `[0, 360)`.
    pub heading: f64,
}

/// Tolerance for the reverse-edge heading check.
pub const HEADING_TOLERANCE: f64 = 1e-6;

/// Bidirectional street graph. Immutable once validated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CityGraph {
    nodes: Vec<Node>,
    adj: Vec<Vec<Edge>>,
    max_degree: usize,
}

/// Heading of the segment from `(x0, y0)` to `(x1, y1)`, degrees clockwise from north.
pub fn heading_between(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let h = (x1 - x0).atan2(y1 - y0).to_degrees().rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

impl CityGraph {
    /// Builds and validates a graph. Adjacency lists are sorted by destination.
    pub fn new(nodes: Vec<Node>, mut adj: Vec<Vec<Edge>>, max_degree: usize) -> Result<Self, WorldError> {
        for list in &mut adj {
            list.sort_by_key(|e| e.to);
        }
        let g = Self { nodes, adj, max_degree };
        g.validate()?;
        Ok(g)
    }

    /// Graph with edges between the listed pairs, headings derived from positions.
    pub fn from_positions(
        positions: &[(f64, f64)],
        pairs: &[(u32, u32)],
        max_degree: usize,
    ) -> Result<Self, WorldError> {
        let nodes: Vec<Node> = positions.iter().map(|&(x, y)| Node { x, y, landmarks: vec![] }).collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(a, b) in pairs {
            let (ai, bi) = (a as usize, b as usize);
            if ai >= nodes.len() || bi >= nodes.len() {
                return Err(WorldError::UnknownNode(a.max(b)));
            }
            let h = heading_between(nodes[ai].x, nodes[ai].y, nodes[bi].x, nodes[bi].y);
            adj[ai].push(Edge { to: NodeId(b), heading: h });
            adj[bi].push(Edge { to: NodeId(a), heading: (h + 180.0).rem_euclid(360.0) });
        }
        Self::new(nodes, adj, max_degree)
    }

    pub fn with_landmarks(mut self, node: NodeId, landmarks: Vec<Landmark>) -> Self {
        self.nodes[node.index()].landmarks = landmarks;
        self
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(WorldError::Invalid("graph has no nodes".into()));
        }
        if self.adj.len() != n {
            return Err(WorldError::Invalid("adjacency size differs from node count".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(WorldError::Invalid(format!("node {i} has a non-finite position")));
            }
            for lm in &node.landmarks {
                if !(0.0..360.0).contains(&lm.bearing) {
                    return Err(WorldError::Invalid(format!("node {i} landmark bearing {} out of range", lm.bearing)));
                }
            }
        }
        for (i, list) in self.adj.iter().enumerate() {
            if list.is_empty() && n > 1 {
                return Err(WorldError::Invalid(format!("node {i} is isolated")));
            }
            if list.len() > self.max_degree {
                return Err(WorldError::Invalid(format!(
                    "node {i} has degree {} above the bound {}",
                    list.len(),
                    self.max_degree
                )));
            }
            for (k, e) in list.iter().enumerate() {
                let j = e.to.index();
                if j >= n {
                    return Err(WorldError::UnknownNode(e.to.0));
                }
                if j == i {
                    return Err(WorldError::Invalid(format!("self-loop at node {i}")));
                }
                if k > 0 && list[k - 1].to == e.to {
                    return Err(WorldError::Invalid(format!("parallel edges {i} -> {j}")));
                }
                if !(0.0..360.0).contains(&e.heading) {
                    return Err(WorldError::Invalid(format!("edge {i} -> {j} heading {} out of range", e.heading)));
                }
                let Some(back) = self.adj[j].iter().find(|b| b.to.index() == i) else {
                    return Err(WorldError::Invalid(format!("edge {i} -> {j} has no reverse edge")));
                };
                let diff = (back.heading - (e.heading + 180.0)).rem_euclid(360.0);
                if diff.min(360.0 - diff) > HEADING_TOLERANCE {
                    return Err(WorldError::Invalid(format!(
                        "edge {i} -> {j} heading {} is not opposite its reverse {}",
                        e.heading, back.heading
                    )));
                }
            }
        }
        let reached = self.bfs(NodeId(0)).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(WorldError::Invalid(format!("graph is disconnected ({reached} of {n} nodes reachable)")));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        &self.adj[id.index()]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adj[id.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj[id.index()].iter().map(|e| e.to)
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&Edge> {
        self.adj[from.index()].iter().find(|e| e.to == to)
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.edge(a, b).is_some()
    }

    /// Intersection predicate: more than two neighbors.
    pub fn is_key_point(&self, id: NodeId) -> bool {
        self.degree(id) > 2
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs(&self, src: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[src.index()] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for e in &self.adj[u.index()] {
                if dist[e.to.index()].is_none() {
                    dist[e.to.index()] = Some(du + 1);
                    queue.push_back(e.to);
                }
            }
        }
        dist
    }
}
