use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CityGraph, NodeId, WorldError};

/// The four-action alphabet. Direction actions come first so that their
/// indices match the direction head's output order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Forward = 0,
    Left = 1,
    Right = 2,
    Stop = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Forward, Action::Left, Action::Right, Action::Stop];
    pub const DIRECTIONS: [Action; 3] = [Action::Forward, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_direction(self) -> bool {
        self != Action::Stop
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Forward => "FORWARD",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Stop => "STOP",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| WorldError::Invalid(format!("unknown action `{s}`")))
    }
}

/// `to - from` wrapped into `(-180, 180]`; positive is clockwise (rightward).
pub fn relative_heading(from: f64, to: f64) -> f64 {
    let r = (to - from).rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Direction bin of a relative heading, if it falls in one.
pub fn direction_bin(rel: f64) -> Option<Action> {
    if (-45.0..=45.0).contains(&rel) {
        Some(Action::Forward)
    } else if rel > -135.0 && rel < -45.0 {
        Some(Action::Left)
    } else if rel > 45.0 && rel < 135.0 {
        Some(Action::Right)
    } else {
        None
    }
}

/// Outgoing edge chosen by a direction action at `node` when arriving with
/// heading `incoming`.
///
/// Within the action's bin the smallest absolute relative heading wins; an
/// empty bin falls back to the globally smallest absolute relative heading
/// (so a dead end turns around). Ties go to the lower node id.
pub fn select_edge(graph: &CityGraph, node: NodeId, incoming: f64, action: Action) -> Option<NodeId> {
    if !action.is_direction() {
        return None;
    }
    let best = |in_bin: bool| {
        graph
            .edges(node)
            .iter()
            .map(|e| (e, relative_heading(incoming, e.heading)))
            .filter(|(_, rel)| !in_bin || direction_bin(*rel) == Some(action))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.to.cmp(&b.0.to)))
            .map(|(e, _)| e.to)
    };
    best(true).or_else(|| best(false))
}

/// Direction action that moves from `node` to its neighbor `next`.
///
/// Prefers the action whose bin contains the edge; otherwise any action
/// whose fallback reaches `next`.
pub fn reference_action(graph: &CityGraph, node: NodeId, incoming: f64, next: NodeId) -> Option<Action> {
    let edge = graph.edge(node, next)?;
    let preferred = direction_bin(relative_heading(incoming, edge.heading));
    preferred
        .into_iter()
        .chain(Action::DIRECTIONS)
        .find(|&a| select_edge(graph, node, incoming, a) == Some(next))
}

/// Heading an agent has when it starts at the head of `route`.
pub fn start_heading(graph: &CityGraph, route: &[NodeId]) -> f64 {
    match route {
        [a, b, ..] => graph.edge(*a, *b).map_or(0.0, |e| e.heading),
        _ => graph.edges(route[0]).first().map_or(0.0, |e| e.heading),
    }
}

/// Default episode horizon.
pub const DEFAULT_T_MAX: usize = 40;

/// One navigation episode driven by the four-action alphabet.
#[derive(Clone, Debug)]
pub struct Episode<'g> {
    graph: &'g CityGraph,
    node: NodeId,
    heading: f64,
    t: usize,
    t_max: usize,
    done: bool,
    route: Vec<NodeId>,
    path: Vec<NodeId>,
}

impl<'g> Episode<'g> {
    /// Episode starting at the head of `route`, facing along its first edge.
    pub fn new(graph: &'g CityGraph, route: Vec<NodeId>, t_max: usize) -> Result<Self, WorldError> {
        if route.is_empty() {
            return Err(WorldError::Invalid("route is empty".into()));
        }
        if let Some(bad) = route.iter().find(|n| !graph.contains(**n)) {
            return Err(WorldError::UnknownNode(bad.0));
        }
        if let Some(w) = route.windows(2).find(|w| !graph.adjacent(w[0], w[1])) {
            return Err(WorldError::Invalid(format!("route hop {} -> {} is not an edge", w[0], w[1])));
        }
        let heading = start_heading(graph, &route);
        let node = route[0];
        Ok(Self { graph, node, heading, t: 0, t_max, done: false, route, path: vec![node] })
    }

    pub fn graph(&self) -> &'g CityGraph {
        self.graph
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn route(&self) -> &[NodeId] {
        &self.route
    }

    pub fn goal(&self) -> NodeId {
        *self.route.last().expect("route is nonempty")
    }

    /// Visited nodes, starting node included.
    pub fn path(&self) -> &[NodeId] {
        &self.path
    }

    pub fn at_key_point(&self) -> bool {
        self.graph.is_key_point(self.node)
    }

    /// Applies one action. Reaching `t_max` moves ends the episode.
    pub fn step(&mut self, action: Action) -> Result<(), WorldError> {
        if self.done {
            return Err(WorldError::EpisodeDone);
        }
        if action == Action::Stop {
            self.done = true;
            return Ok(());
        }
        let next = select_edge(self.graph, self.node, self.heading, action)
            .ok_or_else(|| WorldError::Invalid(format!("node {} has no outgoing edge", self.node)))?;
        self.heading = self.graph.edge(self.node, next).expect("selected edge exists").heading;
        self.node = next;
        self.path.push(next);
        self.t += 1;
        if self.t >= self.t_max {
            self.done = true;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::{cross_intersection, path_graph};

    #[test]
    fn relative_heading_range() {
        assert_eq!(relative_heading(0.0, 180.0), 180.0);
        assert_eq!(relative_heading(180.0, 0.0), 180.0);
        assert_eq!(relative_heading(350.0, 10.0), 20.0);
        assert_eq!(relative_heading(10.0, 350.0), -20.0);
        assert_eq!(direction_bin(45.0), Some(Action::Forward));
        assert_eq!(direction_bin(-45.0), Some(Action::Forward));
        assert_eq!(direction_bin(-90.0), Some(Action::Left));
        assert_eq!(direction_bin(135.0), None);
    }

    #[test]
    fn stop_keeps_position() {
        let g = path_graph(4);
        let mut ep = Episode::new(&g, vec![NodeId(1), NodeId(2)], 40).unwrap();
        ep.step(Action::Stop).unwrap();
        assert!(ep.is_done());
        assert_eq!(ep.node(), NodeId(1));
        assert!(matches!(ep.step(Action::Forward), Err(WorldError::EpisodeDone)));
    }

    #[test]
    fn forward_through_degree_two() {
        let g = path_graph(4);
        let mut ep = Episode::new(&g, vec![NodeId(0), NodeId(1), NodeId(2)], 40).unwrap();
        ep.step(Action::Forward).unwrap();
        assert_eq!(ep.node(), NodeId(1));
        // Entered from 0; every direction action continues to 2.
        for a in Action::DIRECTIONS {
            assert_eq!(select_edge(&g, NodeId(1), ep.heading(), a), Some(NodeId(2)));
        }
    }

    #[test]
    fn dead_end_turns_around() {
        let g = path_graph(3);
        let heading = g.edge(NodeId(1), NodeId(2)).unwrap().heading;
        assert_eq!(select_edge(&g, NodeId(2), heading, Action::Forward), Some(NodeId(1)));
    }

    /// Enumerated by hand: the fixture's arms sit at relative headings
    /// 0 (north, node 1), +95 (east, node 2), 180 (south, node 3) and -80 (west, node 4).
    #[test]
    fn four_way_binning() {
        let g = cross_intersection();
        let center = NodeId(0);
        let rels: Vec<(NodeId, f64)> =
            g.edges(center).iter().map(|e| (e.to, relative_heading(0.0, e.heading))).collect();
        assert!((rels[0].1 - 0.0).abs() < 1e-9);
        assert!((rels[1].1 - 95.0).abs() < 1e-9);
        assert!((rels[2].1.abs() - 180.0).abs() < 1e-9);
        assert!((rels[3].1 + 80.0).abs() < 1e-9);
        assert_eq!(select_edge(&g, center, 0.0, Action::Left), Some(NodeId(4)));
        assert_eq!(select_edge(&g, center, 0.0, Action::Right), Some(NodeId(2)));
        assert_eq!(select_edge(&g, center, 0.0, Action::Forward), Some(NodeId(1)));
        assert_eq!(reference_action(&g, center, 0.0, NodeId(4)), Some(Action::Left));
        assert_eq!(reference_action(&g, center, 0.0, NodeId(3)), None);
    }

    #[test]
    fn horizon_forces_done() {
        let g = path_graph(3);
        let mut ep = Episode::new(&g, vec![NodeId(0), NodeId(1)], 5).unwrap();
        let mut transitions = 0;
        while !ep.is_done() {
            ep.step(Action::Forward).unwrap();
            transitions += 1;
        }
        assert_eq!(transitions, 5);
        assert_eq!(ep.path().len(), 6);
        assert!(ep.path().windows(2).all(|w| g.adjacent(w[0], w[1])));
    }
}
