use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{reference_action, start_heading, CityGraph, NodeId, WorldError};
use crate::rng;

/// Constraints on sampled reference routes. Lengths count nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub min_len: usize,
    pub max_len: usize,
    /// Minimum number of key points among the decision nodes (all but the goal).
    pub min_key_points: usize,
    pub max_key_points: usize,
    pub max_attempts: usize,
}

impl Default for RouteSpec {
    fn default() -> Self {
        Self { min_len: 6, max_len: 14, min_key_points: 1, max_key_points: 6, max_attempts: 2000 }
    }
}

/// Key points at which a direction is chosen along `route` (the goal excluded).
pub fn decision_key_points(graph: &CityGraph, route: &[NodeId]) -> usize {
    route[..route.len().saturating_sub(1)].iter().filter(|&&n| graph.is_key_point(n)).count()
}

/// True when `route` is a simple path of graph edges that the heading rule can follow.
pub fn is_followable(graph: &CityGraph, route: &[NodeId]) -> bool {
    if route.is_empty() || route.iter().any(|n| !graph.contains(*n)) {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    if !route.iter().all(|n| seen.insert(*n)) {
        return false;
    }
    let mut heading = start_heading(graph, route);
    for w in route.windows(2) {
        if reference_action(graph, w[0], heading, w[1]).is_none() {
            return false;
        }
        heading = graph.edge(w[0], w[1]).map(|e| e.heading).unwrap_or(heading);
    }
    true
}

/// Samples a simple, heading-rule-followable path meeting `spec`.
pub fn sample_route(graph: &CityGraph, seed: u64, spec: &RouteSpec) -> Result<Vec<NodeId>, WorldError> {
    if spec.min_len < 2 || spec.min_len > spec.max_len || spec.min_key_points > spec.max_key_points {
        return Err(WorldError::Config(format!("infeasible route spec {spec:?}")));
    }
    let mut rng = rng::stream("route", seed);
    let n = graph.node_count();
    for _ in 0..spec.max_attempts {
        let target = rng.gen_range(spec.min_len..=spec.max_len);
        let start = NodeId(rng.gen_range(0..n) as u32);
        let Some(first) = graph.edges(start).choose(&mut rng) else { continue };
        let mut route = vec![start, first.to];
        let mut heading = first.heading;
        while route.len() < target {
            let here = *route.last().expect("nonempty");
            let options: Vec<_> = graph
                .edges(here)
                .iter()
                .filter(|e| !route.contains(&e.to))
                .filter(|e| reference_action(graph, here, heading, e.to).is_some())
                .collect();
            let straight = options
                .iter()
                .find(|e| reference_action(graph, here, heading, e.to) == Some(super::Action::Forward));
            let pick = match straight {
                Some(s) if rng.gen_bool(0.5) => Some(*s),
                _ => options.choose(&mut rng).copied(),
            };
            let Some(e) = pick else { break };
            route.push(e.to);
            heading = e.heading;
        }
        if route.len() < spec.min_len {
            continue;
        }
        let kp = decision_key_points(graph, &route);
        if kp < spec.min_key_points || kp > spec.max_key_points {
            continue;
        }
        return Ok(route);
    }
    Err(WorldError::Sampling(format!(
        "no route with {}..={} nodes and {}..={} key points after {} attempts",
        spec.min_len, spec.max_len, spec.min_key_points, spec.max_key_points, spec.max_attempts
    )))
}
