use std::collections::BTreeSet;

use super::{CityGraph, NodeId};

/// Nodes with more than two neighbors.
pub fn key_points(graph: &CityGraph) -> BTreeSet<NodeId> {
    graph.nodes().map(|(id, _)| id).filter(|&id| graph.is_key_point(id)).collect()
}

/// Minimal hop count between `a` and `b`.
pub fn shortest_path_len(graph: &CityGraph, a: NodeId, b: NodeId) -> u32 {
    if a == b {
        return 0;
    }
    graph.bfs(a)[b.index()].expect("validated graphs are connected")
}

/// All-pairs hop distances, computed once by breadth-first search from every node.
#[derive(Clone, Debug, PartialEq)]
pub struct HopTable {
    n: usize,
    dist: Vec<u32>,
}

impl HopTable {
    pub fn new(graph: &CityGraph) -> Self {
        let n = graph.node_count();
        let mut dist = Vec::with_capacity(n * n);
        for (id, _) in graph.nodes() {
            dist.extend(graph.bfs(id).into_iter().map(|d| d.expect("validated graphs are connected")));
        }
        Self { n, dist }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> u32 {
        self.dist[a.index() * self.n + b.index()]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::{path_graph, star_graph};

    #[test]
    fn path_graph_has_no_key_points() {
        assert!(key_points(&path_graph(5)).is_empty());
    }

    #[test]
    fn star_center_is_the_only_key_point() {
        let g = star_graph(3);
        assert_eq!(key_points(&g), [NodeId(0)].into_iter().collect());
    }

    #[test]
    fn path_endpoints_are_four_apart() {
        let g = path_graph(5);
        assert_eq!(shortest_path_len(&g, NodeId(0), NodeId(4)), 4);
        assert_eq!(shortest_path_len(&g, NodeId(2), NodeId(2)), 0);
        let t = HopTable::new(&g);
        assert_eq!(t.get(NodeId(4), NodeId(0)), 4);
    }
}
