//! Line-oriented graph documents.
//!
//! ```text
//! # comment
//! N <id> <x> <y> [<kind>:<bearing> ...]
//! E <src> <dst> <heading_deg>
//! ```
//!
//! Node ids must cover `0..n` exactly once; every edge needs its reverse.

use std::fmt::Write as _;

use super::{CityGraph, Edge, Landmark, LandmarkKind, Node, NodeId, WorldError};

pub const DEFAULT_MAX_DEGREE: usize = 4;

pub fn save_graph(graph: &CityGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nodes {} edges {}", graph.node_count(), graph.edge_count());
    for (id, node) in graph.nodes() {
        let _ = write!(out, "N {} {} {}", id, node.x, node.y);
        for lm in &node.landmarks {
            let _ = write!(out, " {}:{}", lm.kind.name(), lm.bearing);
        }
        out.push('\n');
    }
    for (id, _) in graph.nodes() {
        for e in graph.edges(id) {
            let _ = writeln!(out, "E {} {} {}", id, e.to, e.heading);
        }
    }
    out
}

pub fn load_graph(doc: &str) -> Result<CityGraph, WorldError> {
    load_graph_with(doc, DEFAULT_MAX_DEGREE)
}

pub fn load_graph_with(doc: &str, max_degree: usize) -> Result<CityGraph, WorldError> {
    let mut nodes: Vec<Option<Node>> = Vec::new();
    let mut edges: Vec<(usize, u32, u32, f64)> = Vec::new();
    let err = |line: usize, msg: String| WorldError::Parse { line, msg };

    for (i, raw) in doc.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let num = |s: &str, what: &str| -> Result<f64, WorldError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("invalid {what} `{s}`")))
        };
        let id = |s: &str| -> Result<u32, WorldError> {
            s.parse::<u32>().map_err(|_| err(line, format!("invalid node id `{s}`")))
        };
        match fields[0] {
            "N" => {
                if fields.len() < 4 {
                    return Err(err(line, "node line needs `N <id> <x> <y>`".into()));
                }
                let nid = id(fields[1])? as usize;
                let (x, y) = (num(fields[2], "x")?, num(fields[3], "y")?);
                let mut landmarks = Vec::new();
                for tok in &fields[4..] {
                    let (kind, bearing) =
                        tok.split_once(':').ok_or_else(|| err(line, format!("landmark `{tok}` is not kind:bearing")))?;
                    let kind =
                        LandmarkKind::from_name(kind).ok_or_else(|| err(line, format!("unknown landmark kind `{kind}`")))?;
                    let bearing = num(bearing, "bearing")?;
                    if !(0.0..360.0).contains(&bearing) {
                        return Err(err(line, format!("bearing {bearing} out of range [0, 360)")));
                    }
                    landmarks.push(Landmark { kind, bearing });
                }
                if nodes.len() <= nid {
                    nodes.resize(nid + 1, None);
                }
                if nodes[nid].is_some() {
                    return Err(err(line, format!("duplicate node id {nid}")));
                }
                nodes[nid] = Some(Node { x, y, landmarks });
            }
            "E" => {
                if fields.len() != 4 {
                    return Err(err(line, "edge line needs `E <src> <dst> <heading>`".into()));
                }
                let heading = num(fields[3], "heading")?;
                if !(0.0..360.0).contains(&heading) {
                    return Err(err(line, format!("heading {heading} out of range [0, 360)")));
                }
                edges.push((line, id(fields[1])?, id(fields[2])?, heading));
            }
            other => return Err(err(line, format!("unknown record type `{other}`"))),
        }
    }

    if let Some(missing) = nodes.iter().position(Option::is_none) {
        return Err(err(0, format!("node ids must be contiguous from 0; id {missing} is missing")));
    }
    let nodes: Vec<Node> = nodes.into_iter().map(|n| n.expect("checked above")).collect();
    let mut adj: Vec<Vec<Edge>> = vec![Vec::new(); nodes.len()];
    for (line, src, dst, heading) in edges {
        for end in [src, dst] {
            if end as usize >= nodes.len() {
                return Err(err(line, format!("edge references unknown node {end}")));
            }
        }
        if adj[src as usize].iter().any(|e| e.to == NodeId(dst)) {
            return Err(err(line, format!("parallel edge {src} -> {dst}")));
        }
        adj[src as usize].push(Edge { to: NodeId(dst), heading });
    }
    CityGraph::new(nodes, adj, max_degree)
}
