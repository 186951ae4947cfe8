//! Street graphs, the four-action episode model, and egocentric observations.

pub mod fixtures;
mod generate;
mod graph;
mod io;
mod nav;
mod observation;
mod paths;
mod route;

pub use generate::{generate_city, CityConfig, LANDMARK_OFFSET};
pub use graph::{heading_between, CityGraph, Edge, Landmark, LandmarkKind, Node, NodeId, HEADING_TOLERANCE};
pub use io::{load_graph, load_graph_with, save_graph, DEFAULT_MAX_DEGREE};
pub use nav::{
    direction_bin, reference_action, relative_heading, select_edge, start_heading, Action, Episode, DEFAULT_T_MAX,
};
pub use observation::{observe, Observation, ObservationCache, ObservationConfig};
pub use paths::{key_points, shortest_path_len, HopTable};
pub use route::{decision_key_points, is_followable, sample_route, RouteSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("route sampling failed: {0}")]
    Sampling(String),
    #[error("episode is already done")]
    EpisodeDone,
}
