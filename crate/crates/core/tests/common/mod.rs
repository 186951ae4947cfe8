#![allow(dead_code)]

use stopnav::language::{generate_instruction, Vocabulary};
use stopnav::model::{ConvLayer, ModelConfig, Variant};
use stopnav::training::{NavContext, Sample};
use stopnav::world::{generate_city, sample_route, CityConfig, ObservationConfig, RouteSpec};

pub fn vocab() -> Vocabulary {
    Vocabulary::standard()
}

/// The default city with `t_max` 40.
pub fn default_ctx() -> NavContext {
    let city = generate_city(&CityConfig::default(), 3).unwrap();
    NavContext::new(city, ObservationConfig::default(), 40)
}

/// Samples with consecutive generation seeds.
pub fn samples(ctx: &NavContext, seeds: std::ops::Range<u64>, spec: &RouteSpec) -> Vec<Sample> {
    let v = vocab();
    seeds
        .map(|s| {
            let route = sample_route(&ctx.graph, s, spec).unwrap();
            let instruction = generate_instruction(&route, &ctx.graph, s, &v);
            Sample { route, instruction }
        })
        .collect()
}

pub fn desk(variant: Variant) -> ModelConfig {
    ModelConfig::desk(vocab().len()).with_variant(variant)
}

/// A very small model over 8x8 observations.
pub fn tiny(variant: Variant) -> ModelConfig {
    ModelConfig {
        word_embed: 3,
        text_hidden: 3,
        conv: vec![ConvLayer { kernels: 2, size: 3, stride: 2 }],
        visual_dim: 3,
        obs_grid: 8,
        trajectory_hidden: 4,
        action_embed: 2,
        time_embed: 3,
        t_max: 6,
        ..desk(variant)
    }
}

/// Ten (predicted, reference) pairs on the default city: reference prefixes,
/// every fourth one overshooting by an edge.
pub fn ten_episode_fixture() -> (stopnav::world::CityGraph, Vec<(Vec<stopnav::world::NodeId>, Vec<stopnav::world::NodeId>)>) {
    let g = generate_city(&CityConfig::default(), 3).unwrap();
    let episodes = (0..10u64)
        .map(|s| {
            let r = sample_route(&g, s, &RouteSpec::default()).unwrap();
            let cut = 1 + (s as usize * 3) % r.len();
            let mut p = r[..cut].to_vec();
            if s % 4 == 0 {
                let last = *p.last().unwrap();
                p.push(g.edges(last)[0].to);
            }
            (p, r)
        })
        .collect();
    (g, episodes)
}

/// A 60-node city, 50/10/10 episodes and the tiny model, for plumbing tests.
pub const SMOKE_CONFIG: &str = "
city.node_count = 60
city.grid_extent = 10
data.train = 50
data.dev = 10
data.test = 10
train.max_epochs = 5
obs.grid = 8
model.word_embed = 3
model.text_hidden = 3
model.conv = 2x3s2
model.visual_dim = 3
model.trajectory_hidden = 4
model.action_embed = 2
model.time_embed = 3
";
