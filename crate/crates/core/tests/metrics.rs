mod common;

use proptest::prelude::*;
use stopnav::metrics::{
    cls, dtw, edit_distance, episode_metrics, evaluate, sdtw, sed, spd, task_completion, MetricsConfig, TrajectoryPair,
};
use stopnav::world::{generate_city, sample_route, CityConfig, CityGraph, HopTable, NodeId, RouteSpec};

fn floyd_warshall(g: &CityGraph) -> Vec<Vec<u32>> {
    let n = g.node_count();
    let inf = u32::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for e in g.edges(NodeId(i as u32)) {
            d[i][e.to.0 as usize] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Minimum cost over every monotone alignment path, by explicit recursion.
fn dtw_exhaustive(p: &[NodeId], r: &[NodeId], h: &HopTable) -> f64 {
    fn go(i: usize, j: usize, p: &[NodeId], r: &[NodeId], h: &HopTable) -> f64 {
        let c = f64::from(h.get(p[i], r[j]));
        if i + 1 == p.len() && j + 1 == r.len() {
            return c;
        }
        let mut best = f64::INFINITY;
        if i + 1 < p.len() {
            best = best.min(go(i + 1, j, p, r, h));
        }
        if j + 1 < r.len() {
            best = best.min(go(i, j + 1, p, r, h));
        }
        if i + 1 < p.len() && j + 1 < r.len() {
            best = best.min(go(i + 1, j + 1, p, r, h));
        }
        c + best
    }
    go(0, 0, p, r, h)
}

fn walk(g: &CityGraph, start: u32, len: usize, choices: &[usize]) -> Vec<NodeId> {
    let mut out = vec![NodeId(start % g.node_count() as u32)];
    for k in 0..len.saturating_sub(1) {
        let here = *out.last().unwrap();
        let edges = g.edges(here);
        out.push(edges[choices[k % choices.len()] % edges.len()].to);
    }
    out
}

fn city() -> CityGraph {
    generate_city(&CityConfig::default(), 3).unwrap()
}

#[test]
fn spd_matches_floyd_warshall() {
    let g = city();
    let h = HopTable::new(&g);
    let fw = floyd_warshall(&g);
    for k in 0..100u32 {
        let p = walk(&g, k * 7, 1 + (k as usize % 5), &[k as usize, 3, 1]);
        let r = walk(&g, k * 13 + 5, 2 + (k as usize % 4), &[2, k as usize]);
        let pair = TrajectoryPair::new(&g, &p, &r).unwrap();
        let expect = fw[p.last().unwrap().0 as usize][r.last().unwrap().0 as usize];
        assert_eq!(spd(&pair, &h), expect);
    }
}

#[test]
fn golden_report_on_ten_episodes() {
    let (g, episodes) = common::ten_episode_fixture();
    let h = HopTable::new(&g);
    let rep = evaluate(&g, &h, &episodes, &MetricsConfig::default()).unwrap();
    let m = rep.mean.values();
    for (k, v) in m.iter().enumerate() {
        let avg: f64 = rep.episodes.iter().map(|e| e.values()[k]).sum::<f64>() / 10.0;
        assert!((v - avg).abs() < 1e-12);
    }
    for (got, want) in m.iter().zip(GOLDEN_MEANS) {
        assert!((got - want).abs() < 1e-9, "{m:?}");
    }
}

// Frozen from the first verified build.
const GOLDEN_MEANS: [f64; 5] = [0.1, 3.5, 0.09, 0.5488033144951355, 0.0951229424500714];

proptest! {
    #[test]
    fn dtw_equals_exhaustive(start_p in 0u32..300, start_r in 0u32..300, lp in 1usize..=7, lr in 1usize..=7,
                             cp in prop::collection::vec(0usize..4, 1..8), cr in prop::collection::vec(0usize..4, 1..8)) {
        let g = city();
        let h = HopTable::new(&g);
        let p = walk(&g, start_p, lp, &cp);
        let r = walk(&g, start_r, lr, &cr);
        let fast = dtw(&p, &r, &h);
        prop_assert!((fast - dtw_exhaustive(&p, &r, &h)).abs() < 1e-12);
        prop_assert!(fast >= 0.0);
    }

    #[test]
    fn edit_distance_is_a_metric(a in prop::collection::vec(0u8..4, 0..7), b in prop::collection::vec(0u8..4, 0..7),
                                 c in prop::collection::vec(0u8..4, 0..7)) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert_eq!(edit_distance(&a, &b) == 0, a == b);
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }

    #[test]
    fn scores_bounded_and_gated(start_p in 0u32..300, lp in 1usize..=10, cp in prop::collection::vec(0usize..4, 1..8),
                                route_seed in 0u64..50, theta in 0.05f64..20.0, dth in 0.05f64..20.0) {
        let g = city();
        let h = HopTable::new(&g);
        let r = sample_route(&g, route_seed, &RouteSpec::default()).unwrap();
        let p = walk(&g, start_p, lp, &cp);
        let pair = TrajectoryPair::new(&g, &p, &r).unwrap();
        let cfg = MetricsConfig { cls_theta: theta, dtw_threshold: dth, ..Default::default() };
        let tc = task_completion(&pair, &h, 1);
        let (s, d, c) = (sed(&pair, &h, &cfg), sdtw(&pair, &h, &cfg), cls(&pair, &h, theta));
        for v in [s, d, c] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(s <= tc && d <= tc);
        let m = episode_metrics(&pair, &h, &cfg);
        prop_assert!(m.spd >= 0.0);
    }
}
