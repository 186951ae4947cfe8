use stopnav::language::{instruction_text, normalize, turn_words};
use stopnav::world::{generate_city, sample_route, CityConfig, CityGraph, NodeId, RouteSpec};

/// Turn words expected at each key point, recomputed from node coordinates.
/// Returns None when some turn falls outside every direction bin.
fn geometric_turns(g: &CityGraph, route: &[NodeId]) -> Option<Vec<&'static str>> {
    let pos = |n: NodeId| (g.node(n).x, g.node(n).y);
    let bearing = |a: NodeId, b: NodeId| {
        let (ax, ay) = pos(a);
        let (bx, by) = pos(b);
        (bx - ax).atan2(by - ay).to_degrees()
    };
    let mut out = Vec::new();
    for i in 0..route.len() - 1 {
        if g.degree(route[i]) <= 2 {
            continue;
        }
        let incoming = if i == 0 { bearing(route[0], route[1]) } else { bearing(route[i - 1], route[i]) };
        let mut rel = bearing(route[i], route[i + 1]) - incoming;
        while rel > 180.0 {
            rel -= 360.0;
        }
        while rel <= -180.0 {
            rel += 360.0;
        }
        out.push(match rel {
            r if r.abs() <= 45.0 => "straight",
            r if r < -45.0 && r > -135.0 => "left",
            r if r > 45.0 && r < 135.0 => "right",
            _ => return None,
        });
    }
    Some(out)
}

fn turns(text: &str) -> Vec<String> {
    normalize(text).split(' ').filter(|w| turn_words().contains(w)).map(String::from).collect()
}

#[test]
fn turn_clauses_match_geometry() {
    let city = generate_city(&CityConfig::default(), 3).unwrap();
    let mut checked = 0;
    for seed in 0..300 {
        let route = sample_route(&city, seed, &RouteSpec::default()).unwrap();
        let Some(expected) = geometric_turns(&city, &route) else { continue };
        assert_eq!(turns(&instruction_text(&route, &city, seed)), expected, "seed {seed}");
        checked += 1;
    }
    assert!(checked > 250, "{checked}");
}

#[test]
fn left_then_right_route_keeps_clause_order() {
    let city = generate_city(&CityConfig::default(), 3).unwrap();
    let route = (0..2000)
        .map(|s| sample_route(&city, s, &RouteSpec::default()).unwrap())
        .find(|r| {
            geometric_turns(&city, r)
                .map(|t| t.into_iter().filter(|w| *w != "straight").collect::<Vec<_>>() == ["left", "right"])
                .unwrap_or(false)
        })
        .expect("seed-3 city has a left-then-right route");
    let text = normalize(&instruction_text(&route, &city, 0));
    let l = text.find("left").unwrap();
    let r = text.find("right").unwrap();
    assert!(l < r, "{text}");
}
