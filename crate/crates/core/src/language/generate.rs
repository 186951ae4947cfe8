use rand::seq::SliceRandom;
use rand::Rng;

use super::{tokenize, Instruction, Vocabulary, COLORS, NUMBERS, ORDINALS};
use crate::rng;
use crate::world::{reference_action, start_heading, Action, CityGraph, LandmarkKind, NodeId};

const OPENINGS: [&str; 4] = ["walk forward", "head down the street", "start walking", "go along the road"];
const CONNECTORS: [&str; 3] = ["then", "and", "next"];
const STRAIGHT: [&str; 3] = ["go straight", "continue straight", "keep going straight"];
const LEFT: [&str; 3] = ["turn left", "take a left", "make a left"];
const RIGHT: [&str; 3] = ["turn right", "take a right", "make a right"];

/// Words that name a direction in generated text; each turn clause holds exactly one.
pub fn turn_words() -> [&'static str; 3] {
    ["straight", "left", "right"]
}

fn phrase(rng: &mut impl Rng, action: Action) -> &'static str {
    let pool = match action {
        Action::Left => &LEFT,
        Action::Right => &RIGHT,
        _ => &STRAIGHT,
    };
    pool.choose(rng).expect("nonempty pool")
}

fn landmark_name(rng: &mut impl Rng, kind: LandmarkKind) -> String {
    if rng.gen_bool(0.3) {
        format!("{} {}", COLORS.choose(rng).expect("nonempty"), kind.name())
    } else {
        kind.name().to_string()
    }
}

fn number(n: usize) -> &'static str {
    NUMBERS[n.clamp(1, NUMBERS.len()) - 1]
}

/// Templated instruction text for `route`.
///
/// One direction clause per key point before the goal, in route order, then
/// a stop clause. Each direction clause names its location by ordinal with
/// probability 0.5 and by a landmark at the key point otherwise (ordinal when
/// the node has none). The stop clause references a goal landmark, else a
/// landmark one node before the goal, else counts blocks.
pub fn instruction_text(route: &[NodeId], graph: &CityGraph, seed: u64) -> String {
    let mut rng = rng::stream("instruction", seed);
    let mut parts = vec![OPENINGS.choose(&mut rng).expect("nonempty").to_string()];
    let mut heading = start_heading(graph, route);
    let mut ordinal = 0usize;
    let mut last_key = None;
    for (i, w) in route.windows(2).enumerate() {
        let (here, next) = (w[0], w[1]);
        if graph.is_key_point(here) {
            let action = reference_action(graph, here, heading, next).unwrap_or(Action::Forward);
            let landmarks = &graph.node(here).landmarks;
            let place = if rng.gen_bool(0.5) || landmarks.is_empty() || ordinal >= ORDINALS.len() {
                match ORDINALS.get(ordinal) {
                    Some(o) => format!("at the {o} intersection"),
                    None => "at the next intersection".to_string(),
                }
            } else {
                format!("at the {}", landmark_name(&mut rng, landmarks[0].kind))
            };
            let connector = CONNECTORS.choose(&mut rng).expect("nonempty");
            parts.push(format!("{connector} {place} {}", phrase(&mut rng, action)));
            ordinal += 1;
            last_key = Some(i);
        }
        if let Some(e) = graph.edge(here, next) {
            heading = e.heading;
        }
    }

    let goal = *route.last().expect("route is nonempty");
    let stop = if let Some(lm) = graph.node(goal).landmarks.first() {
        format!("stop at the {}", landmark_name(&mut rng, lm.kind))
    } else if let Some(lm) = route.len().checked_sub(2).and_then(|i| graph.node(route[i]).landmarks.first()) {
        format!("stop just past the {}", landmark_name(&mut rng, lm.kind))
    } else {
        let blocks = route.len() - 1 - last_key.unwrap_or(0);
        let unit = if blocks == 1 { "block" } else { "blocks" };
        match last_key {
            Some(_) => format!("stop {} {unit} after the last intersection", number(blocks)),
            None => format!("stop after {} {unit}", number(blocks)),
        }
    };
    parts.push(stop);
    parts.join(", ") + "."
}

/// Tokenized [`instruction_text`]; the route id is the generation seed.
pub fn generate_instruction(route: &[NodeId], graph: &CityGraph, seed: u64, vocab: &Vocabulary) -> Instruction {
    let mut ins = tokenize(&instruction_text(route, graph, seed), vocab).expect("templates fit the length limit");
    ins.route_id = seed;
    ins
}
