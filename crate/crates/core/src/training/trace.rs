use super::TrainingError;
use crate::world::{reference_action, select_edge, start_heading, Action, CityGraph, NodeId};

/// Ground truth for one teacher-forced step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub node: NodeId,
    /// Action that drives the environment.
    pub action: Action,
    /// Direction label, when the direction loss covers this step.
    pub direction: Option<Action>,
    /// Non-stop signal: true means continue.
    pub cont: bool,
}

/// Per-step supervision of a reference route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupervisionTrace {
    pub steps: Vec<TraceStep>,
}

impl SupervisionTrace {
    /// Builds the trace for `route`.
    ///
    /// With `key_point_gating` the direction label exists only at key points
    /// and other steps are driven by FORWARD; without it every move step is
    /// labelled with its reference action. The last step is STOP at the goal.
    pub fn new(graph: &CityGraph, route: &[NodeId], key_point_gating: bool) -> Result<Self, TrainingError> {
        if route.is_empty() {
            return Err(TrainingError::Data("route is empty".into()));
        }
        let mut heading = start_heading(graph, route);
        let mut steps = Vec::with_capacity(route.len());
        for w in route.windows(2) {
            let (node, next) = (w[0], w[1]);
            let reference = reference_action(graph, node, heading, next).ok_or_else(|| {
                TrainingError::Data(format!("no action moves from {node} to {next} under the heading rule"))
            })?;
            let key = graph.is_key_point(node);
            let (action, direction) = if key_point_gating && !key {
                if select_edge(graph, node, heading, Action::Forward) != Some(next) {
                    return Err(TrainingError::Data(format!("FORWARD at {node} does not follow the route")));
                }
                (Action::Forward, None)
            } else {
                (reference, Some(reference))
            };
            steps.push(TraceStep { node, action, direction, cont: true });
            heading = graph.edge(node, next).expect("route hops are edges").heading;
        }
        let goal = *route.last().expect("nonempty");
        steps.push(TraceStep { node: goal, action: Action::Stop, direction: None, cont: false });
        Ok(Self { steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// 4-way label per step for the one-branch head: the executed action.
    pub fn joint_labels(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.action.index()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::{ids, lattice};

    #[test]
    fn exactly_one_stop_label() {
        let g = lattice(4, 4);
        // 0 -> 1 -> 2 then north to 6 and 10.
        let route = ids(&[0, 1, 2, 6, 10]);
        let tr = SupervisionTrace::new(&g, &route, true).unwrap();
        assert_eq!(tr.steps.iter().filter(|s| !s.cont).count(), 1);
        assert!(!tr.steps.last().unwrap().cont);
        let actions: Vec<Action> = tr.steps.iter().map(|s| s.action).collect();
        assert_eq!(actions, [Action::Forward, Action::Forward, Action::Left, Action::Forward, Action::Stop]);
        // Node 0 is a corner (degree 2): no direction label there with gating.
        assert_eq!(tr.steps[0].direction, None);
        assert_eq!(tr.steps[2].direction, Some(Action::Left));
        let ungated = SupervisionTrace::new(&g, &route, false).unwrap();
        assert!(ungated.steps[..4].iter().all(|s| s.direction.is_some()));
    }
}
