mod common;

use rand::Rng;
use stopnav::metrics::{task_completion, TrajectoryPair};
use stopnav::model::{Model, PolicyOutput, Variant};
use stopnav::numeric::{AdamConfig, Tape};
use stopnav::rng;
use stopnav::training::*;
use stopnav::world::{Action, Episode, RouteSpec};

fn random_dist2(r: &mut impl Rng) -> [f64; 2] {
    let a: f64 = r.gen_range(1e-9..1.0);
    [a, 1.0 - a]
}

#[test]
fn unit_weight_stop_loss_is_cross_entropy_bitwise() {
    let mut r = rng::stream("test.traces", 1);
    for _ in 0..100 {
        let n = r.gen_range(1..30);
        let s: Vec<[f64; 2]> = (0..n).map(|_| random_dist2(&mut r)).collect();
        let cont: Vec<bool> = (0..n).map(|_| r.gen_bool(0.7)).collect();
        let labels: Vec<usize> = cont.iter().map(|&c| usize::from(!c)).collect();
        let weighted = stop_loss(&s, &cont, 1.0).unwrap().value;
        assert_eq!(weighted.to_bits(), cross_entropy(&s, &labels).to_bits());
    }
}

#[test]
fn total_loss_endpoints() {
    let mut r = rng::stream("test.totals", 2);
    for _ in 0..100 {
        let (d, s): (f64, f64) = (r.gen_range(0.0..50.0), r.gen_range(0.0..50.0));
        assert_eq!(total_loss(d, s, 1.0), d);
        assert_eq!(total_loss(d, s, 0.0), s);
    }
}

/// Teacher-forced stop probabilities, recomputed outside the trainer.
fn teacher_forced_stops(model: &Model, ctx: &NavContext, sample: &Sample) -> (Vec<[f64; 2]>, Vec<bool>) {
    let trace = SupervisionTrace::new(&ctx.graph, &sample.route, model.config().key_point_gating).unwrap();
    let mut tape = Tape::new(model.params());
    let mut state = model.start(&mut tape, &sample.instruction).unwrap();
    let mut ep = Episode::new(&ctx.graph, sample.route.clone(), usize::MAX).unwrap();
    let (mut s, mut o) = (Vec::new(), Vec::new());
    for step in &trace.steps {
        let obs = ctx.observe(ep.node(), ep.heading());
        let vars = model.step(&mut tape, &mut state, &obs).unwrap();
        s.push(PolicyOutput::from_step(&tape, vars).stop);
        o.push(step.cont);
        if step.action != Action::Stop {
            model.advance(&mut state, step.action);
        }
        ep.step(step.action).unwrap();
    }
    (s, o)
}

#[test]
fn trainer_stop_term_matches_recomputed_losses() {
    let ctx = common::default_ctx();
    let data = common::samples(&ctx, 0..5, &RouteSpec::default());
    let model = Model::new(common::desk(Variant::SharedEncDec), 4).unwrap();
    for sample in &data {
        let (s, o) = teacher_forced_stops(&model, &ctx, sample);
        for lambda in [1.0, 20.0] {
            let (l, _) = episode_loss(&model, &ctx, sample, &LossConfig { lambda, gamma: 0.0 }).unwrap();
            let expect = stop_loss(&s, &o, lambda).unwrap().value;
            assert!((l.stop - expect).abs() <= 1e-12 * expect.max(1.0), "{} vs {expect}", l.stop);
            assert_eq!(l.total, l.stop);
        }
    }
}

#[test]
fn loss_weights_separate_head_gradients() {
    let ctx = common::default_ctx();
    let sample = &common::samples(&ctx, 7..8, &RouteSpec::default())[0];
    for variant in Variant::ALL.into_iter().filter(|v| !v.is_one_branch()) {
        let model = Model::new(common::desk(variant), 9).unwrap();
        let (dir_only, stop_only) = model.branch_exclusive_params();
        assert!(!dir_only.is_empty() && !stop_only.is_empty());
        let (_, g) = episode_loss(&model, &ctx, sample, &LossConfig { lambda: 20.0, gamma: 0.0 }).unwrap();
        assert!(dir_only.iter().all(|&id| g.get(id).iter().all(|&x| x == 0.0)), "{variant}: gamma=0 moved the direction branch");
        assert!(stop_only.iter().any(|&id| g.get(id).iter().any(|&x| x != 0.0)));
        let (_, g) = episode_loss(&model, &ctx, sample, &LossConfig { lambda: 20.0, gamma: 1.0 }).unwrap();
        assert!(stop_only.iter().all(|&id| g.get(id).iter().all(|&x| x == 0.0)), "{variant}: gamma=1 moved the stop branch");
        assert!(dir_only.iter().any(|&id| g.get(id).iter().any(|&x| x != 0.0)));
    }
}

#[test]
fn single_episode_overfits() {
    let ctx = common::default_ctx();
    let sample = common::samples(&ctx, 11..12, &RouteSpec::default());
    let mut model = Model::new(common::desk(Variant::SharedEncDec), 1).unwrap();
    let loss = LossConfig::default();
    let mut last = f64::INFINITY;
    for epoch in 1..=200 {
        last = train_epoch(&mut model, &ctx, &sample, &loss, &AdamConfig::default(), 1, epoch).unwrap().l_total;
        if last < 0.1 {
            break;
        }
    }
    assert!(last < 0.1, "loss {last} after 200 epochs");
}

#[test]
fn training_is_deterministic() {
    let ctx = common::default_ctx();
    let train = common::samples(&ctx, 0..20, &RouteSpec::default());
    let dev = common::samples(&ctx, 100..110, &RouteSpec::default());
    let cfg = TrainConfig { max_epochs: 2, ..Default::default() };
    let run = || {
        let mut m = Model::new(common::tiny(Variant::SharedEncDec), 3).unwrap();
        let ctx8 = NavContext::new(ctx.graph.clone(), stopnav::world::ObservationConfig { grid: 8, ..Default::default() }, 40);
        let out = fit(&mut m, &ctx8, &train, &dev, &cfg, 5, |_| {}).unwrap();
        (out.best.to_checkpoint(), out.best_dev)
    };
    assert_eq!(run(), run());
}

#[test]
fn non_finite_parameters_stop_training() {
    let ctx = common::default_ctx();
    let data = common::samples(&ctx, 0..3, &RouteSpec::default());
    let mut model = Model::new(common::desk(Variant::SharedEncDec), 1).unwrap();
    let id = model.params().ids().next().unwrap();
    for x in model.params_mut().value_mut(id).data_mut() {
        *x = f64::NAN;
    }
    let before = model.params().to_checkpoint();
    let err = train_epoch(&mut model, &ctx, &data, &LossConfig::default(), &AdamConfig::default(), 1, 1).unwrap_err();
    assert!(matches!(err, TrainingError::Diverged { epoch: 1, episode: 0 }), "{err}");
    assert_eq!(model.params().to_checkpoint(), before);
}

#[test]
fn gated_rollouts_turn_only_at_key_points() {
    let ctx = common::default_ctx();
    let data = common::samples(&ctx, 0..60, &RouteSpec::default());
    for variant in [Variant::SharedEncDec, Variant::OneBranch] {
        let model = Model::new(common::desk(variant), 2).unwrap();
        let rule = stopnav::model::ActRule { one_branch: variant.is_one_branch(), ..Default::default() };
        for mode in [OracleMode::None, OracleMode::OracleStop] {
            let (_, rollouts) = evaluate_policy(&model, &ctx, &data, &rule, mode, &Default::default()).unwrap();
            for r in &rollouts {
                for (a, n) in r.actions.iter().zip(&r.nodes) {
                    assert!(!matches!(a, Action::Left | Action::Right) || ctx.graph.is_key_point(*n), "{variant} {mode}");
                }
            }
        }
    }
}

#[test]
fn oracle_stop_scores_every_goal_visit() {
    let ctx = common::default_ctx();
    let data = common::samples(&ctx, 0..100, &RouteSpec::default());
    let model = Model::new(common::desk(Variant::SharedEncDec), 6).unwrap();
    let rule = Default::default();
    let (_, rollouts) = evaluate_policy(&model, &ctx, &data, &rule, OracleMode::OracleStop, &Default::default()).unwrap();
    let mut visits = 0;
    for (r, s) in rollouts.iter().zip(&data) {
        if r.path.contains(s.route.last().unwrap()) {
            visits += 1;
            let pair = TrajectoryPair::new(&ctx.graph, &r.path, &s.route).unwrap();
            assert_eq!(task_completion(&pair, &ctx.hops, 1), 1.0);
        }
    }
    assert!(visits > 0);
}

#[test]
fn oracle_mode_none_is_plain_evaluation() {
    let ctx = common::default_ctx();
    let data = common::samples(&ctx, 0..10, &RouteSpec::default());
    let model = Model::new(common::desk(Variant::SharedEnc), 6).unwrap();
    let rule = Default::default();
    let (a, ra) = evaluate_policy(&model, &ctx, &data, &rule, OracleMode::None, &Default::default()).unwrap();
    let manual: Vec<_> = data.iter().map(|s| rollout(&model, &ctx, s, &rule, OracleMode::None).unwrap()).collect();
    assert_eq!(ra, manual);
    assert_eq!(a.count(), 10);
    assert!(OracleMode::from_flags(true, true).is_err());
}
