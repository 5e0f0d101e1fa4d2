use pentrack::engine::{run, EngineConfig, NoiseModel, ProjectionPolicy, StepSizeSchedule};
use pentrack::library::{make_coupled_quadratic, make_many_soft_constraints, make_resource_allocation};
use pentrack::network::{Graph, WeightSchedule};
use pentrack::ProblemInstance;
use proptest::prelude::*;

fn instance(kind: u8, n: usize, seed: u64) -> ProblemInstance {
    match kind {
        0 => make_coupled_quadratic(n, seed).unwrap(),
        1 => make_resource_allocation(n, 1 + (seed % 3) as usize, seed).unwrap(),
        _ => make_many_soft_constraints(n, 10, seed).unwrap(),
    }
}

fn schedule(kind: u8, n: usize, seed: u64) -> WeightSchedule {
    match kind {
        0 => WeightSchedule::RingCycle { n },
        1 => WeightSchedule::PairwiseGossip { n, seed },
        2 => WeightSchedule::metropolis(&Graph::star(n).unwrap()),
        _ => WeightSchedule::metropolis(&Graph::complete(n).unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tracking_is_conserved_and_iterates_stay_in_hard_sets(
        problem_kind in 0u8..3,
        schedule_kind in 0u8..4,
        n in 2usize..7,
        seed in 0u64..1000,
        noise in prop_oneof![Just(0.0), 0.01f64..1.0],
        samples in 1usize..4,
    ) {
        let p = instance(problem_kind, n, seed);
        let mut cfg = EngineConfig::new(&p, schedule(schedule_kind, n, seed));
        cfg.noise = NoiseModel::gaussian(noise);
        cfg.projection = ProjectionPolicy::uniform(&p, samples, None);
        cfg.horizon = 10_000;
        cfg.metric_stride = 1000;
        cfg.ergodic_stride = 1000;
        cfg.master_seed = seed;
        let out = run(&p, &cfg).unwrap();
        prop_assert!(out.summary.conservation_worst_ratio <= 1e-8, "{}", out.summary.conservation_worst_ratio);
        prop_assert!(out.summary.max_hard_distance <= 1e-10);
        for r in &out.records {
            prop_assert!(r.a_t >= 0.0 && r.dist_g_sq >= 0.0);
        }
    }

    #[test]
    fn subgradient_norm_bound_holds_on_compact_instances(
        problem_kind in 0u8..3,
        n in 1usize..6,
        seed in 0u64..1000,
        mu in 0.5f64..50.0,
    ) {
        let p = instance(problem_kind, n, seed).with_mu(mu).unwrap();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n });
        cfg.noise = NoiseModel::gaussian(0.1);
        cfg.horizon = 2000;
        cfg.metric_stride = 1;
        cfg.ergodic_stride = 2000;
        cfg.master_seed = seed;
        let out = run(&p, &cfg).unwrap();
        prop_assert!(out.summary.lipschitz.is_some());
        prop_assert!(out.summary.q_bound_max_excess.unwrap() <= 1e-6);
    }

    #[test]
    fn trajectory_is_a_function_of_the_seed(seed in 0u64..1000, n in 2usize..5) {
        let p = make_many_soft_constraints(n, 12, seed).unwrap();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::PairwiseGossip { n, seed });
        cfg.noise = NoiseModel::gaussian(0.5);
        cfg.horizon = 300;
        cfg.metric_stride = 10;
        cfg.master_seed = seed;
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(&a.state, &b.state);
        cfg.master_seed = seed + 1;
        let c = run(&p, &cfg).unwrap();
        prop_assert_ne!(&a.state, &c.state);
    }
}

#[test]
fn divergence_guard_aborts_misconfigured_runs() {
    // Unbounded hard set, huge constant steps and noise: iterates blow up.
    use pentrack::problem::{Affine, AgentSpec, Quadratic, SimpleSet, SoftConstraintSet};
    use std::sync::Arc;
    let agent = AgentSpec::new(
        Arc::new(Quadratic::squared_distance(&[0.0], 1.0)),
        vec![Arc::new(Affine::new(vec![1.0], 0.0))],
        SimpleSet::whole(1),
        SoftConstraintSet::empty(),
    )
    .unwrap();
    let p = ProblemInstance::new(vec![agent], 1, 1.0).unwrap();
    let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n: 1 });
    cfg.steps = StepSizeSchedule::Constant { gamma0: 5.0 };
    cfg.allow_nonstandard_steps = true;
    cfg.horizon = 10_000;
    let err = run(&p, &cfg).unwrap_err();
    assert!(matches!(err, pentrack::Error::Divergence { .. }), "{err}");
}
