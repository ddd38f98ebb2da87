use mp_bench::{build_bench_registry, PlantConfig, PlantState, WALK};
use mp_core::{PrimitiveId, Registry};
use mp_search::{
    dump_tree, edge_cost, feasible_path_search, feasible_path_search_with_tree,
    parallel_best_path, CostModel, GoalSpec, PlanPath, SearchConfig, SearchError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn registry() -> Registry<PlantState> {
    build_bench_registry(&PlantConfig::default()).unwrap()
}

fn cost_model() -> CostModel {
    CostModel::uniform(9, 0.1)
}

fn walk_goal() -> GoalSpec {
    GoalSpec {
        primitive: PrimitiveId::new(WALK),
        xi: vec![0.25, 0.2, 0.0, 0.0],
    }
}

fn resting_lie() -> PlantState {
    PlantState::resting(PlantConfig::default().lie_height_m)
}

#[test]
fn edge_cost_examples() {
    let a = PlantState::resting(0.25);
    let zero = CostModel::uniform(9, 0.0);
    assert_eq!(edge_cost(&a, &a, &zero).unwrap(), 0.0);

    // unit difference in a dimension weighted 2, switch cost 0.1
    let mut weights = vec![0.0; 9];
    weights[4] = 2.0; // px
    let model = CostModel {
        weights,
        switch_cost: 0.1,
    };
    let mut b = a.clone();
    b.p_m[0] += 1.0;
    assert!((edge_cost(&a, &b, &model).unwrap() - 2.1).abs() < 1e-12);

    // quadratic part is symmetric
    let m = cost_model();
    let mut c = a.clone();
    c.v_mps = [0.3, -0.4];
    c.h_m = 0.19;
    let ab = edge_cost(&a, &c, &m).unwrap();
    let ba = edge_cost(&c, &a, &m).unwrap();
    assert!((ab - ba).abs() < 1e-12);

    let short = CostModel::uniform(3, 0.0);
    assert!(matches!(
        edge_cost(&a, &b, &short),
        Err(SearchError::DimensionMismatch { .. })
    ));
}

#[test]
fn goal_reachable_from_root_gives_single_edge_path() {
    let reg = registry();
    // already walking at the commanded height and velocity
    let x0 = PlantState::new(0.25, [0.0; 3], [0.0, 0.0], [0.2, 0.0], 0.0, [true; 4]);
    let path = feasible_path_search(&walk_goal(), &x0, &reg, &cost_model(), &SearchConfig::default())
        .unwrap();
    assert_eq!(path.edges.len(), 1);
    assert_eq!(path.edges[0].primitive.as_str(), WALK);
}

#[test]
fn nominal_transition_found_and_multi_edge() {
    let reg = registry();
    let path = feasible_path_search(
        &walk_goal(),
        &resting_lie(),
        &reg,
        &cost_model(),
        &SearchConfig::default(),
    )
    .unwrap();
    assert!(path.edges.len() >= 2, "walk is not directly reachable from rest");
    assert_eq!(path.edges.last().unwrap().primitive.as_str(), WALK);
    assert!(path.revalidate(&reg, &cost_model()).unwrap());
}

#[test]
fn unreachable_start_exhausts() {
    let reg = registry();
    // outside every safe set: height beyond the global box
    let x0 = PlantState::new(2.0, [0.0; 3], [0.0, 0.0], [0.0, 0.0], 0.0, [true; 4]);
    let cfg = SearchConfig {
        max_iterations: 300,
        ..SearchConfig::default()
    };
    assert!(matches!(
        feasible_path_search(&walk_goal(), &x0, &reg, &cost_model(), &cfg),
        Err(SearchError::SearchExhausted { .. })
    ));
}

#[test]
fn invalid_goal_rejected() {
    let reg = registry();
    let goal = GoalSpec {
        primitive: PrimitiveId::new(WALK),
        xi: vec![0.25, 5.0, 0.0, 0.0], // vx outside the walk domain
    };
    assert!(matches!(
        feasible_path_search(&goal, &resting_lie(), &reg, &cost_model(), &SearchConfig::default()),
        Err(SearchError::InvalidGoal(_))
    ));
}

#[test]
fn search_is_deterministic() {
    let reg = registry();
    let cfg = SearchConfig {
        rng_seed: 42,
        ..SearchConfig::default()
    };
    let (r1, t1) = feasible_path_search_with_tree(
        &walk_goal(),
        &resting_lie(),
        &reg,
        &cost_model(),
        &cfg,
    );
    let (r2, t2) = feasible_path_search_with_tree(
        &walk_goal(),
        &resting_lie(),
        &reg,
        &cost_model(),
        &cfg,
    );
    assert_eq!(r1.unwrap(), r2.unwrap());
    assert_eq!(dump_tree(&t1), dump_tree(&t2));
}

#[test]
fn tree_is_well_formed_with_exact_cost_accounting() {
    let reg = registry();
    let cost = cost_model();
    let cfg = SearchConfig {
        rng_seed: 7,
        ..SearchConfig::default()
    };
    let (res, nodes) =
        feasible_path_search_with_tree(&walk_goal(), &resting_lie(), &reg, &cost, &cfg);
    res.unwrap();
    assert!(nodes[0].parent.is_none() && nodes[0].action.is_none());
    assert_eq!(nodes[0].cost_to_come, 0.0);
    for (i, n) in nodes.iter().enumerate().skip(1) {
        let p = n.parent.expect("non-root has a parent");
        assert!(p < i, "parent links point strictly backward (acyclic)");
        assert!(n.state != nodes[p].state, "progress filter");
        let c = edge_cost(&nodes[p].state, &n.state, &cost).unwrap();
        assert!((nodes[p].cost_to_come + c - n.cost_to_come).abs() < 1e-9);
    }
}

#[test]
fn returned_paths_revalidate_over_random_trials() {
    let reg = registry();
    let cost = cost_model();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut found = 0;
    for trial in 0..50 {
        // random start inside the union of the primitives' RoA boxes
        let x0 = match trial % 3 {
            0 => PlantState::new(
                rng.gen_range(0.05..0.4),
                [rng.gen_range(-0.3..0.3), 0.0, 0.0],
                [0.0, 0.0],
                [rng.gen_range(-1.0..1.0), 0.0],
                0.0,
                [true; 4],
            ),
            1 => PlantState::new(
                rng.gen_range(0.15..0.3),
                [0.0; 3],
                [0.0, 0.0],
                [rng.gen_range(-0.1..0.1), 0.0],
                0.0,
                [true; 4],
            ),
            _ => PlantState::new(
                rng.gen_range(0.3..1.0),
                [0.0; 3],
                [0.0, 0.0],
                [0.0, 0.0],
                rng.gen_range(-1.5..0.0),
                [false; 4],
            ),
        };
        let cfg = SearchConfig {
            rng_seed: trial as u64,
            ..SearchConfig::default()
        };
        let path = feasible_path_search(&walk_goal(), &x0, &reg, &cost, &cfg).unwrap();
        assert!(path.revalidate(&reg, &cost).unwrap(), "trial {trial}");
        found += 1;
    }
    assert_eq!(found, 50);
}

#[test]
fn parallel_k1_matches_single_search() {
    let reg = registry();
    let cost = cost_model();
    let cfg = SearchConfig {
        rng_seed: 5,
        ..SearchConfig::default()
    };
    let single = feasible_path_search(&walk_goal(), &resting_lie(), &reg, &cost, &cfg).unwrap();
    let parallel = parallel_best_path(
        &walk_goal(),
        &resting_lie(),
        &reg,
        &cost,
        &cfg,
        1,
        |p: PlanPath<PlantState>| p,
    )
    .unwrap();
    assert_eq!(single, parallel);
}

#[test]
fn parallel_k8_no_worse_than_k1() {
    let reg = registry();
    let cost = cost_model();
    let cfg = SearchConfig {
        rng_seed: 5,
        ..SearchConfig::default()
    };
    let id = |p: PlanPath<PlantState>| p;
    let k1 = parallel_best_path(&walk_goal(), &resting_lie(), &reg, &cost, &cfg, 1, id).unwrap();
    let k8 = parallel_best_path(&walk_goal(), &resting_lie(), &reg, &cost, &cfg, 8, id).unwrap();
    assert!(k8.total_cost <= k1.total_cost + 1e-12);
}

#[test]
fn parallel_all_failures_reports_failure() {
    let reg = registry();
    let x0 = PlantState::new(2.0, [0.0; 3], [0.0, 0.0], [0.0, 0.0], 0.0, [true; 4]);
    let cfg = SearchConfig {
        max_iterations: 100,
        ..SearchConfig::default()
    };
    let res = parallel_best_path(
        &walk_goal(),
        &x0,
        &reg,
        &cost_model(),
        &cfg,
        4,
        |p: PlanPath<PlantState>| p,
    );
    assert!(matches!(res, Err(SearchError::SearchExhausted { .. })));
}
