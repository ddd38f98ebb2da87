use mp_bench::{build_bench_registry, Disturbance, PlantConfig, PlantState, STAND, WALK};
use mp_core::{PrimitiveId, Registry};
use mp_exec::{
    adoption_check, run_scenario, select_fallback, trace_csv, ExecConfig, Scenario,
};
use mp_refine::RefineConfig;
use mp_search::{CostModel, GoalSpec, PlanEdge, PlanPath, SearchConfig};

fn registry() -> Registry<PlantState> {
    build_bench_registry(&PlantConfig::default()).unwrap()
}

fn cost_model() -> CostModel {
    CostModel::uniform(9, 0.1)
}

fn search_cfg(seed: u64) -> SearchConfig {
    SearchConfig {
        rng_seed: seed,
        dt_slack_s: 1.0,
        ..SearchConfig::default()
    }
}

fn walk_goal() -> GoalSpec {
    GoalSpec {
        primitive: PrimitiveId::new(WALK),
        xi: vec![0.25, 0.2, 0.0, 0.0],
    }
}

fn stand_goal() -> GoalSpec {
    GoalSpec {
        primitive: PrimitiveId::new(STAND),
        xi: vec![0.25, 0.0, 0.0, 0.0],
    }
}

fn standing() -> PlantState {
    PlantState::resting(0.25)
}

#[test]
fn nominal_transition_reaches_walk() {
    let reg = registry();
    let scenario = Scenario {
        initial_state: PlantState::resting(0.08),
        goal: walk_goal(),
        disturbances: vec![],
        duration_s: 10.0,
        dt_s: 0.001,
    };
    let trace = run_scenario(
        &scenario,
        &ExecConfig::default(),
        &reg,
        &cost_model(),
        &search_cfg(1),
        &RefineConfig::default(),
    )
    .unwrap();
    assert!(trace.summary.goal_reached, "summary: {:?}", trace.summary);
    assert_eq!(trace.summary.replan_count, 0);
    let adopted = trace.plans.iter().find(|p| p.adopted).unwrap();
    let path = adopted.path.as_ref().unwrap();
    assert!(path.edges.len() >= 2, "walk is not one step from rest");
    assert_eq!(path.edges.last().unwrap().primitive.as_str(), WALK);
    // no silent violations: every flagged tick is immediately in fallback
    // or replanning on the next tick
    for w in trace.ticks.windows(2) {
        if w[0].violation {
            assert!(w[1].fallback || w[1].replanning);
        }
    }
}

#[test]
fn small_kick_during_stand_needs_no_replan() {
    let reg = registry();
    let scenario = Scenario {
        initial_state: standing(),
        goal: stand_goal(),
        disturbances: vec![Disturbance::Impulse {
            t_s: 1.0,
            dv_mps: [0.15, 0.0, 0.0],
            dtheta_rad: [0.0; 3],
        }],
        duration_s: 4.0,
        dt_s: 0.001,
    };
    let trace = run_scenario(
        &scenario,
        &ExecConfig::default(),
        &reg,
        &cost_model(),
        &search_cfg(1),
        &RefineConfig::default(),
    )
    .unwrap();
    assert!(trace.summary.goal_reached);
    assert_eq!(trace.summary.replan_count, 0);
    assert_eq!(trace.summary.violation_ticks, 0);
    // the kick deviation decays back toward the setpoint
    let at = |t: f64| {
        trace
            .ticks
            .iter()
            .find(|r| (r.t_s - t).abs() < 5e-4)
            .unwrap()
            .deviation
    };
    assert!(at(1.05) > 0.1);
    assert!(at(2.0) < at(1.05) / 4.0);
}

#[test]
fn medium_kick_triggers_replan_and_recovers() {
    let reg = registry();
    let scenario = Scenario {
        initial_state: standing(),
        goal: stand_goal(),
        disturbances: vec![Disturbance::Impulse {
            t_s: 1.0,
            dv_mps: [0.5, 0.0, 0.0],
            dtheta_rad: [0.0; 3],
        }],
        duration_s: 8.0,
        dt_s: 0.001,
    };
    let trace = run_scenario(
        &scenario,
        &ExecConfig::default(),
        &reg,
        &cost_model(),
        &search_cfg(1),
        &RefineConfig::default(),
    )
    .unwrap();
    assert!(trace.summary.goal_reached, "summary: {:?}", trace.summary);
    assert!(trace.summary.replan_count >= 1);
    assert!(trace.summary.fallback_ticks >= 1);
}

#[test]
fn adoption_check_fixtures() {
    let reg = registry();
    let snapshot = standing();
    let plan = PlanPath {
        start: snapshot.clone(),
        edges: vec![PlanEdge {
            primitive: PrimitiveId::new(STAND),
            xi: vec![0.25, 0.0, 0.0, 0.0],
            t0: 0.0,
            dt: 0.5,
            setpoint: snapshot.clone(),
            cost: 0.1,
        }],
        total_cost: 0.1,
    };
    // live state equal to the snapshot
    assert!(adoption_check(&plan, &snapshot, 0.1, &reg));
    // drift of tol/2, still inside the stand RoA
    let mut drifted = snapshot.clone();
    drifted.p_m[0] += 0.05;
    assert!(adoption_check(&plan, &drifted, 0.1, &reg));
    // drift beyond the tolerance
    let mut far = snapshot.clone();
    far.p_m[0] += 0.2;
    assert!(!adoption_check(&plan, &far, 0.1, &reg));
    // drift below a loose tolerance but outside the first edge's RoA
    let mut fast = snapshot.clone();
    fast.v_mps[0] = 0.3;
    assert!(!adoption_check(&plan, &fast, 0.5, &reg));
}

#[test]
fn fallback_prefers_land_when_airborne() {
    let reg = registry();
    let order = ExecConfig::default().fallback_order;
    let airborne = PlantState::new(0.6, [0.0; 3], [0.0, 0.0], [0.0, 0.0], -1.0, [false; 4]);
    assert_eq!(
        select_fallback(&airborne, &reg, &order).unwrap().as_str(),
        "land"
    );
    assert_eq!(
        select_fallback(&standing(), &reg, &order).unwrap().as_str(),
        "lie"
    );
    // nothing accepts a state outside the global safe box
    let out = PlantState::new(2.5, [0.0; 3], [0.0, 0.0], [0.0, 0.0], 0.0, [true; 4]);
    assert!(select_fallback(&out, &reg, &order).is_none());
}

#[test]
fn unrecoverable_state_is_a_run_failure_not_a_crash() {
    let reg = registry();
    let scenario = Scenario {
        initial_state: standing(),
        goal: stand_goal(),
        // launched far above the safe height box: no primitive accepts
        disturbances: vec![Disturbance::ContactEvent {
            t_s: 1.0,
            contacts: [false; 4],
            dh_m: 2.0,
        }],
        duration_s: 4.0,
        dt_s: 0.001,
    };
    let trace = run_scenario(
        &scenario,
        &ExecConfig::default(),
        &reg,
        &cost_model(),
        &search_cfg(1),
        &RefineConfig::default(),
    )
    .unwrap();
    assert!(!trace.summary.goal_reached);
    assert!(trace.summary.failure.is_some());
}

#[test]
fn deterministic_mode_reproduces_traces_byte_for_byte() {
    let reg = registry();
    let scenario = Scenario {
        initial_state: PlantState::resting(0.08),
        goal: walk_goal(),
        disturbances: vec![Disturbance::Impulse {
            t_s: 2.0,
            dv_mps: [0.4, 0.0, 0.0],
            dtheta_rad: [0.05, 0.0, 0.0],
        }],
        duration_s: 8.0,
        dt_s: 0.001,
    };
    let run = || {
        run_scenario(
            &scenario,
            &ExecConfig::default(),
            &reg,
            &cost_model(),
            &search_cfg(9),
            &RefineConfig::default(),
        )
        .unwrap()
    };
    let a = trace_csv(&run());
    let b = trace_csv(&run());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
