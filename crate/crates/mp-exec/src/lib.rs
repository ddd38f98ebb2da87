//! Simulation executive: fixed-rate plant stepping, safety monitoring, and
//! asynchronous replanning toward a commanded goal primitive under injected
//! disturbances.
//!
//! Each tick the loop delivers any completed plans (subject to an adoption
//! check against the live state), advances the active plan edge, steps the
//! plant, and monitors the active primitive's safe set and safe RoA. A
//! violation or plan invalidation switches to a fallback primitive and
//! requests a fresh plan from a state snapshot.

use mp_bench::{ActivePrimitive, Disturbance, PlantState};
use mp_core::{weighted_distance, PrimitiveId, Registry};
use mp_refine::{refine_path, RefineConfig, RefineError};
use mp_search::{
    parallel_best_path, CostModel, GoalSpec, PlanPath, SearchConfig, SearchError,
};
use serde::{Deserialize, Serialize};
use std::sync::mpsc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Core(#[from] mp_core::CoreError),
}

/// One run: initial conditions, goal, disturbances, and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub initial_state: PlantState,
    pub goal: GoalSpec,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    pub duration_s: f64,
    pub dt_s: f64,
}

/// Executive knobs that are not part of the scenario itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecConfig {
    /// Maximum weighted distance between a plan's snapshot start and the
    /// live state for the plan to be adopted.
    pub adoption_tolerance: f64,
    /// Deterministic mode: plans are delivered exactly this many ticks
    /// after the request.
    pub latency_ticks: u64,
    /// Number of parallel searches per plan request.
    pub k_parallel: usize,
    /// Fallback candidates tried in order when the preferred one (land when
    /// any foot is off the ground, lie otherwise) does not accept the state.
    pub fallback_order: Vec<String>,
    /// Goal is counted as reached when the tracking error against the goal
    /// setpoint is at most this, in the weighted state norm.
    pub goal_error_threshold: f64,
    /// Compute plans on a background thread and deliver them when finished,
    /// instead of at a fixed tick latency. Not reproducible tick-for-tick.
    pub wall_clock_planner: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            adoption_tolerance: 0.1,
            latency_ticks: 20,
            k_parallel: 4,
            fallback_order: vec!["land".into(), "lie".into()],
            goal_error_threshold: 0.05,
            wall_clock_planner: false,
        }
    }
}

/// State of the world at the end of one control tick.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t_s: f64,
    pub state: PlantState,
    pub active_primitive: PrimitiveId,
    pub active_xi: Vec<f64>,
    /// Id of the plan being executed, if any.
    pub plan_id: Option<u64>,
    pub edge_index: Option<usize>,
    /// A plan request is outstanding.
    pub replanning: bool,
    /// The active primitive's safe set or safe RoA rejected the state this
    /// tick, triggering fallback.
    pub violation: bool,
    /// The active primitive was entered through the fallback rule rather
    /// than a plan edge.
    pub fallback: bool,
    /// Weighted tracking error against the active setpoint.
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanRecord {
    pub id: u64,
    pub requested_tick: u64,
    pub delivered_tick: Option<u64>,
    pub adopted: bool,
    pub computation_time_s: f64,
    pub path: Option<PlanPath<PlantState>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub goal_reached: bool,
    /// Plan requests triggered by violations or invalidations; the initial
    /// plan and adoption re-requests are not counted.
    pub replan_count: u64,
    pub max_deviation: f64,
    pub violation_ticks: u64,
    pub fallback_ticks: u64,
    pub final_error: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub ticks: Vec<TickRecord>,
    pub plans: Vec<PlanRecord>,
    pub summary: RunSummary,
}

/// A delivered plan is adopted only when the live state is still close to
/// the snapshot it was planned from and inside the first edge's safe RoA.
pub fn adoption_check(
    plan: &PlanPath<PlantState>,
    live: &PlantState,
    tol: f64,
    registry: &Registry<PlantState>,
) -> bool {
    let Some(first) = plan.edges.first() else {
        return false;
    };
    if weighted_distance(&plan.start, live, registry.norm_weights()) > tol {
        return false;
    }
    match registry.get(&first.primitive) {
        Ok(spec) => spec.safe_roa(live, &first.xi, first.t0),
        Err(_) => false,
    }
}

/// Pick the fallback primitive for a state: land when any foot is off the
/// ground, lie otherwise, then the configured order; first candidate whose
/// safe RoA accepts the state wins. All candidates must be argument-free.
pub fn select_fallback(
    state: &PlantState,
    registry: &Registry<PlantState>,
    order: &[String],
) -> Option<PrimitiveId> {
    let preferred = if state.all_contacts() { "lie" } else { "land" };
    let candidates = std::iter::once(preferred.to_string()).chain(order.iter().cloned());
    for name in candidates {
        let id = PrimitiveId::new(name);
        if let Ok(spec) = registry.get(&id) {
            if spec.args.dimension() == 0 && spec.safe_roa(state, &[], 0.0) {
                return Some(id);
            }
        }
    }
    None
}

/// The primitive currently driving the plant, with its own clock.
#[derive(Clone)]
struct ActiveExec {
    primitive: PrimitiveId,
    xi: Vec<f64>,
    anchor: PlantState,
    t0: f64,
    activated_at_s: f64,
    via_fallback: bool,
}

impl ActiveExec {
    fn clock(&self, t: f64) -> f64 {
        self.t0 + (t - self.activated_at_s)
    }
}

struct PlanExec {
    id: u64,
    plan: PlanPath<PlantState>,
    edge_idx: usize,
    edge_started_s: f64,
    complete: bool,
}

enum PlannerHandle {
    /// Plan already computed; delivered at a fixed tick.
    Deterministic {
        due_tick: u64,
        result: Result<PlanPath<PlantState>, String>,
        computation_time_s: f64,
    },
    /// Plan computed on a background thread.
    Threaded {
        rx: mpsc::Receiver<(Result<PlanPath<PlantState>, String>, f64)>,
    },
}

struct Planner<'a> {
    registry: &'a Registry<PlantState>,
    cost: &'a CostModel,
    search: SearchConfig,
    refine: RefineConfig,
    goal: GoalSpec,
    k: usize,
    wall_clock: bool,
    latency_ticks: u64,
    /// Sequence number; also offsets the search seed so successive plan
    /// requests explore differently but reproducibly.
    next_plan_id: u64,
}

impl Planner<'_> {
    fn request(&mut self, snapshot: PlantState, tick: u64) -> (u64, PlannerHandle, u64) {
        let id = self.next_plan_id;
        self.next_plan_id += 1;
        let mut cfg = self.search.clone();
        cfg.rng_seed = self
            .search
            .rng_seed
            .wrapping_add(id.wrapping_mul(self.k as u64));
        let refine_cfg = self.refine.clone();
        let goal = self.goal.clone();
        let k = self.k;
        if self.wall_clock {
            // detached computation on owned copies; the loop polls the channel
            let (tx, rx) = mpsc::channel();
            let registry = self.registry.clone();
            let cost = self.cost.clone();
            std::thread::Builder::new()
                .name(format!("planner-{id}"))
                .spawn(move || {
                    let started = Instant::now();
                    let result =
                        parallel_best_path(&goal, &snapshot, &registry, &cost, &cfg, k, |p| {
                            refine_path(&p, &registry, &cost, &refine_cfg).unwrap_or(p)
                        })
                        .map_err(|e| e.to_string());
                    let _ = tx.send((result, started.elapsed().as_secs_f64()));
                })
                .expect("spawn planner thread");
            (id, PlannerHandle::Threaded { rx }, tick)
        } else {
            let registry = self.registry;
            let cost = self.cost;
            let started = Instant::now();
            let result = parallel_best_path(&goal, &snapshot, registry, cost, &cfg, k, |p| {
                refine_path(&p, registry, cost, &refine_cfg).unwrap_or(p)
            })
            .map_err(|e| e.to_string());
            (
                id,
                PlannerHandle::Deterministic {
                    due_tick: tick + self.latency_ticks,
                    result,
                    computation_time_s: started.elapsed().as_secs_f64(),
                },
                tick,
            )
        }
    }
}

pub fn run_scenario(
    scenario: &Scenario,
    exec: &ExecConfig,
    registry: &Registry<PlantState>,
    cost: &CostModel,
    search: &SearchConfig,
    refine: &RefineConfig,
) -> Result<RunTrace, ExecError> {
    if !(scenario.duration_s > 0.0) || !(scenario.dt_s > 0.0) {
        return Err(ExecError::InvalidScenario(
            "duration_s and dt_s must be positive".into(),
        ));
    }
    for d in &scenario.disturbances {
        d.validate()
            .map_err(|e| ExecError::InvalidScenario(e.to_string()))?;
    }
    let goal_spec = registry.get(&scenario.goal.primitive)?;
    goal_spec
        .check_args(&scenario.goal.xi)
        .map_err(|e| ExecError::InvalidScenario(e.to_string()))?;

    let dt = scenario.dt_s;
    let n_ticks = (scenario.duration_s / dt).round() as u64;
    let weights = registry.norm_weights();

    let mut planner = Planner {
        registry,
        cost,
        search: search.clone(),
        refine: refine.clone(),
        goal: scenario.goal.clone(),
        k: exec.k_parallel.max(1),
        wall_clock: exec.wall_clock_planner,
        latency_ticks: exec.latency_ticks,
        next_plan_id: 0,
    };

    let mut x = scenario.initial_state.clone();
    let mut active = match select_fallback(&x, registry, &exec.fallback_order) {
        Some(id) => ActiveExec {
            xi: vec![],
            anchor: x.clone(),
            t0: 0.0,
            activated_at_s: 0.0,
            via_fallback: true,
            primitive: id,
        },
        None => {
            return Err(ExecError::InvalidScenario(
                "no fallback primitive accepts the initial state".into(),
            ))
        }
    };

    let mut ticks: Vec<TickRecord> = Vec::with_capacity(n_ticks as usize);
    let mut plans: Vec<PlanRecord> = Vec::new();
    let mut pending: Vec<(usize, PlannerHandle)> = Vec::new(); // (plans index, handle)
    let mut current: Option<PlanExec> = None;
    let mut replan_count = 0u64;
    let mut max_deviation = 0.0f64;
    let mut violation_ticks = 0u64;
    let mut fallback_ticks = 0u64;
    let mut run_failure: Option<String> = None;

    // initial plan request (not counted as a replan)
    {
        let (id, handle, req_tick) = planner.request(x.clone(), 0);
        plans.push(PlanRecord {
            id,
            requested_tick: req_tick,
            delivered_tick: None,
            adopted: false,
            computation_time_s: 0.0,
            path: None,
            failure: None,
        });
        pending.push(((plans.len() - 1), handle));
    }

    'ticks: for k in 0..n_ticks {
        let t = k as f64 * dt;

        // 1. deliver completed plans
        let mut delivered: Vec<(usize, Result<PlanPath<PlantState>, String>, f64)> = Vec::new();
        pending.retain_mut(|(idx, handle)| match handle {
            PlannerHandle::Deterministic {
                due_tick,
                result,
                computation_time_s,
            } => {
                if *due_tick <= k {
                    delivered.push((
                        *idx,
                        std::mem::replace(result, Err(String::new())),
                        *computation_time_s,
                    ));
                    false
                } else {
                    true
                }
            }
            PlannerHandle::Threaded { rx } => match rx.try_recv() {
                Ok((result, secs)) => {
                    delivered.push((*idx, result, secs));
                    false
                }
                Err(mpsc::TryRecvError::Empty) => true,
                Err(mpsc::TryRecvError::Disconnected) => {
                    delivered.push((*idx, Err("planner thread lost".into()), 0.0));
                    false
                }
            },
        });
        for (idx, result, secs) in delivered {
            plans[idx].delivered_tick = Some(k);
            plans[idx].computation_time_s = secs;
            match result {
                Ok(plan) => {
                    plans[idx].path = Some(plan.clone());
                    if adoption_check(&plan, &x, exec.adoption_tolerance, registry) {
                        plans[idx].adopted = true;
                        let first = &plan.edges[0];
                        active = ActiveExec {
                            primitive: first.primitive.clone(),
                            xi: first.xi.clone(),
                            anchor: x.clone(),
                            t0: first.t0,
                            activated_at_s: t,
                            via_fallback: false,
                        };
                        current = Some(PlanExec {
                            id: plans[idx].id,
                            plan,
                            edge_idx: 0,
                            edge_started_s: t,
                            complete: false,
                        });
                    } else {
                        // stale snapshot: plan again from the live state
                        let (id, handle, req_tick) = planner.request(x.clone(), k);
                        plans.push(PlanRecord {
                            id,
                            requested_tick: req_tick,
                            delivered_tick: None,
                            adopted: false,
                            computation_time_s: 0.0,
                            path: None,
                            failure: None,
                        });
                        pending.push((plans.len() - 1, handle));
                    }
                }
                Err(e) => {
                    plans[idx].failure = Some(e);
                    let (id, handle, req_tick) = planner.request(x.clone(), k);
                    plans.push(PlanRecord {
                        id,
                        requested_tick: req_tick,
                        delivered_tick: None,
                        adopted: false,
                        computation_time_s: 0.0,
                        path: None,
                        failure: None,
                    });
                    pending.push((plans.len() - 1, handle));
                }
            }
        }

        // 2. advance the plan edge when its duration has elapsed
        let mut invalidated = false;
        if let Some(exec_state) = current.as_mut() {
            if !exec_state.complete {
                let edge = &exec_state.plan.edges[exec_state.edge_idx];
                if t - exec_state.edge_started_s >= edge.dt {
                    if exec_state.edge_idx + 1 < exec_state.plan.edges.len() {
                        let next = exec_state.plan.edges[exec_state.edge_idx + 1].clone();
                        let next_spec = registry.get(&next.primitive)?;
                        if next_spec.safe_roa(&x, &next.xi, next.t0) {
                            exec_state.edge_idx += 1;
                            exec_state.edge_started_s = t;
                            active = ActiveExec {
                                primitive: next.primitive.clone(),
                                xi: next.xi.clone(),
                                anchor: x.clone(),
                                t0: next.t0,
                                activated_at_s: t,
                                via_fallback: false,
                            };
                        } else {
                            invalidated = true;
                        }
                    } else {
                        exec_state.complete = true;
                    }
                }
            }
        }

        // 3. step the plant through [t, t + dt)
        let events: Vec<&Disturbance> = scenario
            .disturbances
            .iter()
            .filter(|d| match d {
                Disturbance::Impulse { t_s, .. } | Disturbance::ContactEvent { t_s, .. } => {
                    *t_s >= t && *t_s < t + dt
                }
                Disturbance::Hold {
                    t_start_s,
                    window_s,
                    ..
                } => t < t_start_s + window_s && t + dt > *t_start_s,
            })
            .collect();
        let spec = registry.get(&active.primitive)?;
        let clock = active.clock(t);
        x = mp_bench::step_plant(
            &x,
            &ActivePrimitive {
                spec,
                xi: &active.xi,
                anchor: &active.anchor,
                t0: active.t0,
            },
            clock,
            dt,
            &events,
        );
        let t_end = t + dt;
        // exactly the time the contact schedule inside step_plant used;
        // re-deriving it from t_end can land one ulp across a gait-window
        // boundary and contradict the stepped contacts
        let clock_end = clock + dt;

        // 4. monitor the active primitive
        let safe = spec.safe_set(&x, &active.xi, clock_end);
        let converging = spec.safe_roa(&x, &active.xi, clock_end);
        let violation = !(safe && converging) || invalidated;
        if violation {
            violation_ticks += 1;
            current = None;
            match select_fallback(&x, registry, &exec.fallback_order) {
                Some(id) => {
                    active = ActiveExec {
                        primitive: id,
                        xi: vec![],
                        anchor: x.clone(),
                        t0: 0.0,
                        activated_at_s: t_end,
                        via_fallback: true,
                    };
                }
                None => {
                    run_failure = Some("no fallback primitive accepts the state".into());
                }
            }
            if pending.is_empty() && run_failure.is_none() {
                replan_count += 1;
                let (id, handle, req_tick) = planner.request(x.clone(), k);
                plans.push(PlanRecord {
                    id,
                    requested_tick: req_tick,
                    delivered_tick: None,
                    adopted: false,
                    computation_time_s: 0.0,
                    path: None,
                    failure: None,
                });
                pending.push((plans.len() - 1, handle));
            }
        }

        // 5. record (the fallback switch above may have changed the active
        // primitive, so look its spec up again)
        let deviation = {
            let spec = registry.get(&active.primitive)?;
            let sp = spec.setpoint(&active.anchor, &active.xi, active.t0, active.clock(t_end));
            weighted_distance(&x, &sp, weights)
        };
        max_deviation = max_deviation.max(deviation);
        if active.via_fallback {
            fallback_ticks += 1;
        }
        ticks.push(TickRecord {
            tick: k,
            t_s: t_end,
            state: x.clone(),
            active_primitive: active.primitive.clone(),
            active_xi: active.xi.clone(),
            plan_id: current.as_ref().map(|c| c.id),
            edge_index: current.as_ref().map(|c| c.edge_idx),
            replanning: !pending.is_empty(),
            violation,
            fallback: active.via_fallback,
            deviation,
        });
        if run_failure.is_some() {
            break 'ticks;
        }
    }

    let plan_complete = current.as_ref().map(|c| c.complete).unwrap_or(false);
    let final_error = ticks.last().map(|r| r.deviation).unwrap_or(f64::INFINITY);
    let goal_reached = run_failure.is_none()
        && plan_complete
        && active.primitive == scenario.goal.primitive
        && active.xi == scenario.goal.xi
        && final_error <= exec.goal_error_threshold;
    Ok(RunTrace {
        ticks,
        plans,
        summary: RunSummary {
            goal_reached,
            replan_count,
            max_deviation,
            violation_ticks,
            fallback_ticks,
            final_error,
            failure: run_failure,
        },
    })
}

/// Trace ticks as CSV. Header (documented in the README):
/// `tick,t_s,h_m,theta_x_rad,theta_y_rad,theta_z_rad,px_m,py_m,vx_mps,vy_mps,vz_mps,contact0,contact1,contact2,contact3,active_primitive,plan_id,edge_index,replanning,violation,fallback,deviation`
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from(
        "tick,t_s,h_m,theta_x_rad,theta_y_rad,theta_z_rad,px_m,py_m,vx_mps,vy_mps,vz_mps,contact0,contact1,contact2,contact3,active_primitive,plan_id,edge_index,replanning,violation,fallback,deviation\n",
    );
    for r in &trace.ticks {
        let s = &r.state;
        out.push_str(&format!(
            "{},{:.6},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{},{},{},{},{},{},{},{},{},{},{:.9}\n",
            r.tick,
            r.t_s,
            s.h_m,
            s.theta_rad[0],
            s.theta_rad[1],
            s.theta_rad[2],
            s.p_m[0],
            s.p_m[1],
            s.v_mps[0],
            s.v_mps[1],
            s.vz_mps,
            s.contacts[0] as u8,
            s.contacts[1] as u8,
            s.contacts[2] as u8,
            s.contacts[3] as u8,
            r.active_primitive,
            r.plan_id.map_or("-".to_string(), |v| v.to_string()),
            r.edge_index.map_or("-".to_string(), |v| v.to_string()),
            r.replanning as u8,
            r.violation as u8,
            r.fallback as u8,
            r.deviation,
        ));
    }
    out
}

pub fn plans_json(trace: &RunTrace) -> serde_json::Value {
    serde_json::to_value(&trace.plans).expect("plan log serializes")
}

pub fn summary_json(trace: &RunTrace) -> serde_json::Value {
    serde_json::to_value(&trace.summary).expect("summary serializes")
}
