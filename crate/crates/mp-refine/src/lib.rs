//! Path post-processing: constrained gradient descent over each edge's
//! `(xi, t0, dt)` and node pruning, alternated until convergence.
//!
//! The local cost of edge `i` is `J(x_{i-1}, x_i) + J(x_i, x_{i+1})`; its
//! gradient with respect to the edge parameters is the chain rule through
//! the setpoint map, using the primitive's analytic Jacobian when available
//! and central finite differences otherwise. Descent steps are projected
//! back into the argument domain and duration bound, and any step that
//! breaks downstream feasibility or increases cost is halved away.

use mp_core::{
    apply_transfer, compose_chain, CoreError, PrimitiveSpec, Registry, State, TransferRequest,
};
use mp_search::{edge_cost, CostModel, PlanPath, SearchError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("edge index {index} out of range for path of length {length}")]
    IndexOutOfRange { index: usize, length: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    /// Base descent step, scaled per coordinate by the argument-domain width.
    pub step_size: f64,
    pub max_gd_iterations: usize,
    pub max_outer_iterations: usize,
    pub cost_tolerance: f64,
    pub finite_diff_step: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            max_gd_iterations: 25,
            max_outer_iterations: 8,
            cost_tolerance: 1e-6,
            finite_diff_step: 1e-6,
        }
    }
}

/// Which half of an outer refinement iteration produced a trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinePass {
    Descent,
    Prune,
}

impl RefinePass {
    pub fn as_str(self) -> &'static str {
        match self {
            RefinePass::Descent => "descent",
            RefinePass::Prune => "prune",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTraceRow {
    pub outer_iter: usize,
    pub pass: RefinePass,
    pub total_cost: f64,
    pub path_length: usize,
}

/// Render trace rows as CSV with header `outerIter,pass,totalCost,pathLength`.
pub fn cost_trace_csv(rows: &[CostTraceRow]) -> String {
    let mut out = String::from("outerIter,pass,totalCost,pathLength\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.12},{}\n",
            r.outer_iter,
            r.pass.as_str(),
            r.total_cost,
            r.path_length
        ));
    }
    out
}

fn anchor_state<S: State>(path: &PlanPath<S>, i: usize) -> &S {
    if i == 0 {
        &path.start
    } else {
        &path.edges[i - 1].setpoint
    }
}

fn check_index<S>(path: &PlanPath<S>, i: usize) -> Result<(), RefineError> {
    if i >= path.edges.len() {
        return Err(RefineError::IndexOutOfRange {
            index: i,
            length: path.edges.len(),
        });
    }
    Ok(())
}

/// dJ/dx_i for the two quadratic terms that touch node i.
fn cost_partial<S: State>(
    x_prev: &S,
    x_i: &S,
    x_next: Option<&S>,
    cost: &CostModel,
) -> Vec<f64> {
    let a = x_prev.coords();
    let b = x_i.coords();
    let mut g: Vec<f64> = a
        .iter()
        .zip(&b)
        .zip(&cost.weights)
        .map(|((p, x), w)| 2.0 * w * (x - p))
        .collect();
    if let Some(next) = x_next {
        for ((gk, x), (n, w)) in g
            .iter_mut()
            .zip(&b)
            .zip(next.coords().iter().zip(&cost.weights))
        {
            *gk -= 2.0 * w * (n - x);
        }
    }
    g
}

fn fd_jacobian<S: State>(
    spec: &PrimitiveSpec<S>,
    anchor: &S,
    xi: &[f64],
    t0: f64,
    dt: f64,
    h: f64,
) -> Vec<Vec<f64>> {
    let nvars = xi.len() + 2;
    let dim = anchor.coords().len();
    let eval = |k: usize, delta: f64| -> Vec<f64> {
        let mut xi2 = xi.to_vec();
        let (mut t02, mut dt2) = (t0, dt);
        if k < xi.len() {
            xi2[k] += delta;
        } else if k == xi.len() {
            t02 += delta;
        } else {
            dt2 += delta;
        }
        spec.setpoint(anchor, &xi2, t02, t02 + dt2).coords()
    };
    let mut jac = vec![vec![0.0; nvars]; dim];
    for k in 0..nvars {
        let plus = eval(k, h);
        let minus = eval(k, -h);
        for (row, jr) in jac.iter_mut().enumerate() {
            jr[k] = (plus[row] - minus[row]) / (2.0 * h);
        }
    }
    jac
}

fn gradient_from_jacobian(dj_dx: &[f64], jac: &[Vec<f64>]) -> Vec<f64> {
    let nvars = jac.first().map_or(0, Vec::len);
    (0..nvars)
        .map(|k| dj_dx.iter().zip(jac).map(|(g, row)| g * row[k]).sum())
        .collect()
}

/// Gradient of the local cost of edge `i` with respect to `(xi_i, t0_i, dt_i)`,
/// using the primitive's analytic setpoint Jacobian when provided.
pub fn local_cost_gradient<S: State>(
    path: &PlanPath<S>,
    i: usize,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &RefineConfig,
) -> Result<Vec<f64>, RefineError> {
    check_index(path, i)?;
    let edge = &path.edges[i];
    let spec = registry.get(&edge.primitive)?;
    let anchor = anchor_state(path, i);
    let x_next = path.edges.get(i + 1).map(|e| &e.setpoint);
    let dj_dx = cost_partial(anchor, &edge.setpoint, x_next, cost);
    let jac = spec
        .jacobian(anchor, &edge.xi, edge.t0, edge.dt)
        .unwrap_or_else(|| {
            fd_jacobian(spec, anchor, &edge.xi, edge.t0, edge.dt, cfg.finite_diff_step)
        });
    Ok(gradient_from_jacobian(&dj_dx, &jac))
}

/// Same gradient computed with central finite differences regardless of
/// whether an analytic Jacobian exists; the oracle for gradient checks.
pub fn local_cost_gradient_fd<S: State>(
    path: &PlanPath<S>,
    i: usize,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &RefineConfig,
) -> Result<Vec<f64>, RefineError> {
    check_index(path, i)?;
    let edge = &path.edges[i];
    let spec = registry.get(&edge.primitive)?;
    let anchor = anchor_state(path, i);
    let x_next = path.edges.get(i + 1).map(|e| &e.setpoint);
    let dj_dx = cost_partial(anchor, &edge.setpoint, x_next, cost);
    let jac = fd_jacobian(spec, anchor, &edge.xi, edge.t0, edge.dt, cfg.finite_diff_step);
    Ok(gradient_from_jacobian(&dj_dx, &jac))
}

/// Recompose the whole chain from scratch; `None` if any edge fails to apply.
fn rebuild_from_chain<S: State>(
    start: &S,
    chain: &[mp_core::ChainEdge],
    registry: &Registry<S>,
    cost: &CostModel,
) -> Result<Option<PlanPath<S>>, RefineError> {
    let (feasible, states) = compose_chain(registry, start, chain)?;
    if !feasible {
        return Ok(None);
    }
    let mut prev = start.clone();
    let mut total = 0.0;
    let mut plan_edges = Vec::with_capacity(chain.len());
    for (e, state) in chain.iter().cloned().zip(states) {
        let c = edge_cost(&prev, &state, cost)?;
        total += c;
        plan_edges.push(mp_search::PlanEdge {
            primitive: e.primitive,
            xi: e.xi,
            t0: e.t0,
            dt: e.dt,
            setpoint: state.clone(),
            cost: c,
        });
        prev = state;
    }
    Ok(Some(PlanPath {
        start: start.clone(),
        edges: plan_edges,
        total_cost: total,
    }))
}

/// Projected gradient descent on edge `i`'s parameters. Cost never
/// increases; feasibility of the whole path is preserved.
pub fn descend_edge<S: State>(
    path: &PlanPath<S>,
    i: usize,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &RefineConfig,
) -> Result<PlanPath<S>, RefineError> {
    check_index(path, i)?;
    let spec = registry.get(&path.edges[i].primitive)?.clone();
    let nxi = spec.args.dimension();
    // Per-coordinate steps: argument coordinates scale with domain width,
    // timing coordinates use the base step directly. The final edge is the
    // goal primitive with commanded arguments, so its xi stays frozen and
    // only the timing descends.
    let is_goal_edge = i + 1 == path.edges.len();
    let steps: Vec<f64> = (0..nxi + 2)
        .map(|k| {
            if k < nxi {
                if is_goal_edge {
                    0.0
                } else {
                    cfg.step_size * spec.args.width(k)
                }
            } else {
                cfg.step_size
            }
        })
        .collect();
    let mut current = path.clone();
    for _ in 0..cfg.max_gd_iterations {
        let grad = local_cost_gradient(&current, i, registry, cost, cfg)?;
        if grad.iter().all(|g| g.abs() < 1e-12) {
            break;
        }
        let anchor = anchor_state(&current, i).clone();
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..=10 {
            let edge = &current.edges[i];
            let mut xi = edge.xi.clone();
            for k in 0..nxi {
                xi[k] -= scale * steps[k] * grad[k];
            }
            let xi = spec.args.clamp(&xi);
            let t0 = (edge.t0 - scale * steps[nxi] * grad[nxi]).max(0.0);
            let mut dt = edge.dt - scale * steps[nxi + 1] * grad[nxi + 1];
            // the duration bound moves with (xi, t0): re-probe it
            let probe = apply_transfer(
                &spec,
                &TransferRequest {
                    x0: anchor.clone(),
                    primitive: spec.id.clone(),
                    xi: xi.clone(),
                    t0,
                    dt: 0.0,
                },
                registry.norm_weights(),
            )?;
            dt = dt.max(probe.dt_min);
            let mut chain: Vec<_> = current.edges.iter().map(|e| e.chain_edge()).collect();
            chain[i].xi = xi;
            chain[i].t0 = t0;
            chain[i].dt = dt;
            if let Some(candidate) = rebuild_from_chain(&current.start, &chain, registry, cost)? {
                if candidate.total_cost < current.total_cost {
                    accepted = Some(candidate);
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some(candidate) => {
                let improvement = current.total_cost - candidate.total_cost;
                current = candidate;
                if improvement < cfg.cost_tolerance {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(current)
}

/// Single front-to-back pruning pass: node `i` is removed when rerouting its
/// predecessor's setpoint directly into edge `i+1` keeps the whole remaining
/// chain feasible. The final (goal) edge is never removed.
pub fn prune_once<S: State>(
    path: &PlanPath<S>,
    registry: &Registry<S>,
    cost: &CostModel,
) -> Result<(PlanPath<S>, usize), RefineError> {
    let mut current = path.clone();
    let mut removed = 0;
    let mut i = 0;
    while i + 1 < current.edges.len() {
        let mut chain: Vec<_> = current.edges.iter().map(|e| e.chain_edge()).collect();
        chain.remove(i);
        match rebuild_from_chain(&current.start, &chain, registry, cost)? {
            Some(candidate) if candidate.total_cost <= current.total_cost + 1e-9 => {
                current = candidate;
                removed += 1;
            }
            _ => i += 1,
        }
    }
    Ok((current, removed))
}

/// Alternate full descent passes and prune passes until the cost improvement
/// drops below tolerance and no node is removed, or the outer-iteration
/// budget runs out. Returns the refined path and the per-pass cost trace.
pub fn refine_path_traced<S: State>(
    path: &PlanPath<S>,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &RefineConfig,
) -> Result<(PlanPath<S>, Vec<CostTraceRow>), RefineError> {
    let mut current = path.clone();
    let mut trace = Vec::new();
    for outer in 1..=cfg.max_outer_iterations {
        let before = current.total_cost;
        for i in 0..current.edges.len() {
            current = descend_edge(&current, i, registry, cost, cfg)?;
        }
        trace.push(CostTraceRow {
            outer_iter: outer,
            pass: RefinePass::Descent,
            total_cost: current.total_cost,
            path_length: current.edges.len(),
        });
        let (pruned, removed) = prune_once(&current, registry, cost)?;
        current = pruned;
        trace.push(CostTraceRow {
            outer_iter: outer,
            pass: RefinePass::Prune,
            total_cost: current.total_cost,
            path_length: current.edges.len(),
        });
        if before - current.total_cost < cfg.cost_tolerance && removed == 0 {
            break;
        }
    }
    Ok((current, trace))
}

pub fn refine_path<S: State>(
    path: &PlanPath<S>,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &RefineConfig,
) -> Result<PlanPath<S>, RefineError> {
    refine_path_traced(path, registry, cost, cfg).map(|(p, _)| p)
}
