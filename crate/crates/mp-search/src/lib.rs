//! Randomized tree search over motion-primitive transfer functions.
//!
//! The search grows a tree of states by sampling a node (biased toward the
//! cheapest one), sampling a primitive with arguments and timing, and
//! inserting the transfer-function output when it progresses. After each
//! insertion the goal primitive is tried one step from the new state; the
//! first success terminates the search.

use mp_core::{
    apply_transfer, ArgumentDomain, ChainEdge, CoreError, PrimitiveId, PrimitiveSpec, Registry,
    State, TransferRequest,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("state/weight dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error("search exhausted after {iterations} iterations without reaching the goal")]
    SearchExhausted { iterations: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Quadratic edge cost `(xTo - xFrom)^T W (xTo - xFrom) + c_switch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub weights: Vec<f64>,
    pub switch_cost: f64,
}

impl CostModel {
    pub fn uniform(dimension: usize, switch_cost: f64) -> Self {
        Self {
            weights: vec![1.0; dimension],
            switch_cost,
        }
    }
}

pub fn edge_cost<S: State>(x_from: &S, x_to: &S, model: &CostModel) -> Result<f64, SearchError> {
    let a = x_from.coords();
    let b = x_to.coords();
    if a.len() != b.len() {
        return Err(SearchError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if model.weights.len() != a.len() {
        return Err(SearchError::DimensionMismatch {
            expected: a.len(),
            got: model.weights.len(),
        });
    }
    let quad: f64 = a
        .iter()
        .zip(&b)
        .zip(&model.weights)
        .map(|((x, y), w)| w * (y - x) * (y - x))
        .sum();
    Ok(quad + model.switch_cost)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Probability of expanding the node with the smallest
    /// `cost_to_come + est_cost_to_go`; otherwise a uniform draw.
    pub cheapest_bias: f64,
    /// Range the per-edge start time `t0` is drawn from, in seconds.
    pub t_range: [f64; 2],
    /// Width of the duration draw above the per-request minimum, in seconds.
    pub dt_slack_s: f64,
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            cheapest_bias: 0.3,
            t_range: [0.0, 0.8],
            dt_slack_s: 3.0,
            max_iterations: 20_000,
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(0.0..=1.0).contains(&self.cheapest_bias) {
            return Err(SearchError::InvalidGoal(format!(
                "cheapest_bias must be in [0, 1], got {}",
                self.cheapest_bias
            )));
        }
        if self.t_range[0] > self.t_range[1] || self.dt_slack_s < 0.0 || self.max_iterations == 0 {
            return Err(SearchError::InvalidGoal(
                "t_range must be ordered, dt_slack nonnegative, max_iterations positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub primitive: PrimitiveId,
    pub xi: Vec<f64>,
}

/// One tree node: state plus the action that produced it.
#[derive(Debug, Clone)]
pub struct SearchNode<S> {
    pub state: S,
    pub action: Option<ChainEdge>,
    pub parent: Option<usize>,
    pub cost_to_come: f64,
    pub est_cost_to_go: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEdge<S> {
    pub primitive: PrimitiveId,
    pub xi: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
    /// Realized setpoint reached by this edge.
    pub setpoint: S,
    pub cost: f64,
}

impl<S> PlanEdge<S> {
    pub fn chain_edge(&self) -> ChainEdge {
        ChainEdge {
            primitive: self.primitive.clone(),
            xi: self.xi.clone(),
            t0: self.t0,
            dt: self.dt,
        }
    }
}

/// An ordered chain of transfer-function applications from `start` whose
/// final edge is the goal primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanPath<S> {
    pub start: S,
    pub edges: Vec<PlanEdge<S>>,
    pub total_cost: f64,
}

impl<S: State> PlanPath<S> {
    pub fn chain_edges(&self) -> Vec<ChainEdge> {
        self.edges.iter().map(PlanEdge::chain_edge).collect()
    }

    /// Recompute feasibility and per-edge costs from scratch.
    pub fn revalidate(
        &self,
        registry: &Registry<S>,
        cost: &CostModel,
    ) -> Result<bool, SearchError> {
        let (feasible, states) = mp_core::compose_chain(registry, &self.start, &self.chain_edges())?;
        if !feasible {
            return Ok(false);
        }
        let mut total = 0.0;
        let mut prev = self.start.clone();
        for state in &states {
            total += edge_cost(&prev, state, cost)?;
            prev = state.clone();
        }
        Ok((total - self.total_cost).abs() < 1e-9)
    }
}

fn sample_domain(domain: &ArgumentDomain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..domain.dimension())
        .map(|i| {
            let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
            if hi > lo {
                rng.gen_range(lo..hi)
            } else {
                lo
            }
        })
        .collect()
}

fn sample_range(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Probe the minimum duration for a request, then apply it with `dt` set to
/// exactly that bound.
fn apply_at_min_duration<S: State>(
    spec: &PrimitiveSpec<S>,
    x0: &S,
    xi: &[f64],
    t0: f64,
    weights: &[f64],
) -> Result<mp_core::TransferResult<S>, CoreError> {
    let probe = apply_transfer(
        spec,
        &TransferRequest {
            x0: x0.clone(),
            primitive: spec.id.clone(),
            xi: xi.to_vec(),
            t0,
            dt: 0.0,
        },
        weights,
    )?;
    apply_transfer(
        spec,
        &TransferRequest {
            x0: x0.clone(),
            primitive: spec.id.clone(),
            xi: xi.to_vec(),
            t0,
            dt: probe.dt_min,
        },
        weights,
    )
}

struct SearchContext<'a, S: State> {
    registry: &'a Registry<S>,
    cost: &'a CostModel,
    cfg: &'a SearchConfig,
    goal: &'a GoalSpec,
    goal_spec: &'a PrimitiveSpec<S>,
}

impl<S: State> SearchContext<'_, S> {
    /// Cost of the hypothetical goal edge anchored at `state`; zero only
    /// ever appears on inserted goal nodes.
    fn est_cost_to_go(&self, state: &S) -> Result<f64, SearchError> {
        let t0 = self.cfg.t_range[0];
        let anchor = self.goal_spec.setpoint(state, &self.goal.xi, t0, t0);
        let err = mp_core::weighted_distance(state, &anchor, self.registry.norm_weights());
        let dt = mp_core::min_duration(&self.goal_spec.envelope, err);
        let target = self.goal_spec.setpoint(state, &self.goal.xi, t0, t0 + dt);
        edge_cost(state, &target, self.cost)
    }

    /// One-step goal reachability from a node state, per the goal exit test
    /// run after every insertion.
    fn try_goal(&self, state: &S) -> Result<Option<(ChainEdge, S)>, SearchError> {
        let t0 = self.cfg.t_range[0];
        let res = apply_at_min_duration(
            self.goal_spec,
            state,
            &self.goal.xi,
            t0,
            self.registry.norm_weights(),
        )?;
        if res.applied {
            Ok(Some((
                ChainEdge {
                    primitive: self.goal.primitive.clone(),
                    xi: self.goal.xi.clone(),
                    t0,
                    dt: res.dt_min,
                },
                res.x_out,
            )))
        } else {
            Ok(None)
        }
    }
}

fn build_path<S: State>(
    nodes: &[SearchNode<S>],
    start: &S,
    goal_index: usize,
    cost: &CostModel,
) -> Result<PlanPath<S>, SearchError> {
    let mut chain = Vec::new();
    let mut idx = goal_index;
    while let Some(parent) = nodes[idx].parent {
        chain.push(idx);
        idx = parent;
    }
    chain.reverse();
    let mut edges = Vec::with_capacity(chain.len());
    let mut prev = start.clone();
    let mut total = 0.0;
    for i in chain {
        let node = &nodes[i];
        let action = node.action.as_ref().expect("non-root node has an action");
        let c = edge_cost(&prev, &node.state, cost)?;
        total += c;
        edges.push(PlanEdge {
            primitive: action.primitive.clone(),
            xi: action.xi.clone(),
            t0: action.t0,
            dt: action.dt,
            setpoint: node.state.clone(),
            cost: c,
        });
        prev = node.state.clone();
    }
    Ok(PlanPath {
        start: start.clone(),
        edges,
        total_cost: total,
    })
}

/// Run the search and also return the final tree, for diagnostics.
pub fn feasible_path_search_with_tree<S: State>(
    goal: &GoalSpec,
    x0: &S,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &SearchConfig,
) -> (Result<PlanPath<S>, SearchError>, Vec<SearchNode<S>>) {
    let mut nodes: Vec<SearchNode<S>> = Vec::new();
    let result = search_inner(goal, x0, registry, cost, cfg, &mut nodes);
    (result, nodes)
}

pub fn feasible_path_search<S: State>(
    goal: &GoalSpec,
    x0: &S,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &SearchConfig,
) -> Result<PlanPath<S>, SearchError> {
    let mut nodes = Vec::new();
    search_inner(goal, x0, registry, cost, cfg, &mut nodes)
}

fn search_inner<S: State>(
    goal: &GoalSpec,
    x0: &S,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &SearchConfig,
    nodes: &mut Vec<SearchNode<S>>,
) -> Result<PlanPath<S>, SearchError> {
    cfg.validate()?;
    if registry.is_empty() {
        return Err(SearchError::InvalidGoal("empty primitive registry".into()));
    }
    if !x0.coords().iter().all(|c| c.is_finite()) {
        return Err(SearchError::InvalidGoal("initial state is not finite".into()));
    }
    let goal_spec = registry.get(&goal.primitive)?;
    goal_spec
        .check_args(&goal.xi)
        .map_err(|e| SearchError::InvalidGoal(e.to_string()))?;
    let ctx = SearchContext {
        registry,
        cost,
        cfg,
        goal,
        goal_spec,
    };

    nodes.push(SearchNode {
        state: x0.clone(),
        action: None,
        parent: None,
        cost_to_come: 0.0,
        est_cost_to_go: ctx.est_cost_to_go(x0)?,
    });
    let mut cheapest = 0usize;

    // Goal may be one step from the root before any expansion.
    if let Some((edge, x_goal)) = ctx.try_goal(x0)? {
        let c = edge_cost(x0, &x_goal, cost)?;
        nodes.push(SearchNode {
            state: x_goal,
            action: Some(edge),
            parent: Some(0),
            cost_to_come: c,
            est_cost_to_go: 0.0,
        });
        return build_path(nodes, x0, nodes.len() - 1, cost);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let weights = registry.norm_weights();
    for _ in 0..cfg.max_iterations {
        // Node selection: cheapest with probability p, else uniform.
        let pick_cheapest = rng.gen::<f64>() < cfg.cheapest_bias;
        let node_idx = if pick_cheapest {
            cheapest
        } else {
            rng.gen_range(0..nodes.len())
        };
        // Candidate edge: uniform primitive, arguments, start time; duration
        // drawn above the per-request minimum so it always clears the gate.
        let spec = &registry.specs()[rng.gen_range(0..registry.len())];
        let xi = sample_domain(&spec.args, &mut rng);
        let t0 = sample_range(cfg.t_range[0], cfg.t_range[1], &mut rng);
        let x_in = nodes[node_idx].state.clone();
        let probe = apply_transfer(
            spec,
            &TransferRequest {
                x0: x_in.clone(),
                primitive: spec.id.clone(),
                xi: xi.clone(),
                t0,
                dt: 0.0,
            },
            weights,
        )?;
        let dt = probe.dt_min + sample_range(0.0, cfg.dt_slack_s, &mut rng);
        let res = apply_transfer(
            spec,
            &TransferRequest {
                x0: x_in.clone(),
                primitive: spec.id.clone(),
                xi: xi.clone(),
                t0,
                dt,
            },
            weights,
        )?;
        if !res.applied || res.x_out == x_in {
            continue; // infeasible, or no progress
        }
        let c = edge_cost(&x_in, &res.x_out, cost)?;
        let node = SearchNode {
            state: res.x_out,
            action: Some(ChainEdge {
                primitive: spec.id.clone(),
                xi,
                t0,
                dt,
            }),
            parent: Some(node_idx),
            cost_to_come: nodes[node_idx].cost_to_come + c,
            est_cost_to_go: 0.0,
        };
        let est = ctx.est_cost_to_go(&node.state)?;
        let new_idx = nodes.len();
        nodes.push(SearchNode { est_cost_to_go: est, ..node });
        let key = |i: usize| nodes[i].cost_to_come + nodes[i].est_cost_to_go;
        if key(new_idx) < key(cheapest) {
            cheapest = new_idx;
        }
        if let Some((edge, x_goal)) = ctx.try_goal(&nodes[new_idx].state)? {
            let gc = edge_cost(&nodes[new_idx].state, &x_goal, cost)?;
            nodes.push(SearchNode {
                state: x_goal,
                action: Some(edge),
                parent: Some(new_idx),
                cost_to_come: nodes[new_idx].cost_to_come + gc,
                est_cost_to_go: 0.0,
            });
            return build_path(nodes, x0, nodes.len() - 1, cost);
        }
    }
    Err(SearchError::SearchExhausted {
        iterations: cfg.max_iterations,
    })
}

/// Run `K` independent searches with seeds `rng_seed + i`, post-process each
/// success with `post` (typically path refinement), and return the cheapest
/// result. Ties break toward the lowest seed index, so the outcome is
/// deterministic given `(cfg.rng_seed, k)`.
pub fn parallel_best_path<S, F>(
    goal: &GoalSpec,
    x0: &S,
    registry: &Registry<S>,
    cost: &CostModel,
    cfg: &SearchConfig,
    k: usize,
    post: F,
) -> Result<PlanPath<S>, SearchError>
where
    S: State,
    F: Fn(PlanPath<S>) -> PlanPath<S> + Sync,
{
    assert!(k >= 1, "parallel_best_path requires k >= 1");
    let results: Vec<Result<PlanPath<S>, SearchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..k)
            .map(|i| {
                let mut cfg_i = cfg.clone();
                cfg_i.rng_seed = cfg.rng_seed.wrapping_add(i as u64);
                let post = &post;
                scope.spawn(move || {
                    feasible_path_search(goal, x0, registry, cost, &cfg_i).map(post)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut best: Option<PlanPath<S>> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(p) => {
                let better = best
                    .as_ref()
                    .map(|b| p.total_cost < b.total_cost)
                    .unwrap_or(true);
                if better {
                    best = Some(p);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    best.ok_or_else(|| first_err.expect("k >= 1 produces at least one result"))
}

/// One node per line: `id|parent|primitive|xi|t0|dt|costToCome|estCostToGo`.
/// The root has parent `-`, primitive `-`, and empty action fields.
pub fn dump_tree<S: State>(nodes: &[SearchNode<S>]) -> String {
    let mut out = String::new();
    for (i, n) in nodes.iter().enumerate() {
        let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
        let (prim, xi, t0, dt) = match &n.action {
            Some(a) => (
                a.primitive.as_str().to_string(),
                a.xi.iter()
                    .map(|v| format!("{v:.6}"))
                    .collect::<Vec<_>>()
                    .join(","),
                format!("{:.6}", a.t0),
                format!("{:.6}", a.dt),
            ),
            None => ("-".to_string(), String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{i}|{parent}|{prim}|{xi}|{t0}|{dt}|{:.9}|{:.9}\n",
            n.cost_to_come, n.est_cost_to_go
        ));
    }
    out
}
