use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::domain::{ArgumentDomain, StabilityEnvelope};
use crate::error::CoreError;
use crate::state::State;

/// Symbolic primitive name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct PrimitiveId(pub String);

impl PrimitiveId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PrimitiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PrimitiveId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Setpoint anchored at `(x0, t0)` evaluated at time `t >= t0` on the
/// primitive's own clock: `Fn(x0, xi, t0, t) -> state`.
pub type SetpointFn<S> = Arc<dyn Fn(&S, &[f64], f64, f64) -> S + Send + Sync>;
/// Safe-set membership: `Fn(x, xi, t) -> bool`, with `t` on the primitive
/// clock so time-varying safe sets can be expressed.
pub type PredicateFn<S> = Arc<dyn Fn(&S, &[f64], f64) -> bool + Send + Sync>;
/// Conservative safe-RoA membership at activation: `Fn(x0, xi, t0) -> bool`.
pub type RoaFn<S> = Arc<dyn Fn(&S, &[f64], f64) -> bool + Send + Sync>;
/// Partials of the continuous setpoint coordinates with respect to
/// `(xi.., t0, dt)`: `Fn(x0, xi, t0, dt) -> rows[coord][var]`.
pub type JacobianFn<S> = Arc<dyn Fn(&S, &[f64], f64, f64) -> Vec<Vec<f64>> + Send + Sync>;

/// One motion primitive: argument domain, setpoint map, stability envelope,
/// safe set and conservative safe-RoA estimate. The control law itself is
/// represented only through the closed-loop behavior of the plant.
#[derive(Clone)]
pub struct PrimitiveSpec<S: State> {
    pub id: PrimitiveId,
    pub args: ArgumentDomain,
    pub envelope: StabilityEnvelope,
    setpoint: SetpointFn<S>,
    safe_set: PredicateFn<S>,
    safe_roa: RoaFn<S>,
    setpoint_jacobian: Option<JacobianFn<S>>,
}

impl<S: State> PrimitiveSpec<S> {
    pub fn new(
        id: impl Into<PrimitiveId>,
        args: ArgumentDomain,
        envelope: StabilityEnvelope,
        setpoint: SetpointFn<S>,
        safe_set: PredicateFn<S>,
        safe_roa: RoaFn<S>,
    ) -> Self {
        Self {
            id: id.into(),
            args,
            envelope,
            setpoint,
            safe_set,
            safe_roa,
            setpoint_jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jacobian: JacobianFn<S>) -> Self {
        self.setpoint_jacobian = Some(jacobian);
        self
    }

    /// Evaluate the setpoint anchored at `(x0, t0)` at clock time `t`.
    pub fn setpoint(&self, x0: &S, xi: &[f64], t0: f64, t: f64) -> S {
        (self.setpoint)(x0, xi, t0, t)
    }

    pub fn safe_set(&self, x: &S, xi: &[f64], t: f64) -> bool {
        (self.safe_set)(x, xi, t)
    }

    pub fn safe_roa(&self, x0: &S, xi: &[f64], t0: f64) -> bool {
        (self.safe_roa)(x0, xi, t0)
    }

    pub fn jacobian(&self, x0: &S, xi: &[f64], t0: f64, dt: f64) -> Option<Vec<Vec<f64>>> {
        self.setpoint_jacobian.as_ref().map(|j| j(x0, xi, t0, dt))
    }

    pub fn has_jacobian(&self) -> bool {
        self.setpoint_jacobian.is_some()
    }

    pub fn check_args(&self, xi: &[f64]) -> Result<(), CoreError> {
        if xi.len() != self.args.dimension() {
            return Err(CoreError::ArgumentDimension {
                primitive: self.id.0.clone(),
                expected: self.args.dimension(),
                got: xi.len(),
            });
        }
        for (i, v) in xi.iter().enumerate() {
            if *v < self.args.lower()[i] || *v > self.args.upper()[i] {
                return Err(CoreError::ArgumentOutOfDomain {
                    primitive: self.id.0.clone(),
                    index: i,
                    value: *v,
                    lower: self.args.lower()[i],
                    upper: self.args.upper()[i],
                });
            }
        }
        Ok(())
    }
}

/// Immutable set of registered primitives plus the state-norm weights used
/// by the stability envelope. Safe to share across concurrent searchers.
#[derive(Clone)]
pub struct Registry<S: State> {
    specs: Vec<PrimitiveSpec<S>>,
    index: HashMap<PrimitiveId, usize>,
    norm_weights: Vec<f64>,
}

impl<S: State> Registry<S> {
    pub fn new(norm_weights: Vec<f64>) -> Self {
        Self {
            specs: Vec::new(),
            index: HashMap::new(),
            norm_weights,
        }
    }

    pub fn register(&mut self, spec: PrimitiveSpec<S>) {
        let id = spec.id.clone();
        let pos = self.specs.len();
        self.specs.push(spec);
        self.index.insert(id, pos);
    }

    pub fn get(&self, id: &PrimitiveId) -> Result<&PrimitiveSpec<S>, CoreError> {
        self.index
            .get(id)
            .map(|i| &self.specs[*i])
            .ok_or_else(|| CoreError::UnknownPrimitive(id.0.clone()))
    }

    pub fn specs(&self) -> &[PrimitiveSpec<S>] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn norm_weights(&self) -> &[f64] {
        &self.norm_weights
    }
}
