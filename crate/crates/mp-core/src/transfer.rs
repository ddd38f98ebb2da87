use crate::domain::StabilityEnvelope;
use crate::error::CoreError;
use crate::primitive::{PrimitiveId, PrimitiveSpec, Registry};
use crate::state::{weighted_distance, State};

/// Inputs of one transfer-function application.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRequest<S> {
    pub x0: S,
    pub primitive: PrimitiveId,
    pub xi: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
}

/// Outcome of one transfer-function application.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult<S> {
    pub applied: bool,
    pub x_out: S,
    /// The minimum-duration bound computed for this request.
    pub dt_min: f64,
}

/// One link of a transfer chain: a `TransferRequest` without the state,
/// which is threaded through by `compose_chain`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEdge {
    pub primitive: PrimitiveId,
    pub xi: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
}

/// Duration after which tracking error provably falls below epsilon:
/// `max(0, ln(M * err / eps) / alpha)`.
pub fn min_duration(envelope: &StabilityEnvelope, err_norm: f64) -> f64 {
    debug_assert!(err_norm >= 0.0);
    if err_norm <= 0.0 {
        return 0.0;
    }
    let ratio = envelope.overshoot * err_norm / envelope.epsilon;
    if ratio <= 1.0 {
        0.0
    } else {
        ratio.ln() / envelope.rate
    }
}

/// Apply one motion-primitive transfer function.
///
/// Returns the setpoint when the start state lies in the primitive's safe
/// RoA and the duration clears the minimum bound; otherwise the state is
/// passed through unchanged.
pub fn apply_transfer<S: State>(
    spec: &PrimitiveSpec<S>,
    req: &TransferRequest<S>,
    norm_weights: &[f64],
) -> Result<TransferResult<S>, CoreError> {
    spec.check_args(&req.xi)?;
    if req.dt < 0.0 {
        return Err(CoreError::NegativeDuration(req.dt));
    }
    let anchor_setpoint = spec.setpoint(&req.x0, &req.xi, req.t0, req.t0);
    let err = weighted_distance(&req.x0, &anchor_setpoint, norm_weights);
    let dt_min = min_duration(&spec.envelope, err);
    let in_roa = spec.safe_roa(&req.x0, &req.xi, req.t0);
    if in_roa && req.dt >= dt_min {
        let x_out = spec.setpoint(&req.x0, &req.xi, req.t0, req.t0 + req.dt);
        Ok(TransferResult {
            applied: true,
            x_out,
            dt_min,
        })
    } else {
        Ok(TransferResult {
            applied: false,
            x_out: req.x0.clone(),
            dt_min,
        })
    }
}

/// Thread a state through a sequence of transfer-function applications.
///
/// Stops at the first edge that does not apply; `states` holds the realized
/// setpoints produced before the failure.
pub fn compose_chain<S: State>(
    registry: &Registry<S>,
    x0: &S,
    edges: &[ChainEdge],
) -> Result<(bool, Vec<S>), CoreError> {
    let mut states = Vec::with_capacity(edges.len());
    let mut x = x0.clone();
    for edge in edges {
        let spec = registry.get(&edge.primitive)?;
        let req = TransferRequest {
            x0: x.clone(),
            primitive: edge.primitive.clone(),
            xi: edge.xi.clone(),
            t0: edge.t0,
            dt: edge.dt,
        };
        let res = apply_transfer(spec, &req, registry.norm_weights())?;
        if !res.applied {
            return Ok((false, states));
        }
        states.push(res.x_out.clone());
        x = res.x_out;
    }
    Ok((true, states))
}
