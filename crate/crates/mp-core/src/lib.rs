//! Motion-primitive abstraction: argument domains, stability envelopes,
//! transfer functions, and chain composition, generic over any plant state.

mod domain;
mod error;
mod primitive;
mod state;
mod transfer;

pub use domain::{ArgumentDomain, StabilityEnvelope};
pub use error::CoreError;
pub use primitive::{
    JacobianFn, PredicateFn, PrimitiveId, PrimitiveSpec, Registry, RoaFn, SetpointFn,
};
pub use state::{weighted_distance, State};
pub use transfer::{
    apply_transfer, compose_chain, min_duration, ChainEdge, TransferRequest, TransferResult,
};
