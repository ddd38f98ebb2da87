//! Reduced-order quadruped-analogue bench plant: four concrete primitives
//! (lie, stand, walk, land), a closed-loop simulator with exact exponential
//! error decay, and parameterized disturbance models.

mod ad;
mod config;
mod plant;
mod primitives;
mod state;

pub use ad::{Dual, Real};
pub use config::{BenchError, Disturbance, PlantConfig, RoaBox};
pub use plant::{apply_disturbance, step_plant, ActivePrimitive};
pub use primitives::{build_bench_registry, walk_stance, PrimKind, LAND, LIE, STAND, WALK};
pub use state::PlantState;
