use mp_core::PrimitiveSpec;

use crate::config::Disturbance;
use crate::state::PlantState;

/// The primitive currently driving the plant: spec, arguments, the anchor
/// state it was activated from, and its activation time on the primitive
/// clock.
pub struct ActivePrimitive<'a> {
    pub spec: &'a PrimitiveSpec<PlantState>,
    pub xi: &'a [f64],
    pub anchor: &'a PlantState,
    pub t0: f64,
}

impl ActivePrimitive<'_> {
    pub fn setpoint(&self, t: f64) -> PlantState {
        self.spec.setpoint(self.anchor, self.xi, self.t0, t)
    }
}

/// Apply one instantaneous disturbance to a state. Hold disturbances clamp
/// their component; the caller re-applies them while the window is active.
pub fn apply_disturbance(x: &mut PlantState, d: &Disturbance) {
    match d {
        Disturbance::Impulse {
            dv_mps, dtheta_rad, ..
        } => {
            x.v_mps[0] += dv_mps[0];
            x.v_mps[1] += dv_mps[1];
            x.vz_mps += dv_mps[2];
            for i in 0..3 {
                x.theta_rad[i] += dtheta_rad[i];
            }
        }
        Disturbance::Hold {
            component, value, ..
        } => match component.as_str() {
            "h" => x.h_m = *value,
            "thx" => x.theta_rad[0] = *value,
            "thy" => x.theta_rad[1] = *value,
            "thz" => x.theta_rad[2] = *value,
            "px" => x.p_m[0] = *value,
            "py" => x.p_m[1] = *value,
            "vx" => x.v_mps[0] = *value,
            "vy" => x.v_mps[1] = *value,
            "vz" => x.vz_mps = *value,
            "contact0" => x.contacts[0] = *value != 0.0,
            "contact1" => x.contacts[1] = *value != 0.0,
            "contact2" => x.contacts[2] = *value != 0.0,
            "contact3" => x.contacts[3] = *value != 0.0,
            other => panic!("unknown hold component: {other}"),
        },
        Disturbance::ContactEvent { contacts, dh_m, .. } => {
            x.contacts = *contacts;
            x.h_m += dh_m;
        }
    }
}

/// Advance the plant by `dt` under the active primitive's closed loop.
///
/// The continuous tracking error decays exactly at the primitive's envelope
/// rate: `e(t + dt) = e(t) * exp(-alpha * dt)` measured against the moving
/// setpoint. Contacts follow the setpoint schedule. Disturbances effective
/// in `(t, t + dt]` are applied after the decay step.
pub fn step_plant(
    x: &PlantState,
    active: &ActivePrimitive<'_>,
    clock: f64,
    dt: f64,
    events: &[&Disturbance],
) -> PlantState {
    debug_assert!(dt > 0.0);
    let alpha = active.spec.envelope.rate;
    let sp_now = active.setpoint(clock);
    let sp_next = active.setpoint(clock + dt);
    let decay = (-alpha * dt).exp();
    let c_now = x.coords_array();
    let c_sp_now = sp_now.coords_array();
    let c_sp_next = sp_next.coords_array();
    let mut c = [0.0; 9];
    for i in 0..9 {
        c[i] = c_sp_next[i] + (c_now[i] - c_sp_now[i]) * decay;
    }
    let mut out = PlantState::from_coords(&c, sp_next.contacts);
    for d in events {
        apply_disturbance(&mut out, d);
    }
    out
}
