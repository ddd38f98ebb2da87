use mp_core::State;
use serde::{Deserialize, Serialize};

/// Reduced-order bench state: body height, orientation, planar position and
/// velocity, vertical velocity, and per-foot contact flags.
///
/// Continuous coordinate order: `[h, thx, thy, thz, px, py, vx, vy, vz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantState {
    pub h_m: f64,
    pub theta_rad: [f64; 3],
    pub p_m: [f64; 2],
    pub v_mps: [f64; 2],
    pub vz_mps: f64,
    pub contacts: [bool; 4],
}

impl PlantState {
    pub fn new(
        h_m: f64,
        theta_rad: [f64; 3],
        p_m: [f64; 2],
        v_mps: [f64; 2],
        vz_mps: f64,
        contacts: [bool; 4],
    ) -> Self {
        Self {
            h_m,
            theta_rad,
            p_m,
            v_mps,
            vz_mps,
            contacts,
        }
    }

    /// Resting pose at the given height with all feet in contact.
    pub fn resting(h_m: f64) -> Self {
        Self::new(h_m, [0.0; 3], [0.0; 2], [0.0; 2], 0.0, [true; 4])
    }

    pub fn coords_array(&self) -> [f64; 9] {
        [
            self.h_m,
            self.theta_rad[0],
            self.theta_rad[1],
            self.theta_rad[2],
            self.p_m[0],
            self.p_m[1],
            self.v_mps[0],
            self.v_mps[1],
            self.vz_mps,
        ]
    }

    pub fn from_coords(c: &[f64; 9], contacts: [bool; 4]) -> Self {
        Self {
            h_m: c[0],
            theta_rad: [c[1], c[2], c[3]],
            p_m: [c[4], c[5]],
            v_mps: [c[6], c[7]],
            vz_mps: c[8],
            contacts,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords_array().iter().all(|v| v.is_finite())
    }

    pub fn any_contact(&self) -> bool {
        self.contacts.iter().any(|c| *c)
    }

    pub fn all_contacts(&self) -> bool {
        self.contacts.iter().all(|c| *c)
    }
}

impl State for PlantState {
    fn coords(&self) -> Vec<f64> {
        self.coords_array().to_vec()
    }
}
