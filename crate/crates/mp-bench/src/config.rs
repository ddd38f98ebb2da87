use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid plant config: {0}")]
    ConfigInvalid(String),
}

/// Axis-aligned safe-RoA half-widths in error coordinates relative to the
/// primitive's target. `None` leaves a coordinate unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoaBox {
    pub h_m: Option<f64>,
    pub theta_xy_rad: Option<f64>,
    pub theta_z_rad: Option<f64>,
    pub v_mps: Option<f64>,
    pub vz_mps: Option<f64>,
}

impl Default for RoaBox {
    fn default() -> Self {
        Self {
            h_m: None,
            theta_xy_rad: None,
            theta_z_rad: None,
            v_mps: None,
            vz_mps: None,
        }
    }
}

/// Bench plant parameters: per-primitive stability constants, state-norm
/// weights, safe-set box limits, gait timing, and safe-RoA boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    pub alpha_lie_per_s: f64,
    pub alpha_stand_per_s: f64,
    pub alpha_walk_per_s: f64,
    pub alpha_land_per_s: f64,
    pub overshoot_lie: f64,
    pub overshoot_stand: f64,
    pub overshoot_walk: f64,
    pub overshoot_land: f64,
    /// Negligible-deviation threshold in normalized state units.
    pub epsilon: f64,
    /// Per-dimension weights of the state norm, coordinate order
    /// `[h, thx, thy, thz, px, py, vx, vy, vz]`.
    pub norm_weights: [f64; 9],

    // safe-set box limits
    pub h_min_m: f64,
    pub h_max_m: f64,
    pub theta_xy_max_rad: f64,
    pub theta_z_max_rad: f64,
    pub v_max_mps: f64,
    pub vz_max_mps: f64,

    pub gait_period_s: f64,
    /// Swing window as fractions of a half period: feet of the swing pair
    /// leave the ground inside this window, double support outside it.
    pub swing_window: [f64; 2],
    pub spline_duration_s: f64,
    pub lie_height_m: f64,
    pub land_height_m: f64,
    /// Attitude decay rate used by walk/land setpoints, 1/s.
    pub attitude_decay_per_s: f64,

    // argument domains
    pub stand_h_m: [f64; 2],
    pub stand_theta_max_rad: f64,
    pub walk_h_m: [f64; 2],
    pub walk_v_max_mps: f64,
    pub walk_yaw_rate_max_radps: f64,

    pub roa_lie: RoaBox,
    pub roa_stand: RoaBox,
    pub roa_walk: RoaBox,
    pub roa_land: RoaBox,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            alpha_lie_per_s: 2.0,
            alpha_stand_per_s: 3.0,
            alpha_walk_per_s: 3.0,
            alpha_land_per_s: 4.0,
            overshoot_lie: 1.2,
            overshoot_stand: 1.2,
            overshoot_walk: 1.2,
            overshoot_land: 1.2,
            epsilon: 1e-2,
            norm_weights: [1.0; 9],
            h_min_m: 0.0,
            h_max_m: 1.5,
            theta_xy_max_rad: 0.6,
            theta_z_max_rad: 6.3,
            v_max_mps: 2.5,
            vz_max_mps: 5.0,
            gait_period_s: 0.8,
            swing_window: [0.2, 0.7],
            spline_duration_s: 1.0,
            lie_height_m: 0.08,
            land_height_m: 0.15,
            attitude_decay_per_s: 3.0,
            stand_h_m: [0.12, 0.30],
            stand_theta_max_rad: 0.3,
            walk_h_m: [0.15, 0.30],
            walk_v_max_mps: 0.8,
            walk_yaw_rate_max_radps: 0.6,
            roa_lie: RoaBox {
                h_m: Some(0.5),
                theta_xy_rad: Some(0.45),
                theta_z_rad: None,
                v_mps: Some(2.0),
                vz_mps: Some(0.5),
            },
            roa_stand: RoaBox {
                h_m: Some(0.25),
                theta_xy_rad: Some(0.25),
                theta_z_rad: Some(0.4),
                v_mps: Some(0.25),
                vz_mps: Some(0.5),
            },
            roa_walk: RoaBox {
                h_m: Some(0.12),
                theta_xy_rad: Some(0.3),
                theta_z_rad: None,
                v_mps: Some(0.35),
                vz_mps: Some(0.5),
            },
            roa_land: RoaBox::default(),
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let pos = [
            ("alpha_lie_per_s", self.alpha_lie_per_s),
            ("alpha_stand_per_s", self.alpha_stand_per_s),
            ("alpha_walk_per_s", self.alpha_walk_per_s),
            ("alpha_land_per_s", self.alpha_land_per_s),
            ("epsilon", self.epsilon),
            ("gait_period_s", self.gait_period_s),
            ("spline_duration_s", self.spline_duration_s),
            ("attitude_decay_per_s", self.attitude_decay_per_s),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(BenchError::ConfigInvalid(format!("{name} must be > 0")));
            }
        }
        for (name, m) in [
            ("overshoot_lie", self.overshoot_lie),
            ("overshoot_stand", self.overshoot_stand),
            ("overshoot_walk", self.overshoot_walk),
            ("overshoot_land", self.overshoot_land),
        ] {
            if !(m >= 1.0) {
                return Err(BenchError::ConfigInvalid(format!("{name} must be >= 1")));
            }
        }
        if self.norm_weights.iter().any(|w| *w < 0.0) {
            return Err(BenchError::ConfigInvalid(
                "norm_weights must be nonnegative".into(),
            ));
        }
        for (name, lo, hi) in [
            ("h box", self.h_min_m, self.h_max_m),
            ("stand_h_m", self.stand_h_m[0], self.stand_h_m[1]),
            ("walk_h_m", self.walk_h_m[0], self.walk_h_m[1]),
            ("swing_window", self.swing_window[0], self.swing_window[1]),
        ] {
            if !(lo < hi) {
                return Err(BenchError::ConfigInvalid(format!(
                    "{name}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        if self.swing_window[0] < 0.0 || self.swing_window[1] > 1.0 {
            return Err(BenchError::ConfigInvalid(
                "swing_window must lie within [0, 1]".into(),
            ));
        }
        for (name, h) in [
            ("lie_height_m", self.lie_height_m),
            ("land_height_m", self.land_height_m),
        ] {
            if h < self.h_min_m || h > self.h_max_m {
                return Err(BenchError::ConfigInvalid(format!(
                    "{name} = {h} outside the safe h box"
                )));
            }
        }
        Ok(())
    }

    pub fn alpha(&self, kind: crate::primitives::PrimKind) -> f64 {
        use crate::primitives::PrimKind::*;
        match kind {
            Lie => self.alpha_lie_per_s,
            Stand => self.alpha_stand_per_s,
            Walk => self.alpha_walk_per_s,
            Land => self.alpha_land_per_s,
        }
    }

    pub fn overshoot(&self, kind: crate::primitives::PrimKind) -> f64 {
        use crate::primitives::PrimKind::*;
        match kind {
            Lie => self.overshoot_lie,
            Stand => self.overshoot_stand,
            Walk => self.overshoot_walk,
            Land => self.overshoot_land,
        }
    }

    pub fn roa_box(&self, kind: crate::primitives::PrimKind) -> &RoaBox {
        use crate::primitives::PrimKind::*;
        match kind {
            Lie => &self.roa_lie,
            Stand => &self.roa_stand,
            Walk => &self.roa_walk,
            Land => &self.roa_land,
        }
    }
}

/// Disturbance models standing in for physical experiments: instantaneous
/// state jumps, clamped state components, and contact-state events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    /// Instantaneous velocity / attitude jump at `t_s`.
    Impulse {
        t_s: f64,
        #[serde(default)]
        dv_mps: [f64; 3],
        #[serde(default)]
        dtheta_rad: [f64; 3],
    },
    /// Clamp one state component to a value over `[t_start_s, t_start_s + window_s]`.
    /// Components: `h, thx, thy, thz, px, py, vx, vy, vz, contact0..contact3`.
    Hold {
        t_start_s: f64,
        window_s: f64,
        component: String,
        value: f64,
    },
    /// Set the contact flags and offset the body height at `t_s`.
    ContactEvent {
        t_s: f64,
        contacts: [bool; 4],
        #[serde(default)]
        dh_m: f64,
    },
}

/// State components a hold disturbance may clamp.
pub const HOLD_COMPONENTS: [&str; 13] = [
    "h", "thx", "thy", "thz", "px", "py", "vx", "vy", "vz", "contact0", "contact1", "contact2",
    "contact3",
];

impl Disturbance {
    /// Validate timing fields.
    pub fn validate(&self) -> Result<(), BenchError> {
        let ok = match self {
            Disturbance::Impulse { t_s, .. } => *t_s >= 0.0,
            Disturbance::Hold {
                t_start_s,
                window_s,
                component,
                ..
            } => {
                if !HOLD_COMPONENTS.contains(&component.as_str()) {
                    return Err(BenchError::ConfigInvalid(format!(
                        "unknown hold component `{component}`; expected one of {HOLD_COMPONENTS:?}"
                    )));
                }
                *t_start_s >= 0.0 && *window_s >= 0.0
            }
            Disturbance::ContactEvent { t_s, .. } => *t_s >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(BenchError::ConfigInvalid(
                "disturbance times and windows must be nonnegative".into(),
            ))
        }
    }
}
