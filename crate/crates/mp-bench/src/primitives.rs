use std::sync::Arc;

use mp_core::{ArgumentDomain, PrimitiveSpec, Registry, StabilityEnvelope};

use crate::ad::{Dual, Real};
use crate::config::{BenchError, PlantConfig, RoaBox};
use crate::state::PlantState;

pub const LIE: &str = "lie";
pub const STAND: &str = "stand";
pub const WALK: &str = "walk";
pub const LAND: &str = "land";

const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimKind {
    Lie,
    Stand,
    Walk,
    Land,
}

impl PrimKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimKind::Lie => LIE,
            PrimKind::Stand => STAND,
            PrimKind::Walk => WALK,
            PrimKind::Land => LAND,
        }
    }

    pub fn all() -> [PrimKind; 4] {
        [PrimKind::Lie, PrimKind::Stand, PrimKind::Walk, PrimKind::Land]
    }
}

/// Scheduled contact flags of the walking trot at clock time `t`: the two
/// diagonal pairs alternate swing phases, with double support between them.
pub fn walk_stance(cfg: &PlantConfig, t: f64) -> [bool; 4] {
    let period = cfg.gait_period_s;
    let half = period / 2.0;
    let phase = t.rem_euclid(period);
    let (pair, frac) = if phase < half {
        (0, phase / half)
    } else {
        (1, (phase - half) / half)
    };
    let mut contacts = [true; 4];
    if frac > cfg.swing_window[0] && frac < cfg.swing_window[1] {
        // pair 0 = feet {0, 3}, pair 1 = feet {1, 2}
        let swing = if pair == 0 { [0, 3] } else { [1, 2] };
        for i in swing {
            contacts[i] = false;
        }
    }
    contacts
}

/// Ballistic touchdown delay of the land primitive from a given anchor, in
/// seconds. Anchors at or below the landing height land immediately.
fn touchdown_delay(cfg: &PlantConfig, h0: f64, vz0: f64) -> f64 {
    if h0 <= cfg.land_height_m {
        return 0.0;
    }
    let disc = vz0 * vz0 + 2.0 * GRAVITY * (h0 - cfg.land_height_m);
    (vz0 + disc.max(0.0).sqrt()) / GRAVITY
}

/// Continuous setpoint coordinates, generic over the scalar so dual numbers
/// yield exact partials with respect to `(xi, t0, t)`.
///
/// Lie/stand follow cubic profiles `target + (anchor - target) * r^3` with
/// `r = (T - t) / (T - t0)` on the primitive clock; the cubic family is
/// closed under re-anchoring, so the setpoint semigroup property is exact.
fn setpoint_coords<T: Real>(
    kind: PrimKind,
    cfg: &PlantConfig,
    anchor: &[f64; 9],
    xi: &[T],
    t0: T,
    t: T,
) -> [T; 9] {
    let k = T::c;
    let (h0, thx0, thy0, thz0, px0, py0, vx0, vy0, vz0) = (
        anchor[0], anchor[1], anchor[2], anchor[3], anchor[4], anchor[5], anchor[6], anchor[7],
        anchor[8],
    );
    match kind {
        PrimKind::Lie | PrimKind::Stand => {
            let (h_t, th_t) = match kind {
                PrimKind::Lie => (k(cfg.lie_height_m), [k(0.0), k(0.0), k(0.0)]),
                PrimKind::Stand => (xi[0], [xi[1], xi[2], xi[3]]),
                _ => unreachable!(),
            };
            let t_spline = cfg.spline_duration_s;
            if t0.re() >= t_spline {
                // late anchor: already at the target pose
                return [
                    h_t, th_t[0], th_t[1], th_t[2], k(px0), k(py0), k(0.0), k(0.0), k(0.0),
                ];
            }
            let d = k(t_spline) - t0;
            let te = if t.re() >= t_spline { k(t_spline) } else { t };
            let r = (k(t_spline) - te) / d;
            let r3 = r * r * r;
            let r4 = r3 * r;
            let decay = |target: T, anchor_v: f64| target + (k(anchor_v) - target) * r3;
            [
                decay(h_t, h0),
                decay(th_t[0], thx0),
                decay(th_t[1], thy0),
                decay(th_t[2], thz0),
                k(px0) + k(vx0) * d * (k(1.0) - r4) / k(4.0),
                k(py0) + k(vy0) * d * (k(1.0) - r4) / k(4.0),
                k(vx0) * r3,
                k(vy0) * r3,
                k(vz0) * r3,
            ]
        }
        PrimKind::Walk => {
            // xi = [h, vx, vy, yaw rate]
            let e = t - t0;
            let att = (-k(cfg.attitude_decay_per_s) * e).exp();
            [
                xi[0],
                k(thx0) * att,
                k(thy0) * att,
                k(thz0) + xi[3] * e,
                k(px0) + xi[1] * e,
                k(py0) + xi[2] * e,
                xi[1],
                xi[2],
                k(0.0),
            ]
        }
        PrimKind::Land => {
            let ttd = touchdown_delay(cfg, h0, vz0);
            let e = t - t0;
            let att = (-k(cfg.attitude_decay_per_s) * e).exp();
            if e.re() < ttd {
                // ballistic flight from the anchor
                [
                    k(h0) + k(vz0) * e - k(GRAVITY / 2.0) * e * e,
                    k(thx0) * att,
                    k(thy0) * att,
                    k(thz0) * att,
                    k(px0) + k(vx0) * e,
                    k(py0) + k(vy0) * e,
                    k(vx0),
                    k(vy0),
                    k(vz0) - k(GRAVITY) * e,
                ]
            } else {
                // at rest in the landing pose; an anchor that was already
                // at or below the landing height just stays where it is
                let rest_h = if ttd > 0.0 { cfg.land_height_m } else { h0 };
                [
                    k(rest_h),
                    k(thx0) * att,
                    k(thy0) * att,
                    k(thz0) * att,
                    k(px0 + vx0 * ttd),
                    k(py0 + vy0 * ttd),
                    k(0.0),
                    k(0.0),
                    k(0.0),
                ]
            }
        }
    }
}

/// Contact flags of the setpoint at clock time `t`.
fn setpoint_contacts(kind: PrimKind, cfg: &PlantConfig, anchor: &PlantState, t0: f64, t: f64) -> [bool; 4] {
    match kind {
        PrimKind::Lie | PrimKind::Stand => [true; 4],
        PrimKind::Walk => walk_stance(cfg, t),
        PrimKind::Land => {
            let ttd = touchdown_delay(cfg, anchor.h_m, anchor.vz_mps);
            if t - t0 < ttd {
                [false; 4]
            } else {
                [true; 4]
            }
        }
    }
}

fn eval_setpoint(kind: PrimKind, cfg: &PlantConfig, x0: &PlantState, xi: &[f64], t0: f64, t: f64) -> PlantState {
    let anchor = x0.coords_array();
    let coords = setpoint_coords::<f64>(kind, cfg, &anchor, xi, t0, t);
    let contacts = setpoint_contacts(kind, cfg, x0, t0, t);
    PlantState::from_coords(&coords, contacts)
}

/// Analytic partials of the setpoint coordinates with respect to
/// `(xi.., t0, dt)`, evaluated via forward-mode duals.
fn eval_jacobian(
    kind: PrimKind,
    cfg: &PlantConfig,
    x0: &PlantState,
    xi: &[f64],
    t0: f64,
    dt: f64,
) -> Vec<Vec<f64>> {
    let anchor = x0.coords_array();
    let nvars = xi.len() + 2;
    let mut jac = vec![vec![0.0; nvars]; 9];
    for k in 0..nvars {
        let xi_d: Vec<Dual> = xi
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if j == k {
                    Dual::var(*v)
                } else {
                    Dual::cst(*v)
                }
            })
            .collect();
        let is_t0 = k == xi.len();
        let is_dt = k == xi.len() + 1;
        let t0_d = if is_t0 { Dual::var(t0) } else { Dual::cst(t0) };
        // evaluation time t = t0 + dt moves with both t0 and dt
        let t_d = Dual {
            v: t0 + dt,
            d: if is_t0 || is_dt { 1.0 } else { 0.0 },
        };
        let out = setpoint_coords::<Dual>(kind, cfg, &anchor, &xi_d, t0_d, t_d);
        for (row, val) in out.iter().enumerate() {
            jac[row][k] = val.d;
        }
    }
    jac
}

fn in_safe_box(cfg: &PlantConfig, x: &PlantState) -> bool {
    x.is_finite()
        && x.h_m >= cfg.h_min_m
        && x.h_m <= cfg.h_max_m
        && x.theta_rad[0].abs() <= cfg.theta_xy_max_rad
        && x.theta_rad[1].abs() <= cfg.theta_xy_max_rad
        && x.theta_rad[2].abs() <= cfg.theta_z_max_rad
        && x.v_mps[0].abs() <= cfg.v_max_mps
        && x.v_mps[1].abs() <= cfg.v_max_mps
        && x.vz_mps.abs() <= cfg.vz_max_mps
}

fn eval_safe_set(kind: PrimKind, cfg: &PlantConfig, x: &PlantState, _xi: &[f64], t: f64) -> bool {
    if !in_safe_box(cfg, x) {
        return false;
    }
    match kind {
        PrimKind::Lie => x.any_contact(),
        PrimKind::Stand => x.all_contacts(),
        PrimKind::Walk => {
            // every scheduled stance foot must be in contact
            let sched = walk_stance(cfg, t);
            (0..4).all(|i| !sched[i] || x.contacts[i])
        }
        PrimKind::Land => true,
    }
}

/// Error of a state relative to the primitive's asymptotic target, in the
/// coordinates constrained by the RoA box. `None` marks free coordinates.
fn target_error(kind: PrimKind, cfg: &PlantConfig, x: &PlantState, xi: &[f64]) -> [Option<f64>; 5] {
    // slots: [h, max|theta_xy|, theta_z, max|v|, vz]
    match kind {
        PrimKind::Lie => [
            Some(x.h_m - cfg.lie_height_m),
            Some(x.theta_rad[0].abs().max(x.theta_rad[1].abs())),
            None,
            Some(x.v_mps[0].abs().max(x.v_mps[1].abs())),
            Some(x.vz_mps),
        ],
        PrimKind::Stand => [
            Some(x.h_m - xi[0]),
            Some((x.theta_rad[0] - xi[1]).abs().max((x.theta_rad[1] - xi[2]).abs())),
            Some(x.theta_rad[2] - xi[3]),
            Some(x.v_mps[0].abs().max(x.v_mps[1].abs())),
            Some(x.vz_mps),
        ],
        PrimKind::Walk => [
            Some(x.h_m - xi[0]),
            Some(x.theta_rad[0].abs().max(x.theta_rad[1].abs())),
            None,
            Some((x.v_mps[0] - xi[1]).abs().max((x.v_mps[1] - xi[2]).abs())),
            Some(x.vz_mps),
        ],
        PrimKind::Land => [None; 5],
    }
}

/// Conservative safe-RoA estimate: the error box intersected with the safe
/// set at the activation time, so membership always implies safety.
fn eval_safe_roa(kind: PrimKind, cfg: &PlantConfig, x0: &PlantState, xi: &[f64], t0: f64) -> bool {
    if !eval_safe_set(kind, cfg, x0, xi, t0) {
        return false;
    }
    let roa: &RoaBox = cfg.roa_box(kind);
    let err = target_error(kind, cfg, x0, xi);
    let limits = [
        roa.h_m,
        roa.theta_xy_rad,
        roa.theta_z_rad,
        roa.v_mps,
        roa.vz_mps,
    ];
    for (e, lim) in err.iter().zip(limits) {
        if let (Some(e), Some(lim)) = (e, lim) {
            if e.abs() > lim {
                return false;
            }
        }
    }
    true
}

fn argument_domain(kind: PrimKind, cfg: &PlantConfig) -> ArgumentDomain {
    match kind {
        PrimKind::Lie | PrimKind::Land => ArgumentDomain::empty(),
        PrimKind::Stand => ArgumentDomain::new(
            vec![
                cfg.stand_h_m[0],
                -cfg.stand_theta_max_rad,
                -cfg.stand_theta_max_rad,
                -cfg.stand_theta_max_rad,
            ],
            vec![
                cfg.stand_h_m[1],
                cfg.stand_theta_max_rad,
                cfg.stand_theta_max_rad,
                cfg.stand_theta_max_rad,
            ],
        )
        .expect("stand domain validated with config"),
        PrimKind::Walk => ArgumentDomain::new(
            vec![
                cfg.walk_h_m[0],
                -cfg.walk_v_max_mps,
                -cfg.walk_v_max_mps,
                -cfg.walk_yaw_rate_max_radps,
            ],
            vec![
                cfg.walk_h_m[1],
                cfg.walk_v_max_mps,
                cfg.walk_v_max_mps,
                cfg.walk_yaw_rate_max_radps,
            ],
        )
        .expect("walk domain validated with config"),
    }
}

fn build_spec(kind: PrimKind, cfg: &PlantConfig) -> PrimitiveSpec<PlantState> {
    let envelope = StabilityEnvelope::new(cfg.overshoot(kind), cfg.alpha(kind), cfg.epsilon)
        .expect("envelope validated with config");
    let c1 = cfg.clone();
    let c2 = cfg.clone();
    let c3 = cfg.clone();
    let c4 = cfg.clone();
    PrimitiveSpec::new(
        kind.name(),
        argument_domain(kind, cfg),
        envelope,
        Arc::new(move |x0: &PlantState, xi: &[f64], t0: f64, t: f64| {
            eval_setpoint(kind, &c1, x0, xi, t0, t)
        }),
        Arc::new(move |x: &PlantState, xi: &[f64], t: f64| eval_safe_set(kind, &c2, x, xi, t)),
        Arc::new(move |x0: &PlantState, xi: &[f64], t0: f64| eval_safe_roa(kind, &c3, x0, xi, t0)),
    )
    .with_jacobian(Arc::new(move |x0: &PlantState, xi: &[f64], t0: f64, dt: f64| {
        eval_jacobian(kind, &c4, x0, xi, t0, dt)
    }))
}

/// Build the four-primitive bench registry from a validated config.
pub fn build_bench_registry(cfg: &PlantConfig) -> Result<Registry<PlantState>, BenchError> {
    cfg.validate()?;
    let mut reg = Registry::new(cfg.norm_weights.to_vec());
    for kind in PrimKind::all() {
        reg.register(build_spec(kind, cfg));
    }
    Ok(reg)
}
