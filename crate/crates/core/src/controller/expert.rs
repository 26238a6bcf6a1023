//! Analytic goal-seeking steering law for a unicycle, used as the imitation
//! teacher in place of a numerical MPC expert.

use serde::{Deserialize, Serialize};

use super::{wrap_angle, Controller};
use crate::workspace::Bounds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertGains {
    pub k_v: f64,
    pub k_omega: f64,
    /// Inside this distance of the goal point the expert stops.
    pub stop_radius: f64,
}

impl Default for ExpertGains {
    fn default() -> Self {
        ExpertGains { k_v: 0.3, k_omega: 1.0, stop_radius: 1e-6 }
    }
}

/// Heads for `goal` (planar position over state dims 0 and 1, heading in
/// dim 2): `e = wrap(bearing - θ)`, `ω = k_ω e`, `v = k_v ‖Δ‖ max(0, cos e)`,
/// both clamped to the input box.
#[derive(Clone, Debug)]
pub struct Expert {
    id: String,
    goal: [f64; 2],
    input_box: Bounds,
    gains: ExpertGains,
}

impl Expert {
    pub fn new(id: impl Into<String>, goal: [f64; 2], input_box: Bounds, gains: ExpertGains) -> Self {
        Expert { id: id.into(), goal, input_box, gains }
    }

    /// Expert aimed at the center of a planar goal box over dims `[0, 1]`.
    pub fn toward(id: String, goal: &Bounds, dims: &[usize], input_box: Bounds, gains: ExpertGains) -> Result<Self, String> {
        if dims != [0, 1] {
            return Err(format!("expert needs a goal over position dims [0, 1], got {dims:?}"));
        }
        if input_box.dim() != 2 {
            return Err("expert drives a two-input unicycle".into());
        }
        let c = goal.center();
        Ok(Expert::new(id, [c[0], c[1]], input_box, gains))
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }
}

impl Controller for Expert {
    fn id(&self) -> &str {
        &self.id
    }

    fn act(&self, x: &[f64]) -> Vec<f64> {
        let (dx, dy) = (self.goal[0] - x[0], self.goal[1] - x[1]);
        let dist = dx.hypot(dy);
        if dist < self.gains.stop_radius {
            return vec![0.0, 0.0];
        }
        let e = wrap_angle(dy.atan2(dx) - x[2]);
        let v = self.gains.k_v * dist * e.cos().max(0.0);
        let w = self.gains.k_omega * e;
        self.input_box.clamp(&[v, w])
    }
}
