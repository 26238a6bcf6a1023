//! Feedback controllers: MLP inference, the analytic goal-seeking expert used
//! as the imitation teacher, and the training loop.

pub mod expert;
pub mod mlp;
pub mod train;

use std::f64::consts::PI;
use std::path::PathBuf;

use thiserror::Error;

use crate::registry::Registry;
use crate::workspace::Bounds;
pub use expert::{Expert, ExpertGains};
pub use mlp::Mlp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("weight file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid training setup: {0}")]
    Setup(String),
}

/// A state-feedback law `u = ξ(x)` (before input projection).
pub trait Controller: Send + Sync {
    fn id(&self) -> &str;
    fn act(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Clone, Debug)]
pub struct ConstantController {
    id: String,
    u: Vec<f64>,
}

impl ConstantController {
    pub fn new(u: Vec<f64>) -> Self {
        ConstantController { id: "constant".into(), u }
    }
}

impl Controller for ConstantController {
    fn id(&self) -> &str {
        &self.id
    }

    fn act(&self, _x: &[f64]) -> Vec<f64> {
        self.u.clone()
    }
}

/// Map an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Input preprocessing shared by training and inference: listed state
/// dimensions are wrapped into `(-π, π]`.
pub fn preprocess(x: &[f64], wrap_dims: &[usize]) -> Vec<f64> {
    let mut v = x.to_vec();
    for &k in wrap_dims {
        v[k] = wrap_angle(v[k]);
    }
    v
}

#[derive(Clone, Debug)]
pub struct MlpController {
    id: String,
    net: Mlp,
    wrap_dims: Vec<usize>,
}

impl MlpController {
    pub fn new(id: impl Into<String>, net: Mlp, wrap_dims: Vec<usize>) -> Self {
        MlpController { id: id.into(), net, wrap_dims }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }
}

impl Controller for MlpController {
    fn id(&self) -> &str {
        &self.id
    }

    fn act(&self, x: &[f64]) -> Vec<f64> {
        self.net.forward(&preprocess(x, &self.wrap_dims))
    }
}

/// Everything a controller constructor may need; each kind reads its part.
#[derive(Clone, Debug)]
pub struct ControllerParams {
    pub id: String,
    pub state_dim: usize,
    pub input_dim: usize,
    pub weights: Option<PathBuf>,
    pub wrap_dims: Vec<usize>,
    /// Goal region box over `goal_dims`.
    pub goal: Option<Bounds>,
    pub goal_dims: Vec<usize>,
    pub input_box: Bounds,
    pub gains: ExpertGains,
}

pub fn controller_registry() -> Registry<dyn Controller, ControllerParams> {
    Registry::<dyn Controller, ControllerParams>::new("controller kind")
        .register("mlp", |p| {
            let path = p.weights.as_ref().ok_or("mlp controller needs a weights path")?;
            let net = Mlp::load(path).map_err(|e| e.to_string())?;
            if net.input_dim() != p.state_dim || net.output_dim() != p.input_dim {
                return Err(format!(
                    "network maps {} -> {}, system needs {} -> {}",
                    net.input_dim(),
                    net.output_dim(),
                    p.state_dim,
                    p.input_dim
                ));
            }
            if p.wrap_dims.iter().any(|&k| k >= p.state_dim) {
                return Err(format!("wrap dims {:?} out of range", p.wrap_dims));
            }
            Ok(Box::new(MlpController::new(p.id.clone(), net, p.wrap_dims.clone())))
        })
        .register("expert", |p| {
            let goal = p.goal.as_ref().ok_or("expert controller needs a goal region")?;
            Ok(Box::new(Expert::toward(p.id.clone(), goal, &p.goal_dims, p.input_box.clone(), p.gains.clone())?))
        })
}
