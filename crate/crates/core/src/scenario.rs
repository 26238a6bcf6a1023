//! Scenario files: TOML schema, validation with field paths, and
//! construction of the runtime objects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::train::{DatasetConfig, TrainConfig};
use crate::controller::{controller_registry, Controller, ControllerParams, ExpertGains};
use crate::dynamics::{dynamics_registry, noise_registry, DynamicsParams, System};
use crate::ltl::{self, Formula};
use crate::reach::{propagation_registry, ReachConfig};
use crate::synthesis::{successor_registry, SearchConfig};
use crate::workspace::{Bounds, Region, RegionKind, Workspace};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
    #[error("{0}")]
    Build(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

fn default_dynamics() -> String {
    "unicycle".into()
}

fn default_noise() -> String {
    "uniform".into()
}

fn default_tau() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default = "default_dynamics")]
    pub dynamics: String,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_noise")]
    pub noise: String,
    /// Noise bound V.
    pub noise_bound: f64,
    pub state: BoxSpec,
    pub input: BoxSpec,
    #[serde(default)]
    pub robot_radius: f64,
}

fn default_dims() -> Vec<usize> {
    vec![0, 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub kind: RegionKind,
}

fn default_kind() -> String {
    "mlp".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub id: String,
    /// Region this controller drives to.
    pub region: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Weight file, relative to the scenario file.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub wrap_angle_dims: Vec<usize>,
    #[serde(default)]
    pub gains: ExpertGains,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSpec {
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    /// Teacher used to label the dataset.
    pub expert: ExpertGains,
    /// Held-out evaluation starts and rollout length.
    pub eval_starts: usize,
    pub eval_horizon: usize,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
            expert: ExpertGains::default(),
            eval_starts: 500,
            eval_horizon: 120,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub formula: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSpec,
    /// Initial set 𝒳₀.
    pub initial: BoxSpec,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub controllers: Vec<ControllerSpec>,
    #[serde(default)]
    pub reach: ReachConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub training: TrainingSpec,
}

/// A validated scenario plus the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub base_dir: PathBuf,
    pub formula: Formula,
    pub workspace: Workspace,
    pub initial: Bounds,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    Scenario::new(config, base_dir)
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError { path: path.into(), message: message.into() });
    }

    fn check_box(&mut self, path: &str, b: &BoxSpec, dim: Option<usize>) -> Option<Bounds> {
        if let Some(d) = dim {
            if b.lo.len() != d || b.hi.len() != d {
                self.push(path, format!("expected {d} bounds, got lo {} and hi {}", b.lo.len(), b.hi.len()));
                return None;
            }
        }
        match Bounds::new(b.lo.clone(), b.hi.clone()) {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }
}

impl Scenario {
    /// Validate every field, reporting all problems at once.
    pub fn new(config: ScenarioConfig, base_dir: &Path) -> Result<Self, ScenarioError> {
        let mut err = Errors(Vec::new());
        let c = &config;
        let dyn_reg = dynamics_registry();
        let state_dim = match dyn_reg.create(&c.system.dynamics, &DynamicsParams { tau: c.system.tau, state_dim: c.system.state.lo.len() }) {
            Ok(d) => {
                if d.input_dim() != c.system.input.lo.len() {
                    err.push("system.input", format!("{} takes {} inputs", c.system.dynamics, d.input_dim()));
                }
                Some(d.state_dim())
            }
            Err(e) => {
                err.push("system.dynamics", e.to_string());
                None
            }
        };
        if !(c.system.tau > 0.0 && c.system.tau.is_finite()) {
            err.push("system.tau", "must be positive");
        }
        if let Err(e) = noise_registry().create(&c.system.noise, &c.system.noise_bound) {
            err.push("system.noise", e.to_string());
        }
        let state = err.check_box("system.state", &c.system.state, state_dim);
        let input = err.check_box("system.input", &c.system.input, None);
        let initial = err.check_box("initial", &c.initial, state_dim);
        if let (Some(s), Some(i)) = (&state, &initial) {
            if !s.contains_box(i) {
                err.push("initial", "initial set is not inside the state box");
            }
        }
        let mut regions = Vec::new();
        for (i, r) in c.regions.iter().enumerate() {
            match Region::new(&r.name, r.dims.clone(), r.lo.clone(), r.hi.clone()) {
                Ok(reg) => regions.push(Region { kind: r.kind, ..reg }),
                Err(e) => err.push(format!("regions[{i}]"), e.to_string()),
            }
        }
        let names: BTreeSet<String> = c.regions.iter().map(|r| r.name.clone()).collect();
        let formula = match ltl::parse(&c.formula, &names) {
            Ok(f) => Some(f),
            Err(e) => {
                err.push("formula", e.to_string());
                None
            }
        };
        let mut ids = BTreeSet::new();
        for (i, ctl) in c.controllers.iter().enumerate() {
            let path = format!("controllers[{i}]");
            if !ids.insert(ctl.id.as_str()) {
                err.push(format!("{path}.id"), format!("duplicate controller id `{}`", ctl.id));
            }
            if !names.contains(&ctl.region) {
                err.push(format!("{path}.region"), format!("no region named `{}`", ctl.region));
            }
            if !controller_registry().contains(&ctl.kind) {
                err.push(format!("{path}.kind"), format!("unknown controller kind `{}` (known: {})", ctl.kind, controller_registry().names().join(", ")));
            }
            if ctl.kind == "mlp" && ctl.weights.is_none() {
                err.push(format!("{path}.weights"), "mlp controllers need a weights path");
            }
            if let Some(d) = state_dim {
                if ctl.wrap_angle_dims.iter().any(|&k| k >= d) {
                    err.push(format!("{path}.wrap_angle_dims"), "dimension out of range");
                }
            }
        }
        if let Some(f) = &formula {
            let covered: BTreeSet<&str> = c.controllers.iter().map(|x| x.region.as_str()).collect();
            for atom in f.atoms() {
                let goal = c.regions.iter().any(|r| r.name == atom && r.kind == RegionKind::Goal);
                if goal && !covered.contains(atom.as_str()) {
                    err.push("controllers", format!("no controller drives to goal region `{atom}`"));
                }
            }
        }
        if let Some(d) = state_dim {
            if c.reach.m < d + 1 {
                err.push("reach.m", format!("need at least {} samples", d + 1));
            }
        }
        if !(c.reach.eps >= 0.0 && c.reach.eps.is_finite()) {
            err.push("reach.eps", "must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&c.reach.delta_m) {
            err.push("reach.delta_m", "must lie in [0, 1)");
        }
        if c.reach.horizon_cap == 0 {
            err.push("reach.horizon_cap", "must be at least 1");
        }
        if !propagation_registry().contains(&c.reach.mode) {
            err.push("reach.mode", format!("unknown mode `{}` (known: {})", c.reach.mode, propagation_registry().names().join(", ")));
        }
        if !successor_registry().contains(&c.search.policy) {
            err.push("search.policy", format!("unknown policy `{}` (known: {})", c.search.policy, successor_registry().names().join(", ")));
        }
        let workspace = match (&state, &input) {
            (Some(s), Some(i)) if regions.len() == c.regions.len() => {
                match Workspace::new(s.clone(), i.clone(), regions, c.system.robot_radius) {
                    Ok(w) => Some(w),
                    Err(e) => {
                        err.push("regions", e.to_string());
                        None
                    }
                }
            }
            _ => None,
        };
        if !err.0.is_empty() {
            return Err(ScenarioError::Invalid(err.0));
        }
        Ok(Scenario {
            formula: formula.expect("checked"),
            workspace: workspace.expect("checked"),
            initial: initial.expect("checked"),
            config,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// A fresh closed-loop system, optionally with the noise bound scaled.
    pub fn system(&self, noise_scale: f64) -> Result<System, ScenarioError> {
        let s = &self.config.system;
        let dynamics = dynamics_registry()
            .create(&s.dynamics, &DynamicsParams { tau: s.tau, state_dim: self.workspace.state_box().dim() })
            .map_err(|e| ScenarioError::Build(e.to_string()))?;
        let noise = noise_registry().create(&s.noise, &(s.noise_bound * noise_scale)).map_err(|e| ScenarioError::Build(e.to_string()))?;
        Ok(System::new(dynamics, noise, self.workspace.input_box().clone()))
    }

    pub fn controller_spec(&self, id: &str) -> Option<&ControllerSpec> {
        self.config.controllers.iter().find(|c| c.id == id)
    }

    /// Build one controller, loading weights as needed.
    pub fn controller(&self, id: &str) -> Result<Box<dyn Controller>, ScenarioError> {
        let spec = self.controller_spec(id).ok_or_else(|| ScenarioError::Build(format!("unknown controller `{id}`")))?;
        let region = self.workspace.region(&spec.region).expect("validated");
        let params = ControllerParams {
            id: spec.id.clone(),
            state_dim: self.workspace.state_box().dim(),
            input_dim: self.workspace.input_box().dim(),
            weights: spec.weights.as_ref().map(|p| self.resolve(p)),
            wrap_dims: spec.wrap_angle_dims.clone(),
            goal: Some(region.bounds.clone()),
            goal_dims: region.dims.clone(),
            input_box: self.workspace.input_box().clone(),
            gains: spec.gains.clone(),
        };
        controller_registry().create(&spec.kind, &params).map_err(|e| ScenarioError::Build(format!("controller `{id}`: {e}")))
    }

    /// All controllers keyed by id.
    pub fn controllers(&self) -> Result<BTreeMap<String, Box<dyn Controller>>, ScenarioError> {
        self.config.controllers.iter().map(|c| Ok((c.id.clone(), self.controller(&c.id)?))).collect()
    }

    /// Region name to controller ids, in declaration order.
    pub fn controllers_by_region(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in &self.config.controllers {
            out.entry(c.region.clone()).or_default().push(c.id.clone());
        }
        out
    }
}
