//! Sampling-based reachability with ε-padded convex hulls and single-edge
//! verification against a DFA.
//!
//! At every step the padded hull is turned into the set of symbols its
//! states could emit (every feasible symbol containing the regions the hull
//! lies ε-inside of and contained in the regions it comes within ε of). The
//! DFA states reachable under those symbols are tracked from the edge's
//! source; the edge is verified at the first step where the only possible
//! state is the target.

pub mod sample;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::Dfa;
use crate::controller::Controller;
use crate::dynamics::System;
use crate::geometry::{convex_hull, GeometryError, Hull};
use crate::ltl::Symbol;
use crate::registry::Registry;
use crate::rng::{derive, tag};
use crate::workspace::{Bounds, Region, Workspace};
pub use sample::{propagate, sample_box, sample_padded, Sampled};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("hull at step {t}: {source}")]
    Geometry { t: usize, source: GeometryError },
    #[error("rejection sampling stalled at step {t} and the fallback is disabled")]
    SamplingStalled { t: usize },
    #[error("invalid reach setup: {0}")]
    Setup(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReachConfig {
    /// Samples per step.
    pub m: usize,
    pub eps: f64,
    /// Per-step probability that a padded hull misses the true reachable set.
    pub delta_m: f64,
    pub horizon_cap: usize,
    /// Propagation mode name (see [`propagation_registry`]).
    pub mode: String,
    /// Require the reachable set to stay in the source's self-loop set until
    /// the target step, without touching the target earlier.
    pub strict_stay: bool,
    /// Allow vertex-simplex sampling when rejection stalls.
    pub fallback: bool,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            m: 50_000,
            eps: 0.03,
            delta_m: 0.0004,
            horizon_cap: 200,
            mode: "resample".into(),
            strict_stay: false,
            fallback: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepStatus {
    /// Initial set of the edge.
    Initial,
    /// Still on the way: possibly outside the target.
    Approach,
    /// Certainly in the target state.
    Target,
    /// Touches something the edge may not.
    Violation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachStep {
    pub t: usize,
    pub hull: Hull,
    pub eps: f64,
    pub status: StepStatus,
}

impl ReachStep {
    pub fn inside_region(&self, r: &Region) -> bool {
        hull_inside_region(&self.hull, self.eps, r)
    }

    pub fn avoids_region(&self, r: &Region) -> bool {
        hull_avoids_region(&self.hull, self.eps, r)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.hull.contains_padded(x, self.eps)
    }
}

/// Padded hull lies inside the region: every projected vertex is at least
/// `eps` from every face.
pub fn hull_inside_region(hull: &Hull, eps: f64, r: &Region) -> bool {
    hull.inside_box(&r.dims, &r.bounds.lo, &r.bounds.hi, eps)
}

/// Padded hull misses the region: projected distance strictly above `eps`.
pub fn hull_avoids_region(hull: &Hull, eps: f64, r: &Region) -> bool {
    hull.avoids_box(&r.dims, &r.bounds.lo, &r.bounds.hi, eps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachTube {
    pub controller: String,
    /// Steps `0..=H`; step 0 is the initial set.
    pub steps: Vec<ReachStep>,
    pub m: usize,
    pub delta_m: f64,
    pub non_uniform: bool,
}

impl ReachTube {
    pub fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    /// `(1 - δ_M)^H`.
    pub fn confidence(&self) -> f64 {
        (1.0 - self.delta_m).powi(self.horizon() as i32)
    }

    pub fn last(&self) -> &ReachStep {
        self.steps.last().expect("tube has an initial step")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    AvoidViolation,
    HorizonExhausted,
    LeftDomain,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureReason::AvoidViolation => "avoid-violation",
            FailureReason::HorizonExhausted => "horizon-exhausted",
            FailureReason::LeftDomain => "left-domain",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Safe { horizon: usize },
    Unsafe { reason: FailureReason, t: usize },
}

#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub verdict: Verdict,
    pub tube: ReachTube,
    /// States of the last step, carried into the next edge by particle mode.
    pub particles: Arc<Vec<Vec<f64>>>,
}

/// Where an edge starts.
#[derive(Clone, Debug)]
pub enum InitialSet {
    Box(Bounds),
    /// Final step of the previous edge with the particles that produced it.
    Tube { step: ReachStep, particles: Arc<Vec<Vec<f64>>> },
}

impl InitialSet {
    /// Step 0 of a tube starting here.
    pub fn initial_step(&self) -> Result<ReachStep, ReachError> {
        match self {
            InitialSet::Box(b) => {
                let d = b.dim();
                let corners: Vec<Vec<f64>> = (0..1usize << d)
                    .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { b.hi[k] } else { b.lo[k] }).collect())
                    .collect();
                let hull = convex_hull(&corners).map_err(|source| ReachError::Geometry { t: 0, source })?;
                Ok(ReachStep { t: 0, hull, eps: 0.0, status: StepStatus::Initial })
            }
            InitialSet::Tube { step, .. } => Ok(ReachStep { t: 0, status: StepStatus::Initial, ..step.clone() }),
        }
    }

    /// `n` uniform samples from the set.
    pub fn sample(&self, n: usize, key: u64, fallback: bool) -> Option<Sampled> {
        match self {
            InitialSet::Box(b) => Some(Sampled { points: sample_box(b, n, key), non_uniform: false }),
            InitialSet::Tube { step, .. } => sample_padded(&step.hull, step.eps, n, key, fallback),
        }
    }
}

/// What one edge check needs to know about the automaton and the map.
#[derive(Clone, Copy)]
pub struct EdgeContext<'a> {
    pub dfa: &'a Dfa,
    pub source: usize,
    pub target: usize,
    pub workspace: &'a Workspace,
    pub feasible: &'a [Symbol],
}

/// Feasible symbols some state of the padded hull could carry.
pub fn possible_symbols(hull: &Hull, eps: f64, ws: &Workspace, feasible: &[Symbol]) -> Vec<Symbol> {
    let mut touched = BTreeSet::new();
    let mut inside = BTreeSet::new();
    for r in ws.regions() {
        if !hull_avoids_region(hull, eps, r) {
            touched.insert(r.name.as_str());
            if hull_inside_region(hull, eps, r) {
                inside.insert(r.name.as_str());
            }
        }
    }
    feasible
        .iter()
        .filter(|s| s.names().all(|n| touched.contains(n)) && inside.iter().all(|n| s.contains(n)))
        .cloned()
        .collect()
}

/// DFA states reachable from `q` on one symbol some state of the padded
/// hull could carry. `None` is the rejecting sink.
pub fn states_after(dfa: &Dfa, q: usize, hull: &Hull, eps: f64, ws: &Workspace, feasible: &[Symbol]) -> BTreeSet<Option<usize>> {
    possible_symbols(hull, eps, ws, feasible).iter().map(|s| dfa.step(q, s)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Continue,
    Reached,
    Failed(FailureReason),
}

/// Incremental stay/reach check over a sequence of padded hulls. `None`
/// stands for the rejecting sink.
pub struct StayCheck<'a> {
    ctx: EdgeContext<'a>,
    strict: bool,
    states: BTreeSet<Option<usize>>,
}

impl<'a> StayCheck<'a> {
    pub fn new(ctx: EdgeContext<'a>, strict: bool) -> Self {
        StayCheck { ctx, strict, states: BTreeSet::from([Some(ctx.source)]) }
    }

    /// DFA states possible after the hulls seen so far.
    pub fn states(&self) -> &BTreeSet<Option<usize>> {
        &self.states
    }

    pub fn advance(&mut self, hull: &Hull, eps: f64) -> CheckResult {
        let state_box = self.ctx.workspace.state_box();
        if hull.vertices().iter().any(|v| !state_box.contains(v)) {
            return CheckResult::Failed(FailureReason::LeftDomain);
        }
        let symbols = possible_symbols(hull, eps, self.ctx.workspace, self.ctx.feasible);
        let mut next = BTreeSet::new();
        for s in &self.states {
            match s {
                Some(q) => next.extend(symbols.iter().map(|sig| self.ctx.dfa.step(*q, sig))),
                None => {
                    next.insert(None);
                }
            }
        }
        self.states = next;
        let (src, dst) = (Some(self.ctx.source), Some(self.ctx.target));
        if self.states.len() == 1 && self.states.contains(&dst) {
            CheckResult::Reached
        } else if self.states.iter().all(|s| *s == src || (!self.strict && *s == dst)) {
            CheckResult::Continue
        } else {
            CheckResult::Failed(FailureReason::AvoidViolation)
        }
    }
}

/// Re-run the stay/reach check over stored steps `1..=H`; returns the
/// verdict they imply.
pub fn check_steps(ctx: EdgeContext, strict: bool, steps: &[ReachStep]) -> Verdict {
    let mut check = StayCheck::new(ctx, strict);
    for s in steps.iter().filter(|s| s.t > 0) {
        match check.advance(&s.hull, s.eps) {
            CheckResult::Continue => {}
            CheckResult::Reached => return Verdict::Safe { horizon: s.t },
            CheckResult::Failed(reason) => return Verdict::Unsafe { reason, t: s.t },
        }
    }
    Verdict::Unsafe { reason: FailureReason::HorizonExhausted, t: steps.last().map_or(0, |s| s.t) }
}

/// How the points pushed through step `t` are chosen from step `t - 1`.
pub trait Propagation: Send + Sync {
    fn name(&self) -> &'static str;

    fn seeds(&self, prev: &ReachStep, particles: &[Vec<f64>], m: usize, key: u64, fallback: bool) -> Option<Sampled>;

    /// Per-step fraction of fresh trajectories inside the padded hulls of
    /// `tube`, starting from `start`, and the trajectories' last states.
    fn coverage(&self, start: Vec<Vec<f64>>, tube: &ReachTube, sys: &System, ctrl: &dyn Controller, key: u64) -> (Vec<f64>, Vec<Vec<f64>>);

    /// Holdout starts for the segment after one ending in `last`, given the
    /// holdout states `carried` there.
    fn next_start(&self, last: &ReachStep, carried: Vec<Vec<f64>>, key: u64) -> Vec<Vec<f64>>;
}

fn fraction_inside(step: &ReachStep, pts: &[Vec<f64>]) -> f64 {
    use rayon::prelude::*;
    pts.par_iter().filter(|p| step.contains(p)).count() as f64 / pts.len() as f64
}

/// Fresh uniform samples from the padded previous hull at every step.
pub struct Resample;

impl Propagation for Resample {
    fn name(&self) -> &'static str {
        "resample"
    }

    fn seeds(&self, prev: &ReachStep, _particles: &[Vec<f64>], m: usize, key: u64, fallback: bool) -> Option<Sampled> {
        sample_padded(&prev.hull, prev.eps, m, key, fallback)
    }

    fn coverage(&self, start: Vec<Vec<f64>>, tube: &ReachTube, sys: &System, ctrl: &dyn Controller, key: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = start.len();
        let mut seeds = start;
        let mut rates = Vec::new();
        for t in 1..tube.steps.len() {
            if t > 1 {
                let prev = &tube.steps[t - 1];
                seeds = sample_padded(&prev.hull, prev.eps, n, derive(key, &[tag("seed"), t as u64]), true)
                    .expect("fallback enabled")
                    .points;
            }
            seeds = propagate(&seeds, sys, ctrl, derive(key, &[tag("noise"), t as u64]));
            rates.push(fraction_inside(&tube.steps[t], &seeds));
        }
        (rates, seeds)
    }

    fn next_start(&self, last: &ReachStep, carried: Vec<Vec<f64>>, key: u64) -> Vec<Vec<f64>> {
        sample_padded(&last.hull, last.eps, carried.len(), key, true).expect("fallback enabled").points
    }
}

/// The same particles are propagated through every step.
pub struct Particle;

impl Propagation for Particle {
    fn name(&self) -> &'static str {
        "particle"
    }

    fn seeds(&self, _prev: &ReachStep, particles: &[Vec<f64>], _m: usize, _key: u64, _fallback: bool) -> Option<Sampled> {
        Some(Sampled { points: particles.to_vec(), non_uniform: false })
    }

    fn coverage(&self, start: Vec<Vec<f64>>, tube: &ReachTube, sys: &System, ctrl: &dyn Controller, key: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut pts = start;
        let mut rates = Vec::new();
        for t in 1..tube.steps.len() {
            pts = propagate(&pts, sys, ctrl, derive(key, &[tag("noise"), t as u64]));
            rates.push(fraction_inside(&tube.steps[t], &pts));
        }
        (rates, pts)
    }

    fn next_start(&self, _last: &ReachStep, carried: Vec<Vec<f64>>, _key: u64) -> Vec<Vec<f64>> {
        carried
    }
}

pub fn propagation_registry() -> Registry<dyn Propagation, ()> {
    Registry::<dyn Propagation, ()>::new("reach mode")
        .register("resample", |_| Ok(Box::new(Resample)))
        .register("particle", |_| Ok(Box::new(Particle)))
}

/// Step-by-step tube construction shared by [`verify_edge`] and
/// [`compute_tube`].
pub struct Propagator<'a> {
    sys: &'a System,
    ctrl: &'a dyn Controller,
    cfg: &'a ReachConfig,
    seed: u64,
    mode: Box<dyn Propagation>,
    from_box: bool,
    steps: Vec<ReachStep>,
    particles: Arc<Vec<Vec<f64>>>,
    non_uniform: bool,
}

impl<'a> Propagator<'a> {
    pub fn new(init: &InitialSet, sys: &'a System, ctrl: &'a dyn Controller, cfg: &'a ReachConfig, seed: u64) -> Result<Self, ReachError> {
        let d = init.initial_step()?.hull.dim();
        if cfg.m < d + 1 {
            return Err(ReachError::Setup(format!("need at least {} samples per step, got {}", d + 1, cfg.m)));
        }
        if !(cfg.eps >= 0.0) || !(0.0..1.0).contains(&cfg.delta_m) {
            return Err(ReachError::Setup("eps must be >= 0 and delta_m in [0, 1)".into()));
        }
        let mode = propagation_registry().create(&cfg.mode, &()).map_err(|e| ReachError::Setup(e.to_string()))?;
        let particles = match init {
            InitialSet::Box(b) => Arc::new(sample_box(b, cfg.m, derive(seed, &[tag("sample"), 0]))),
            InitialSet::Tube { particles, .. } => particles.clone(),
        };
        Ok(Propagator {
            sys,
            ctrl,
            cfg,
            seed,
            mode,
            from_box: matches!(init, InitialSet::Box(_)),
            steps: vec![init.initial_step()?],
            particles,
            non_uniform: false,
        })
    }

    /// Hull of the next step; call [`Propagator::push`] to record it.
    pub fn advance(&mut self) -> Result<Hull, ReachError> {
        let t = self.steps.len();
        let seeds: Vec<Vec<f64>> = if t == 1 && self.from_box {
            self.particles.to_vec()
        } else {
            let key = derive(self.seed, &[tag("sample"), t as u64]);
            let s = self
                .mode
                .seeds(&self.steps[t - 1], &self.particles, self.cfg.m, key, self.cfg.fallback)
                .ok_or(ReachError::SamplingStalled { t })?;
            self.non_uniform |= s.non_uniform;
            s.points
        };
        let next = propagate(&seeds, self.sys, self.ctrl, derive(self.seed, &[tag("noise"), t as u64]));
        let hull = convex_hull(&next).map_err(|source| ReachError::Geometry { t, source })?;
        self.particles = Arc::new(next);
        Ok(hull)
    }

    pub fn push(&mut self, hull: Hull, status: StepStatus) {
        let t = self.steps.len();
        self.steps.push(ReachStep { t, hull, eps: self.cfg.eps, status });
    }

    pub fn finish(self) -> (ReachTube, Arc<Vec<Vec<f64>>>) {
        let tube = ReachTube {
            controller: self.ctrl.id().to_string(),
            steps: self.steps,
            m: self.cfg.m,
            delta_m: self.cfg.delta_m,
            non_uniform: self.non_uniform,
        };
        (tube, self.particles)
    }
}

/// Verify one DFA edge under one controller. `seed` keys every random
/// draw of this call.
pub fn verify_edge(
    init: &InitialSet,
    ctx: EdgeContext,
    sys: &System,
    ctrl: &dyn Controller,
    cfg: &ReachConfig,
    seed: u64,
) -> Result<VerifyOutcome, ReachError> {
    let mut prop = Propagator::new(init, sys, ctrl, cfg, seed)?;
    let mut check = StayCheck::new(ctx, cfg.strict_stay);
    let mut verdict = Verdict::Unsafe { reason: FailureReason::HorizonExhausted, t: cfg.horizon_cap };
    for t in 1..=cfg.horizon_cap {
        let hull = prop.advance()?;
        let result = check.advance(&hull, cfg.eps);
        let status = match result {
            CheckResult::Continue => StepStatus::Approach,
            CheckResult::Reached => StepStatus::Target,
            CheckResult::Failed(_) => StepStatus::Violation,
        };
        log::debug!("step {t}: {} vertices, states {:?}, {status:?}", hull.vertices().len(), check.states());
        prop.push(hull, status);
        match result {
            CheckResult::Continue => {}
            CheckResult::Reached => {
                verdict = Verdict::Safe { horizon: t };
                break;
            }
            CheckResult::Failed(reason) => {
                verdict = Verdict::Unsafe { reason, t };
                break;
            }
        }
    }
    let (tube, particles) = prop.finish();
    Ok(VerifyOutcome { verdict, tube, particles })
}

/// Plain tube of `steps` steps without any DFA checks.
pub fn compute_tube(
    init: &InitialSet,
    sys: &System,
    ctrl: &dyn Controller,
    cfg: &ReachConfig,
    steps: usize,
    seed: u64,
) -> Result<ReachTube, ReachError> {
    let mut prop = Propagator::new(init, sys, ctrl, cfg, seed)?;
    for _ in 0..steps {
        let hull = prop.advance()?;
        prop.push(hull, StepStatus::Approach);
    }
    Ok(prop.finish().0)
}

/// Empirical per-step containment of `holdout` fresh trajectories in the
/// padded hulls of `tube` (steps 1..=H).
pub fn estimate_delta(
    init: &InitialSet,
    tube: &ReachTube,
    sys: &System,
    ctrl: &dyn Controller,
    mode: &str,
    holdout: usize,
    seed: u64,
) -> Result<Vec<f64>, ReachError> {
    if holdout == 0 {
        return Err(ReachError::Setup("holdout size must be positive".into()));
    }
    let mode = propagation_registry().create(mode, &()).map_err(|e| ReachError::Setup(e.to_string()))?;
    let start = init
        .sample(holdout, derive(seed, &[tag("holdout-start")]), true)
        .ok_or(ReachError::SamplingStalled { t: 0 })?
        .points;
    Ok(mode.coverage(start, tube, sys, ctrl, derive(seed, &[tag("holdout")])).0)
}

/// Per-segment coverage of a chain of tubes, the first starting from
/// `init`. Holdout trajectories cross segment boundaries the way the
/// propagation mode's particles do.
pub fn estimate_chain_delta(
    init: &InitialSet,
    segments: &[(&ReachTube, &dyn Controller)],
    sys: &System,
    mode: &str,
    holdout: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ReachError> {
    if holdout == 0 {
        return Err(ReachError::Setup("holdout size must be positive".into()));
    }
    let mode = propagation_registry().create(mode, &()).map_err(|e| ReachError::Setup(e.to_string()))?;
    let mut start = init
        .sample(holdout, derive(seed, &[tag("holdout-start")]), true)
        .ok_or(ReachError::SamplingStalled { t: 0 })?
        .points;
    let mut out = Vec::new();
    for (k, (tube, ctrl)) in segments.iter().enumerate() {
        if k > 0 {
            start = mode.next_start(segments[k - 1].0.last(), start, derive(seed, &[tag("holdout-start"), k as u64]));
        }
        let (rates, last) = mode.coverage(start, tube, sys, *ctrl, derive(seed, &[tag("holdout"), k as u64]));
        out.push(rates);
        start = last;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{translate, Alphabet};
    use crate::controller::ConstantController;
    use crate::dynamics::{SingleIntegrator, UniformNoise};
    use crate::ltl::parse;

    struct Fixture {
        ws: Workspace,
        dfa: Dfa,
        feasible: Vec<Symbol>,
        sys: System,
    }

    impl Fixture {
        fn ctx(&self) -> EdgeContext<'_> {
            let q0 = self.dfa.initial();
            EdgeContext {
                dfa: &self.dfa,
                source: q0,
                target: self.dfa.accepting().unwrap(),
                workspace: &self.ws,
                feasible: &self.feasible,
            }
        }
    }

    fn fixture(regions: Vec<Region>, formula: &str, v: f64) -> Fixture {
        let ws = Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap(),
            Bounds::new(vec![-0.2, -0.2], vec![0.2, 0.2]).unwrap(),
            regions,
            0.0,
        )
        .unwrap();
        let f = parse(formula, &ws.region_names()).unwrap();
        let dfa = translate(&f, &Alphabet::powerset(f.atoms()).unwrap()).unwrap();
        let feasible = ws.feasible_symbols();
        let sys = System::new(
            Box::new(SingleIntegrator { dim: 2, tau: 1.0 }),
            Box::new(UniformNoise { bound: v }),
            ws.input_box().clone(),
        );
        Fixture { ws, dfa, feasible, sys }
    }

    fn goal() -> Region {
        Region::new("a", vec![0, 1], vec![2.0, 0.0], vec![3.0, 2.0]).unwrap()
    }

    fn cfg(eps: f64) -> ReachConfig {
        // shared particles: resampling a padded hull grows it by eps per step,
        // which a constant controller never contracts
        ReachConfig { m: 400, eps, horizon_cap: 30, mode: "particle".into(), ..ReachConfig::default() }
    }

    fn start() -> InitialSet {
        InitialSet::Box(Bounds::new(vec![0.5, 0.9], vec![0.6, 1.0]).unwrap())
    }

    #[test]
    fn inside_and_avoid_predicates() {
        let sq = convex_hull(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let big = Region::new("r", vec![0, 1], vec![-1.0, -1.0], vec![2.0, 2.0]).unwrap();
        assert!(hull_inside_region(&sq, 0.1, &big));
        let flush = Region::new("r", vec![0, 1], vec![0.0, -1.0], vec![2.0, 2.0]).unwrap();
        assert!(!hull_inside_region(&sq, 0.1, &flush));
        assert!(hull_inside_region(&sq, 0.0, &flush));
        let right = Region::new("r", vec![0, 1], vec![2.0, 0.0], vec![3.0, 1.0]).unwrap();
        assert!(hull_avoids_region(&sq, 0.5, &right));
        assert!(!hull_avoids_region(&sq, 1.0, &right));
    }

    #[test]
    fn reaches_goal_ahead() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        let out = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &cfg(0.05), 1).unwrap();
        assert_eq!(out.verdict, Verdict::Safe { horizon: 8 });
        assert_eq!(out.tube.horizon(), 8);
        assert_eq!(out.tube.last().status, StepStatus::Target);
        assert!(out.tube.last().inside_region(&goal()));
        // the step before touches the goal without being inside it
        assert_eq!(out.tube.steps[7].status, StepStatus::Approach);
        assert!(!out.tube.steps[7].avoids_region(&goal()));
        assert_eq!(check_steps(fx.ctx(), false, &out.tube.steps), out.verdict);
    }

    #[test]
    fn strict_stay_rejects_early_contact() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        let c = ReachConfig { strict_stay: true, ..cfg(0.05) };
        let out = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &c, 1).unwrap();
        assert_eq!(out.verdict, Verdict::Unsafe { reason: FailureReason::AvoidViolation, t: 7 });
    }

    #[test]
    fn obstacle_in_the_corridor() {
        let wall = Region::new("b", vec![0, 1], vec![1.0, 0.5], vec![1.5, 1.5]).unwrap();
        let fx = fixture(vec![goal(), wall.clone()], "!b U a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        let out = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &cfg(0.05), 1).unwrap();
        let Verdict::Unsafe { reason: FailureReason::AvoidViolation, t } = out.verdict else { panic!("{:?}", out.verdict) };
        assert!(!out.tube.steps[t].avoids_region(&wall));
        assert!(out.tube.steps[..t].iter().all(|s| s.avoids_region(&wall)));
    }

    #[test]
    fn already_inside_target() {
        let fx = fixture(vec![goal()], "F a", 0.0);
        let init = InitialSet::Box(Bounds::new(vec![2.4, 0.9], vec![2.5, 1.0]).unwrap());
        let out = verify_edge(&init, fx.ctx(), &fx.sys, &ConstantController::new(vec![0.0, 0.0]), &cfg(0.05), 1).unwrap();
        assert_eq!(out.verdict, Verdict::Safe { horizon: 1 });
    }

    #[test]
    fn horizon_and_domain_failures() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let idle = verify_edge(&start(), fx.ctx(), &fx.sys, &ConstantController::new(vec![0.0, 0.0]), &cfg(0.05), 1).unwrap();
        assert_eq!(idle.verdict, Verdict::Unsafe { reason: FailureReason::HorizonExhausted, t: 30 });
        let away = verify_edge(&start(), fx.ctx(), &fx.sys, &ConstantController::new(vec![-0.2, 0.0]), &cfg(0.05), 1).unwrap();
        assert_eq!(away.verdict, Verdict::Unsafe { reason: FailureReason::LeftDomain, t: 3 });
    }

    #[test]
    fn seeded_and_mode_independent_verdicts() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        let a = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &cfg(0.05), 9).unwrap();
        let b = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &cfg(0.05), 9).unwrap();
        assert_eq!(a.tube.steps, b.tube.steps);
        let r = ReachConfig { mode: "resample".into(), ..cfg(0.05) };
        let c = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &r, 9).unwrap();
        assert!(matches!(c.verdict, Verdict::Safe { .. } | Verdict::Unsafe { .. }));
        // each resampled step is at least eps wider than the last
        let width = |s: &ReachStep| {
            let (lo, hi) = s.hull.bounding_box();
            hi[1] - lo[1]
        };
        let h = c.tube.horizon();
        assert!(width(c.tube.last()) > width(&c.tube.steps[1]) + (h - 1) as f64 * 0.05);
        assert!(verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &ReachConfig { mode: "zonotope".into(), ..cfg(0.05) }, 9).is_err());
    }

    #[test]
    fn chained_edge_starts_from_previous_tube() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        let first = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &cfg(0.05), 1).unwrap();
        let init = InitialSet::Tube { step: first.tube.last().clone(), particles: first.particles.clone() };
        // already in the goal: a second application is verified at once
        let again = verify_edge(&init, fx.ctx(), &fx.sys, &ConstantController::new(vec![0.0, 0.0]), &cfg(0.05), 2).unwrap();
        assert_eq!(again.verdict, Verdict::Safe { horizon: 1 });
        assert_eq!(again.tube.steps[0].hull, first.tube.last().hull);
    }

    #[test]
    fn coverage_and_confidence() {
        let fx = fixture(vec![goal()], "F a", 0.001);
        let ctrl = ConstantController::new(vec![0.2, 0.0]);
        for mode in ["resample", "particle"] {
            let c = ReachConfig { mode: mode.into(), horizon_cap: 5, ..cfg(1.0) };
            let out = verify_edge(&start(), fx.ctx(), &fx.sys, &ctrl, &c, 1).unwrap();
            let rates = estimate_delta(&start(), &out.tube, &fx.sys, &ctrl, mode, 1000, 3).unwrap();
            assert_eq!(rates.len(), out.tube.horizon());
            assert!(rates.iter().all(|&r| r == 1.0));
            let h = out.tube.horizon() as i32;
            assert!((out.tube.confidence() - 0.9996f64.powi(h)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_respects_membership() {
        let hull = convex_hull(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = sample_padded(&hull, 0.1, 3000, 5, false).unwrap();
        assert!(!s.non_uniform);
        assert!(s.points.iter().all(|p| hull.distance_to_point(p) <= 0.1));
        assert!(s.points.iter().any(|p| p[0] + p[1] > 1.0));
        assert_eq!(sample_padded(&hull, 0.1, 1, 5, false).unwrap(), sample_padded(&hull, 0.1, 1, 5, false).unwrap());
        // a segment has no volume: rejection stalls
        let seg = convex_hull(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(sample_padded(&seg, 0.0, 10, 5, false).is_none());
        assert!(sample_padded(&seg, 0.0, 10, 5, true).unwrap().non_uniform);
    }
}
