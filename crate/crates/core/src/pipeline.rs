//! End-to-end runs behind the command-line tool: translate, train, verify,
//! simulate and single-controller reach.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{prune_infeasible, translate, Alphabet, AutomatonError, Dfa, DfaDump, PruneWarning, PrunedEdge};
use crate::controller::train::{controller_accuracy, generate_dataset, sample_starts, train_imitation, Split};
use crate::controller::{Controller, ControllerError, Expert};
use crate::dynamics::System;
use crate::export::{export_svg, write_tube_csv, ExportError, RegionRole};
use crate::ltl::{self, Symbol};
use crate::reach::{compute_tube, estimate_chain_delta, states_after, verify_edge, EdgeContext, InitialSet, ReachError, ReachTube, Verdict};
use crate::rng::{derive, stream, tag};
use crate::scenario::{Scenario, ScenarioConfig, ScenarioError};
use crate::synthesis::{
    preprocess_from, reach_dfs, replay_certificate, strategy_probability, Attempt, AttemptRecord, CertificateError, EdgeKey, EdgeOutcome,
    EdgeVerifier, Strategy, SynthesisError,
};
use crate::workspace::Workspace;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Formula(#[from] ltl::LtlError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("certificate replay failed: {0}")]
    Certificate(#[from] CertificateError),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad strategy file: {0}")]
    Strategy(String),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

/// Formula and geometry turned into the automaton the search runs on.
pub struct Translation {
    /// Translation over every truth assignment of the formula's atoms.
    pub dfa: Dfa,
    /// Edges no geometrically feasible symbol can take removed.
    pub pruned: Dfa,
    pub removed: Vec<PrunedEdge>,
    pub warnings: Vec<PruneWarning>,
}

pub fn run_translate(formula: &ltl::Formula, workspace: &Workspace) -> Result<Translation, PipelineError> {
    let dfa = translate(formula, &Alphabet::powerset(formula.atoms())?)?;
    let p = prune_infeasible(&dfa, workspace);
    Ok(Translation { dfa, pruned: p.dfa, removed: p.removed, warnings: p.warnings })
}

#[derive(Debug, Serialize)]
pub struct TranslateReport {
    pub formula: String,
    pub dfa: DfaDump,
    pub pruned: DfaDump,
    pub removed: Vec<PrunedEdge>,
    pub warnings: Vec<PruneWarning>,
}

/// Translate and write `dfa.dot`, `dfa_pruned.dot` and `dfa.json` into `out`.
pub fn write_translation(formula: &ltl::Formula, t: &Translation, out: &Path) -> Result<TranslateReport, PipelineError> {
    create_dir(out)?;
    let dot = out.join("dfa.dot");
    std::fs::write(&dot, t.dfa.to_dot()).map_err(io_err(&dot))?;
    let dot = out.join("dfa_pruned.dot");
    std::fs::write(&dot, t.pruned.to_dot()).map_err(io_err(&dot))?;
    let report = TranslateReport {
        formula: formula.to_string(),
        dfa: t.dfa.dump(),
        pruned: t.pruned.dump(),
        removed: t.removed.clone(),
        warnings: t.warnings.clone(),
    };
    write_json(&report, &out.join("dfa.json"))?;
    Ok(report)
}

/// Runs reachability for one DFA edge per [`EdgeVerifier::verify`] call.
pub struct ReachVerifier<'a> {
    pub dfa: &'a Dfa,
    pub workspace: &'a Workspace,
    pub feasible: &'a [Symbol],
    pub system: &'a System,
    pub controllers: &'a BTreeMap<String, Box<dyn Controller>>,
    pub by_region: BTreeMap<String, Vec<String>>,
    pub config: &'a crate::reach::ReachConfig,
    pub seed: u64,
}

impl ReachVerifier<'_> {
    /// Seed of one edge check; independent of search order.
    pub fn edge_seed(&self, source_node: &str, target_node: &str, controller: &str) -> u64 {
        derive(self.seed, &[tag("edge"), tag(source_node), tag(target_node), tag(controller)])
    }
}

impl EdgeVerifier for ReachVerifier<'_> {
    type Set = InitialSet;
    type Tube = ReachTube;

    fn controllers(&self, source: usize, target: usize) -> Vec<String> {
        self.workspace
            .edge_spec(self.dfa, source, target, &self.by_region)
            .map(|e| e.controllers())
            .unwrap_or_default()
    }

    fn verify(&self, edge: EdgeKey<'_>, controller: &str, init: &InitialSet) -> Attempt<InitialSet, ReachTube> {
        let Some(ctrl) = self.controllers.get(controller) else {
            return Attempt { outcome: EdgeOutcome::Error { message: format!("unknown controller `{controller}`") }, next: None, tube: None };
        };
        let ctx = EdgeContext { dfa: self.dfa, source: edge.source, target: edge.target, workspace: self.workspace, feasible: self.feasible };
        let seed = self.edge_seed(edge.source_node, edge.target_node, controller);
        match verify_edge(init, ctx, self.system, ctrl.as_ref(), self.config, seed) {
            Ok(out) => match out.verdict {
                Verdict::Safe { horizon } => Attempt {
                    outcome: EdgeOutcome::Safe { horizon },
                    next: Some(InitialSet::Tube { step: out.tube.last().clone(), particles: out.particles }),
                    tube: Some(out.tube),
                },
                Verdict::Unsafe { reason, t } => Attempt { outcome: EdgeOutcome::Unsafe { reason, t }, next: None, tube: Some(out.tube) },
            },
            Err(e) => Attempt { outcome: EdgeOutcome::Error { message: e.to_string() }, next: None, tube: None },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentReport {
    pub source: String,
    pub target: String,
    pub dfa_source: String,
    pub dfa_target: String,
    pub controller: String,
    pub horizon: usize,
    pub tube_csv: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategyReport {
    pub segments: Vec<SegmentReport>,
    pub dfa_path: Vec<String>,
    pub total_horizon: usize,
    pub delta_m: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptReport {
    #[serde(flatten)]
    pub record: AttemptRecord,
    pub tube_csv: Option<String>,
    pub svg: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DfaSummary {
    pub states: usize,
    /// Non-self-loop edges before geometric pruning.
    pub transitions: usize,
    /// Non-self-loop edges after geometric pruning.
    pub feasible_transitions: usize,
    pub pruned: Vec<PrunedEdge>,
    pub warnings: Vec<PruneWarning>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub seed: u64,
    pub verdict: bool,
    /// Why the verdict is false when no edge check explains it.
    pub failure: Option<String>,
    pub dfa: DfaSummary,
    /// DFA states the initial set can be in after its first label; `dead`
    /// is the rejecting sink.
    pub initial_states: Vec<String>,
    pub strategy: Option<StrategyReport>,
    pub attempts: Vec<AttemptReport>,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub translate_s: f64,
    pub search_s: f64,
    pub export_s: f64,
}

pub struct VerifyRun {
    pub report: VerificationReport,
    pub strategy: Option<Strategy<ReachTube>>,
    /// Tube of every attempt, aligned with `report.attempts`.
    pub tubes: Vec<Option<ReachTube>>,
    pub translation: Translation,
    pub timings: Timings,
}

/// Full verification: translate, prune, locate the initial DFA state,
/// expand, search, and replay the certificate of any strategy found. With
/// `out`, writes `report.json`, `timings.json`, the DFA, tube CSVs and SVGs.
pub fn run_verify(scenario: &Scenario, out: Option<&Path>) -> Result<VerifyRun, PipelineError> {
    let cfg = &scenario.config;
    let ws = &scenario.workspace;
    let clock = Instant::now();
    let translation = run_translate(&scenario.formula, ws)?;
    let dfa = &translation.pruned;
    let feasible = ws.feasible_symbols();
    let mut timings = Timings { translate_s: clock.elapsed().as_secs_f64(), ..Timings::default() };

    let clock = Instant::now();
    let x0 = InitialSet::Box(scenario.initial.clone());
    let x0_step = x0.initial_step()?;
    let start = states_after(dfa, dfa.initial(), &x0_step.hull, 0.0, ws, &feasible);
    let initial_states: Vec<String> = start.iter().map(|q| q.map_or("dead".to_string(), |q| dfa.name(q).to_string())).collect();
    let system = scenario.system(1.0)?;
    let controllers = scenario.controllers()?;
    let verifier = ReachVerifier {
        dfa,
        workspace: ws,
        feasible: &feasible,
        system: &system,
        controllers: &controllers,
        by_region: scenario.controllers_by_region(),
        config: &cfg.reach,
        seed: cfg.seed,
    };
    let (mut strategy, mut attempts, mut failure) = (None, Vec::new(), None);
    match (start.len(), start.first()) {
        (1, Some(Some(q))) => {
            let tree = preprocess_from(dfa, *q)?;
            let outcome = reach_dfs(&tree, &verifier, x0, &cfg.search, cfg.seed)?;
            if let Some(s) = &outcome.strategy {
                replay_certificate(s, dfa, ws, &feasible, &x0_step, cfg.reach.strict_stay)?;
            } else if outcome.attempts.is_empty() {
                failure = Some(format!("no path from {} to the accepting state survives pruning", dfa.name(*q)));
            }
            strategy = outcome.strategy;
            attempts = outcome.attempts;
        }
        _ => failure = Some(format!("initial set maps to several DFA states: {}", initial_states.join(", "))),
    }
    timings.search_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let names: Vec<String> = attempts.iter().enumerate().map(|(i, (r, _))| attempt_stem(i, r)).collect();
    let has_tube: Vec<bool> = attempts.iter().map(|(_, t)| t.is_some()).collect();
    let attempt_reports: Vec<AttemptReport> = attempts
        .iter()
        .zip(&names)
        .map(|((r, t), stem)| AttemptReport {
            record: r.clone(),
            tube_csv: t.as_ref().map(|_| format!("tube_{stem}.csv")),
            svg: t.as_ref().map(|_| format!("reach_{stem}.svg")),
        })
        .collect();
    let strategy_report = strategy.as_ref().map(|s: &Strategy<ReachTube>| {
        let segments = s
            .segments
            .iter()
            .map(|seg| {
                // the successful attempt of a segment is the last safe one on its tree edge
                let i = attempts.iter().zip(&has_tube).rposition(|((r, _), &t)| {
                    t && r.source == seg.source && r.target == seg.target && r.controller.as_deref() == Some(seg.controller.as_str()) && r.outcome.is_safe()
                });
                SegmentReport {
                    source: seg.source.clone(),
                    target: seg.target.clone(),
                    dfa_source: seg.dfa_source.clone(),
                    dfa_target: seg.dfa_target.clone(),
                    controller: seg.controller.clone(),
                    horizon: seg.horizon,
                    tube_csv: i.map(|i| format!("tube_{}.csv", names[i])),
                }
            })
            .collect();
        StrategyReport {
            segments,
            dfa_path: s.dfa_path.clone(),
            total_horizon: s.total_horizon(),
            delta_m: cfg.reach.delta_m,
            probability: s.probability(cfg.reach.delta_m),
        }
    });
    let report = VerificationReport {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        verdict: strategy.is_some(),
        failure,
        dfa: DfaSummary {
            states: translation.dfa.states().len(),
            transitions: translation.dfa.transition_count(),
            feasible_transitions: dfa.transition_count(),
            pruned: translation.removed.clone(),
            warnings: translation.warnings.clone(),
        },
        initial_states,
        strategy: strategy_report,
        attempts: attempt_reports,
        config: cfg.clone(),
    };
    let tubes: Vec<Option<ReachTube>> = attempts.into_iter().map(|(_, t)| t).collect();
    let mut run = VerifyRun { report, strategy, tubes, translation, timings };
    if let Some(dir) = out {
        write_verify(&run, scenario, dir)?;
        run.timings.export_s = clock.elapsed().as_secs_f64();
        write_json(&run.timings, &dir.join("timings.json"))?;
    }
    Ok(run)
}

fn attempt_stem(i: usize, r: &AttemptRecord) -> String {
    format!("{i:02}_{}_{}_{}", r.source, r.target, r.controller.as_deref().unwrap_or("none"))
}

/// Region roles for drawing one DFA edge: targets green, avoided red.
fn edge_roles(dfa: &Dfa, ws: &Workspace, source: &str, target: &str) -> BTreeMap<String, RegionRole> {
    let mut roles = BTreeMap::new();
    let (Ok(s), Ok(t)) = (dfa.state_index(source), dfa.state_index(target)) else { return roles };
    if let Ok(spec) = ws.edge_spec(dfa, s, t, &BTreeMap::new()) {
        for a in &spec.reach {
            for r in &a.targets {
                roles.insert(r.clone(), RegionRole::Reach);
            }
        }
        for r in spec.stay_avoid.iter().chain(spec.reach.iter().flat_map(|a| a.avoid.iter())) {
            roles.entry(r.clone()).or_insert(RegionRole::Avoid);
        }
    }
    roles
}

fn write_verify(run: &VerifyRun, scenario: &Scenario, dir: &Path) -> Result<(), PipelineError> {
    create_dir(dir)?;
    let ws = &scenario.workspace;
    let dfa = &run.translation.pruned;
    let dot = dir.join("dfa.dot");
    std::fs::write(&dot, dfa.to_dot()).map_err(io_err(&dot))?;
    for (a, tube) in run.report.attempts.iter().zip(&run.tubes) {
        let (Some(tube), Some(csv), Some(svg)) = (tube, &a.tube_csv, &a.svg) else { continue };
        write_tube_csv(tube, &dir.join(csv))?;
        let roles = edge_roles(dfa, ws, &a.record.dfa_source, &a.record.dfa_target);
        export_svg(&[tube], ws, &roles, &dir.join(svg))?;
    }
    if let Some(s) = &run.strategy {
        let tubes: Vec<&ReachTube> = s.segments.iter().map(|g| &g.tube).collect();
        let mut roles = BTreeMap::new();
        for g in &s.segments {
            for (r, role) in edge_roles(dfa, ws, &g.dfa_source, &g.dfa_target) {
                let e = roles.entry(r).or_insert(role);
                if role == RegionRole::Reach {
                    *e = role;
                }
            }
        }
        export_svg(&tubes, ws, &roles, &dir.join("reach_strategy.svg"))?;
    }
    write_json(&run.report, &dir.join("report.json"))
}

/// Per-step empirical containment of fresh holdout trajectories in each
/// strategy tube, one vector per segment.
pub fn strategy_coverage(
    scenario: &Scenario,
    strategy: &Strategy<ReachTube>,
    holdout: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let system = scenario.system(1.0)?;
    let controllers = strategy.segments.iter().map(|g| scenario.controller(&g.controller)).collect::<Result<Vec<_>, _>>()?;
    let segments: Vec<(&ReachTube, &dyn Controller)> = strategy.segments.iter().zip(&controllers).map(|(g, c)| (&g.tube, c.as_ref())).collect();
    let init = InitialSet::Box(scenario.initial.clone());
    Ok(estimate_chain_delta(&init, &segments, &system, &scenario.config.reach.mode, holdout, derive(seed, &[tag("coverage")]))?)
}

/// Accepting state entered at or before the end of `trace`, folding from
/// the initial state.
pub fn dfa_monitor(dfa: &Dfa, trace: &[Symbol]) -> bool {
    dfa.accepts(trace)
}

/// Read the strategy from a report file or a bare strategy object.
pub fn load_strategy(path: &Path) -> Result<StrategyReport, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| PipelineError::Strategy(e.to_string()))?;
    let value = match value.get("strategy") {
        Some(serde_json::Value::Null) => return Err(PipelineError::Strategy("report has no strategy (verdict false)".into())),
        Some(v) => v.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| PipelineError::Strategy(e.to_string()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub rollouts: usize,
    pub successes: usize,
    pub fraction: f64,
    /// Rollouts that left the state box at some step.
    pub left_domain: usize,
    pub noise_scale: f64,
    pub seed: u64,
    pub probability_bound: f64,
    /// `bound - 3 sqrt(bound (1 - bound) / n)`.
    pub lower_band: f64,
}

/// One rollout: states `x_0..x_F` and whether the DFA accepted its labels.
#[derive(Clone, Debug)]
pub struct Trace {
    pub states: Vec<Vec<f64>>,
    pub accepted: bool,
    pub left_domain: bool,
}

/// Seeded Monte Carlo execution of `strategy`: start uniformly in the
/// initial box, run each controller for its horizon, monitor the label
/// sequence on the pruned DFA. Noise bounds are scaled by `noise_scale`.
pub fn run_simulate(
    scenario: &Scenario,
    strategy: &StrategyReport,
    n: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<(SimulationReport, Vec<Trace>), PipelineError> {
    if n == 0 {
        return Err(PipelineError::Invalid("need at least one rollout".into()));
    }
    if !(noise_scale >= 0.0) {
        return Err(PipelineError::Invalid("noise scale must be non-negative".into()));
    }
    let ws = &scenario.workspace;
    let dfa = run_translate(&scenario.formula, ws)?.pruned;
    let system = scenario.system(noise_scale)?;
    let ctrls: Vec<(Box<dyn Controller>, usize)> =
        strategy.segments.iter().map(|s| Ok((scenario.controller(&s.controller)?, s.horizon))).collect::<Result<_, PipelineError>>()?;
    let traces: Vec<Trace> = (0..n)
        .map(|i| {
            let mut rng = stream(seed, &[tag("simulate"), i as u64]);
            let mut x = scenario.initial.sample(&mut rng);
            let mut states = vec![x.clone()];
            for (c, h) in &ctrls {
                for _ in 0..*h {
                    x = system.closed_loop_step(&x, c.as_ref(), &mut rng);
                    states.push(x.clone());
                }
            }
            let labels: Vec<Symbol> = states.iter().map(|s| ws.label_unchecked(s)).collect();
            let left_domain = states.iter().any(|s| !ws.state_box().contains(s));
            Trace { accepted: dfa_monitor(&dfa, &labels), states, left_domain }
        })
        .collect();
    let successes = traces.iter().filter(|t| t.accepted).count();
    let p = strategy_probability(strategy.total_horizon, strategy.delta_m);
    let report = SimulationReport {
        rollouts: n,
        successes,
        fraction: successes as f64 / n as f64,
        left_domain: traces.iter().filter(|t| t.left_domain).count(),
        noise_scale,
        seed,
        probability_bound: p,
        lower_band: p - 3.0 * (p * (1.0 - p) / n as f64).sqrt(),
    };
    Ok((report, traces))
}

/// `rollout,t,x1..xd,accepted`.
pub fn traces_csv(traces: &[Trace]) -> String {
    use std::fmt::Write as _;
    let d = traces.first().and_then(|t| t.states.first()).map_or(0, Vec::len);
    let mut out = String::from("rollout,t");
    for k in 1..=d {
        let _ = write!(out, ",x{k}");
    }
    out.push_str(",accepted\n");
    for (i, tr) in traces.iter().enumerate() {
        for (t, x) in tr.states.iter().enumerate() {
            let _ = write!(out, "{i},{t}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", tr.accepted as u8);
        }
    }
    out
}

pub fn write_simulation(report: &SimulationReport, traces: &[Trace], dir: &Path) -> Result<(), PipelineError> {
    create_dir(dir)?;
    write_json(report, &dir.join("simulate.json"))?;
    let p = dir.join("traces.csv");
    std::fs::write(&p, traces_csv(traces)).map_err(io_err(&p))
}

/// Tube of one controller from the initial box for `steps` steps.
pub fn run_reach(scenario: &Scenario, controller: &str, steps: usize, out: Option<&Path>) -> Result<ReachTube, PipelineError> {
    if steps == 0 {
        return Err(PipelineError::Invalid("need at least one step".into()));
    }
    let system = scenario.system(1.0)?;
    let ctrl = scenario.controller(controller)?;
    let seed = derive(scenario.config.seed, &[tag("reach"), tag(controller)]);
    let tube = compute_tube(&InitialSet::Box(scenario.initial.clone()), &system, ctrl.as_ref(), &scenario.config.reach, steps, seed)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_tube_csv(&tube, &dir.join(format!("tube_{controller}.csv")))?;
        let mut roles = BTreeMap::new();
        if let Some(spec) = scenario.controller_spec(controller) {
            roles.insert(spec.region.clone(), RegionRole::Reach);
        }
        export_svg(&[&tube], &scenario.workspace, &roles, &dir.join(format!("reach_{controller}.svg")))?;
    }
    Ok(tube)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub controller: String,
    pub region: String,
    pub weights: PathBuf,
    pub samples: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    /// Held-out fraction of rollouts that reach the region.
    pub accuracy: f64,
    pub expert_accuracy: f64,
}

/// Imitation-train every MLP controller registered for `region` against
/// the steering expert and save its weights.
pub fn run_train(scenario: &Scenario, region: &str) -> Result<Vec<TrainReport>, PipelineError> {
    let ws = &scenario.workspace;
    let goal = ws.region(region).ok_or_else(|| PipelineError::Invalid(format!("unknown region `{region}`")))?;
    let specs: Vec<_> = scenario.config.controllers.iter().filter(|c| c.region == region && c.kind == "mlp").collect();
    if specs.is_empty() {
        return Err(PipelineError::Invalid(format!("no mlp controller registered for region `{region}`")));
    }
    let t = &scenario.config.training;
    let system = scenario.system(1.0)?;
    let mut reports = Vec::new();
    for spec in specs {
        let seed = derive(scenario.config.seed, &[tag("train"), tag(&spec.id)]);
        let expert = Expert::toward(format!("{}-expert", spec.id), &goal.bounds, &goal.dims, ws.input_box().clone(), t.expert.clone())
            .map_err(PipelineError::Invalid)?;
        let mut rng = stream(seed, &[tag("dataset")]);
        let data = generate_dataset(&system, ws.state_box(), goal, &expert, &t.dataset, Split::Train, &mut rng)?;
        let mut train_cfg = t.train.clone();
        train_cfg.wrap_dims = spec.wrap_angle_dims.clone();
        let outcome = train_imitation(&data, &train_cfg, &mut stream(seed, &[tag("fit")]))?;
        let weights = scenario.resolve(spec.weights.as_ref().expect("validated"));
        if let Some(parent) = weights.parent() {
            create_dir(parent)?;
        }
        outcome.net.save(&weights)?;
        let ctrl = crate::controller::MlpController::new(spec.id.clone(), outcome.net.clone(), spec.wrap_angle_dims.clone());
        let starts = sample_starts(ws.state_box(), t.eval_starts, &mut stream(seed, &[tag("eval-starts")]));
        let accuracy = controller_accuracy(&ctrl, &system, ws.state_box(), goal, &starts, t.eval_horizon, &mut stream(seed, &[tag("eval")]));
        let expert_accuracy =
            controller_accuracy(&expert, &system, ws.state_box(), goal, &starts, t.eval_horizon, &mut stream(seed, &[tag("eval")]));
        log::info!("{}: accuracy {accuracy:.3} (expert {expert_accuracy:.3})", spec.id);
        reports.push(TrainReport {
            controller: spec.id.clone(),
            region: region.to_string(),
            weights,
            samples: data.len(),
            train_loss: outcome.train_loss,
            validation_loss: outcome.validation_loss,
            accuracy,
            expert_accuracy,
        });
    }
    Ok(reports)
}
