//! One pass/fail line per acceptance criterion. Run with
//! `cargo test -p nsctl-core --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::search::{brute_force, random_dag, Table};
use common::semantics::{all_traces, random_formula, satisfies};
use common::{geometry_sweep, shipped_scenario};
use nsctl_core::automaton::{prune_infeasible, translate, Alphabet};
use nsctl_core::controller::train::controller_accuracy;
use nsctl_core::controller::train::sample_starts;
use nsctl_core::ltl::{normalize, parse};
use nsctl_core::pipeline::{run_simulate, run_translate, run_verify, strategy_coverage, StrategyReport, SegmentReport};
use nsctl_core::reach::{check_steps, compute_tube, EdgeContext, FailureReason, InitialSet, ReachStep, Verdict};
use nsctl_core::rng::{stream, tag};
use nsctl_core::scenario::{load_scenario, Scenario};
use nsctl_core::synthesis::{preprocess, reach_dfs, strategy_probability, EdgeOutcome, SearchConfig};
use nsctl_core::workspace::{Bounds, Region, Workspace};
use rand::Rng;

/// Tolerance on the probability values quoted to four decimals.
const PROB_TOL: f64 = 1e-4;
/// Minimum per-step empirical containment.
const COVERAGE_MIN: f64 = 0.999;
/// Minimum held-out reach rate of each trained controller.
const ACCURACY_MIN: f64 = 0.75;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn shipped() -> Scenario {
    load_scenario(&shipped_scenario()).expect("shipped scenario loads")
}

fn with_eps(sc: &Scenario, eps: f64) -> Scenario {
    let mut cfg = sc.config.clone();
    cfg.reach.eps = eps;
    Scenario::new(cfg, &sc.base_dir).unwrap()
}

fn dfa_structure() -> Outcome {
    let sc = shipped();
    let clock = Instant::now();
    let t = run_translate(&sc.formula, &sc.workspace).map_err(|e| e.to_string())?;
    let secs = clock.elapsed().as_secs_f64();
    let (n, m, p) = (t.dfa.states().len(), t.dfa.transition_count(), t.pruned.transition_count());
    check(
        n == 4 && m == 5 && p == 4 && secs < 1.0,
        format!("{n} states, {m} transitions ({p} after geometric pruning) in {secs:.3} s"),
    )
}

fn example_edge_sets() -> Outcome {
    let names = ["p1", "p2", "p3", "p4", "p5"];
    let regions = names
        .iter()
        .enumerate()
        .map(|(i, n)| Region::new(*n, vec![0, 1], vec![i as f64, 0.0], vec![i as f64 + 0.5, 0.5]).unwrap())
        .collect();
    let ws = Workspace::new(
        Bounds::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap(),
        Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
        regions,
        0.0,
    )
    .unwrap();
    let f = parse("F p1 & F p2 & (!p1 U p2) & (!(p3|p4|p5) U p1)", &ws.region_names()).unwrap();
    let d = translate(&f, &Alphabet::powerset(f.atoms()).unwrap()).unwrap();
    let ctrl = BTreeMap::from([("p1".to_string(), vec!["xi1".to_string()]), ("p2".to_string(), vec!["xi2".to_string()])]);
    let q = |n: &str| d.state_index(n).unwrap();
    let succ: Vec<&str> = d.successors(q("q0")).unwrap().into_iter().map(|s| d.name(s)).collect();
    let x01 = ws.edge_spec(&d, q("q0"), q("q1"), &ctrl).unwrap().controllers();
    let x1f = ws.edge_spec(&d, q("q1"), q("qF"), &ctrl).unwrap().controllers();
    let x11 = ws.edge_spec(&d, q("q1"), q("q1"), &ctrl).unwrap().dwell_controllers;
    let pruned = prune_infeasible(&d, &ws);
    let removed: Vec<(&str, &str)> = pruned.removed.iter().map(|e| (e.source.as_str(), e.target.as_str())).collect();
    check(
        succ == ["q0", "q1", "qF"] && x01 == ["xi2"] && x1f == ["xi1"] && x11 == ["xi2"] && removed == [("q0", "qF")],
        format!("R_q0 {succ:?}, q0->q1 {x01:?}, q1->qF {x1f:?}, q1->q1 {x11:?}, pruned {removed:?}"),
    )
}

fn probability_arithmetic() -> Outcome {
    let cases = [(33, 0.9869), (43, 0.9829), (37, 0.9853)];
    let got: Vec<f64> = cases.iter().map(|&(f, _)| strategy_probability(f, 0.0004)).collect();
    let ok = cases.iter().zip(&got).all(|(&(_, want), g)| (g - want).abs() <= PROB_TOL);
    check(ok, format!("F = 33, 43, 37 -> {:.5}, {:.5}, {:.5}", got[0], got[1], got[2]))
}

fn semantics_oracle() -> Outcome {
    let atoms = ["a", "b", "c"];
    let regions = atoms
        .iter()
        .enumerate()
        .map(|(i, n)| Region::new(*n, vec![0], vec![i as f64], vec![i as f64 + 0.5]).unwrap())
        .collect();
    let ws = Workspace::new(Bounds::new(vec![0.0], vec![5.0]).unwrap(), Bounds::new(vec![-1.0], vec![1.0]).unwrap(), regions, 0.0).unwrap();
    let symbols = ws.feasible_symbols();
    let traces = all_traces(&symbols, 6);
    let vars: Vec<String> = atoms.iter().map(|s| s.to_string()).collect();
    let mut rng = stream(4, &[tag("criterion-4")]);
    let clock = Instant::now();
    let (mut checked, mut wrong, mut formulas) = (0usize, 0usize, 0usize);
    while formulas < 500 {
        let f = normalize(&random_formula(&mut rng, &atoms, 3)).unwrap();
        let d = translate(&f, &Alphabet::from_symbols(symbols.clone(), vars.clone())).map_err(|e| format!("{f}: {e}"))?;
        formulas += 1;
        for t in &traces {
            checked += 1;
            wrong += (d.accepts(t) != satisfies(&f, t)) as usize;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    check(wrong == 0 && secs < 60.0, format!("{formulas} formulas x {} traces, {wrong}/{checked} disagreements, {secs:.1} s", traces.len()))
}

fn search_oracle() -> Outcome {
    let mut rng = stream(5, &[tag("criterion-5")]);
    let (mut wrong, mut feasible) = (0, 0);
    let n_instances = 400;
    for i in 0..n_instances {
        let n = rng.gen_range(1..=6);
        let d = random_dag(&mut rng, n, 0.5);
        let mut controllers = BTreeMap::new();
        for e in d.edges().iter().filter(|e| e.source != e.target) {
            let k = rng.gen_range(0..=2);
            controllers.insert((e.source, e.target), (0..k).map(|c| format!("c{c}")).collect());
        }
        let table = Table { seed: i, p_feasible: rng.gen_range(0.3..0.9), controllers };
        let out = reach_dfs(&preprocess(&d).unwrap(), &table, vec![d.initial()], &SearchConfig::default(), i).unwrap();
        let expected = brute_force(&d, &table);
        feasible += expected as usize;
        wrong += (out.strategy.is_some() != expected) as usize;
    }
    check(wrong == 0, format!("{n_instances} automata (<= 6 states), {feasible} feasible, {wrong} disagreements"))
}

fn geometry_oracles() -> Outcome {
    let clock = Instant::now();
    let a = geometry_sweep(6, 2, 1000);
    let b = geometry_sweep(7, 3, 1000);
    let secs = clock.elapsed().as_secs_f64();
    let bad = a.avoid_mismatches + a.hull_mismatches + b.avoid_mismatches + b.hull_mismatches;
    check(
        bad == 0 && secs < 120.0,
        format!(
            "d=2: {}/{} avoid, {}/{} hull mismatches; d=3: {}/{} avoid, {}/{} hull; {secs:.1} s",
            a.avoid_mismatches, a.avoid_pairs, a.hull_mismatches, a.hulls, b.avoid_mismatches, b.avoid_pairs, b.hull_mismatches, b.hulls
        ),
    )
}

fn end_to_end(sc: &Scenario) -> Outcome {
    let run = run_verify(sc, None).map_err(|e| e.to_string())?;
    let secs = run.timings.search_s;
    let Some(s) = &run.strategy else {
        return Err(format!("verdict false: {:?}", run.report.failure));
    };
    let order = s.controllers();
    let horizons: Vec<usize> = s.segments.iter().map(|g| g.horizon).collect();
    check(
        order == ["xi3", "xi1"] && secs < 60.0,
        format!("True, controllers {order:?}, horizons {horizons:?}, reachability {secs:.2} s"),
    )
}

fn epsilon_ablation(sc: &Scenario) -> Outcome {
    let run = run_verify(&with_eps(sc, 0.1), None).map_err(|e| e.to_string())?;
    let l1_edge = run.report.attempts.iter().find(|a| {
        a.record.controller.as_deref() == Some("xi1") && a.record.dfa_source != run.report.initial_states[0]
    });
    let l3_edge = run.report.attempts.iter().find(|a| a.record.controller.as_deref() == Some("xi3"));
    let l1_outcome = l1_edge.map(|a| a.record.outcome.clone());
    let ablation = !run.report.verdict
        && matches!(l1_outcome, Some(EdgeOutcome::Unsafe { reason: FailureReason::AvoidViolation, .. }))
        && l3_edge.is_some_and(|a| a.record.outcome.is_safe());

    // monotonicity on shared samples: the same hulls checked at two paddings
    let tubes = shared_tubes(sc);
    let t = run_translate(&sc.formula, &sc.workspace).map_err(|e| e.to_string())?;
    let d = &t.pruned;
    let feasible = sc.workspace.feasible_symbols();
    let (mut pairs, mut inversions) = (0, 0);
    let grid = [0.0, 0.01, 0.03, 0.05, 0.1, 0.15];
    for e in d.edges().iter().filter(|e| e.source != e.target) {
        let ctx = EdgeContext { dfa: d, source: e.source, target: e.target, workspace: &sc.workspace, feasible: &feasible };
        for steps in &tubes {
            for len in 2..=steps.len() {
                let verdicts: Vec<bool> = grid.iter().map(|&eps| matches!(check_steps(ctx, false, &padded(&steps[..len], eps)), Verdict::Safe { .. })).collect();
                for i in 0..grid.len() {
                    for j in i + 1..grid.len() {
                        pairs += 1;
                        inversions += (verdicts[j] && !verdicts[i]) as usize;
                    }
                }
            }
        }
    }
    check(
        ablation && inversions == 0,
        format!("eps=0.1: verdict {}, l1 edge {:?}; monotonicity {inversions} inversions in {pairs} pairs", run.report.verdict, l1_outcome),
    )
}

fn padded(steps: &[ReachStep], eps: f64) -> Vec<ReachStep> {
    steps.iter().map(|s| if s.t == 0 { s.clone() } else { ReachStep { eps, ..s.clone() } }).collect()
}

/// Tubes of both controllers from the initial box and of xi1 from the end
/// of xi3's tube.
fn shared_tubes(sc: &Scenario) -> Vec<Vec<ReachStep>> {
    let sys = sc.system(1.0).unwrap();
    let cfg = &sc.config.reach;
    let x0 = InitialSet::Box(sc.initial.clone());
    let xi1 = sc.controller("xi1").unwrap();
    let xi3 = sc.controller("xi3").unwrap();
    let a = compute_tube(&x0, &sys, xi3.as_ref(), cfg, 14, 1).unwrap();
    let b = compute_tube(&x0, &sys, xi1.as_ref(), cfg, 14, 2).unwrap();
    let mid = InitialSet::Tube { step: a.steps[7].clone(), particles: std::sync::Arc::new(Vec::new()) };
    let mut cfg_resample = cfg.clone();
    cfg_resample.mode = "resample".into();
    let c = compute_tube(&mid, &sys, xi1.as_ref(), &cfg_resample, 14, 3).unwrap();
    vec![a.steps, b.steps, c.steps]
}

fn to_report(s: &nsctl_core::synthesis::Strategy<nsctl_core::reach::ReachTube>, delta_m: f64) -> StrategyReport {
    StrategyReport {
        segments: s
            .segments
            .iter()
            .map(|g| SegmentReport {
                source: g.source.clone(),
                target: g.target.clone(),
                dfa_source: g.dfa_source.clone(),
                dfa_target: g.dfa_target.clone(),
                controller: g.controller.clone(),
                horizon: g.horizon,
                tube_csv: None,
            })
            .collect(),
        dfa_path: s.dfa_path.clone(),
        total_horizon: s.total_horizon(),
        delta_m,
        probability: s.probability(delta_m),
    }
}

fn monte_carlo(sc: &Scenario) -> Outcome {
    let run = run_verify(sc, None).map_err(|e| e.to_string())?;
    let s = run.strategy.ok_or("verdict false")?;
    let clock = Instant::now();
    let (r, _) = run_simulate(sc, &to_report(&s, sc.config.reach.delta_m), 1000, 1.0, 9).map_err(|e| e.to_string())?;
    let secs = clock.elapsed().as_secs_f64();
    check(
        r.fraction >= r.lower_band && secs < 120.0,
        format!("{}/{} satisfied, bound {:.4}, band {:.4}, {secs:.2} s", r.successes, r.rollouts, r.probability_bound, r.lower_band),
    )
}

fn coverage(sc: &Scenario) -> Outcome {
    let run = run_verify(sc, None).map_err(|e| e.to_string())?;
    let s = run.strategy.ok_or("verdict false")?;
    let cov = strategy_coverage(sc, &s, 10_000, 10).map_err(|e| e.to_string())?;
    let min = cov.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    check(min >= COVERAGE_MIN, format!("min per-step containment {min:.4} over {} steps (M = {}, eps = {})", cov.iter().map(Vec::len).sum::<usize>(), sc.config.reach.m, sc.config.reach.eps))
}

fn controller_quality(sc: &Scenario) -> Outcome {
    let sys = sc.system(1.0).unwrap();
    let ws = &sc.workspace;
    let mut parts = Vec::new();
    let mut ok = true;
    for spec in &sc.config.controllers {
        let ctrl = sc.controller(&spec.id).map_err(|e| e.to_string())?;
        let goal = ws.region(&spec.region).unwrap();
        let starts = sample_starts(ws.state_box(), 1200, &mut stream(11, &[tag("held-out"), tag(&spec.id)]));
        let acc = controller_accuracy(ctrl.as_ref(), &sys, ws.state_box(), goal, &starts, sc.config.training.eval_horizon, &mut stream(11, &[tag("held-out-noise")]));
        ok &= acc >= ACCURACY_MIN;
        parts.push(format!("{} {:.1}%", spec.id, 100.0 * acc));
    }
    check(ok, format!("held-out reach rate over 1200 starts: {}", parts.join(", ")))
}

fn main() {
    let sc = shipped();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("DFA structure of the four-region task", Box::new(dfa_structure)),
        ("edge sets of the two-goal example", Box::new(example_edge_sets)),
        ("probability arithmetic", Box::new(probability_arithmetic)),
        ("DFA language vs direct semantics", Box::new(semantics_oracle)),
        ("search vs brute-force paths", Box::new(search_oracle)),
        ("geometry vs LP and extreme-point oracles", Box::new(geometry_oracles)),
        ("end-to-end verification of the shipped scenario", Box::new(|| end_to_end(&sc))),
        ("padding ablation and monotonicity", Box::new(|| epsilon_ablation(&sc))),
        ("Monte Carlo validation", Box::new(|| monte_carlo(&sc))),
        ("empirical coverage", Box::new(|| coverage(&sc))),
        ("controller quality", Box::new(|| controller_quality(&sc))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        failed += (status == "FAIL") as usize;
        println!("criterion {:>2} {status}: {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
