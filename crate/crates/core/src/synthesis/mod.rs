//! Controller-sequence synthesis: depth-first search over the tree-expanded
//! DFA, verifying each edge before descending into it.

pub mod certificate;
pub mod expand;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reach::FailureReason;
use crate::registry::{Registry, RegistryError};
use crate::rng::{stream, tag};
pub use certificate::{replay_certificate, CertificateError};
pub use expand::{preprocess, preprocess_from, ExpandedDfa, ExpandedNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("DFA has a cycle through non-self-loop edges (states {})", .0.join(", "))]
    Cyclic(Vec<String>),
    #[error("tree expansion exceeds {0} nodes")]
    TooLarge(usize),
    #[error("unknown DFA state `{0}`")]
    UnknownState(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Result of one (edge, controller) check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum EdgeOutcome {
    Safe { horizon: usize },
    Unsafe { reason: FailureReason, t: usize },
    /// The check itself failed; counted as unsafe.
    Error { message: String },
    /// No controller targets the regions this edge needs.
    NoController,
}

impl EdgeOutcome {
    pub fn is_safe(&self) -> bool {
        matches!(self, EdgeOutcome::Safe { .. })
    }
}

pub struct Attempt<S, T> {
    pub outcome: EdgeOutcome,
    /// Initial set handed to the successor; present when safe.
    pub next: Option<S>,
    pub tube: Option<T>,
}

/// Identifies the tree edge being checked.
#[derive(Clone, Copy, Debug)]
pub struct EdgeKey<'a> {
    /// Original DFA states.
    pub source: usize,
    pub target: usize,
    /// Tree node names, unique per replica.
    pub source_node: &'a str,
    pub target_node: &'a str,
}

/// Checks single DFA edges. `Set` is what an edge starts from, `Tube` the
/// evidence it produces.
pub trait EdgeVerifier {
    type Set: Clone;
    type Tube: Clone;

    /// Candidate controllers of the original edge, in preference order.
    fn controllers(&self, source: usize, target: usize) -> Vec<String>;

    fn verify(&self, edge: EdgeKey<'_>, controller: &str, init: &Self::Set) -> Attempt<Self::Set, Self::Tube>;
}

/// Order in which unexplored successors are tried.
pub trait SuccessorPolicy {
    fn name(&self) -> &'static str;
    fn order(&self, tree: &ExpandedDfa, node: usize, children: &mut [usize]);
}

pub struct Sorted;

impl SuccessorPolicy for Sorted {
    fn name(&self) -> &'static str {
        "sorted"
    }

    fn order(&self, tree: &ExpandedDfa, _node: usize, children: &mut [usize]) {
        children.sort_by(|&a, &b| tree.node(a).name.cmp(&tree.node(b).name));
    }
}

/// Seeded shuffle, keyed by the node name.
pub struct Random {
    pub seed: u64,
}

impl SuccessorPolicy for Random {
    fn name(&self) -> &'static str {
        "random"
    }

    fn order(&self, tree: &ExpandedDfa, node: usize, children: &mut [usize]) {
        use rand::seq::SliceRandom;
        Sorted.order(tree, node, children);
        children.shuffle(&mut stream(self.seed, &[tag("successor"), tag(&tree.node(node).name)]));
    }
}

pub fn successor_registry() -> Registry<dyn SuccessorPolicy, u64> {
    Registry::<dyn SuccessorPolicy, u64>::new("successor policy")
        .register("sorted", |_| Ok(Box::new(Sorted)))
        .register("random", |&seed| Ok(Box::new(Random { seed })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub policy: String,
    /// Branch on every safe controller of an edge instead of the first.
    pub exhaustive_controllers: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { policy: "sorted".into(), exhaustive_controllers: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttemptRecord {
    pub source: String,
    pub target: String,
    pub dfa_source: String,
    pub dfa_target: String,
    pub controller: Option<String>,
    #[serde(flatten)]
    pub outcome: EdgeOutcome,
}

#[derive(Clone, Debug)]
pub struct Segment<T> {
    pub source: String,
    pub target: String,
    pub dfa_source: String,
    pub dfa_target: String,
    pub controller: String,
    pub horizon: usize,
    pub tube: T,
}

/// A verified controller sequence.
#[derive(Clone, Debug)]
pub struct Strategy<T> {
    pub segments: Vec<Segment<T>>,
    /// Tree nodes from the start node to the accepting replica.
    pub dfa_path: Vec<String>,
}

impl<T> Strategy<T> {
    /// F = Σ H_k.
    pub fn total_horizon(&self) -> usize {
        self.segments.iter().map(|s| s.horizon).sum()
    }

    pub fn probability(&self, delta_m: f64) -> f64 {
        strategy_probability(self.total_horizon(), delta_m)
    }

    pub fn controllers(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.controller.as_str()).collect()
    }
}

/// `(1 - δ_M)^F`.
pub fn strategy_probability(total_horizon: usize, delta_m: f64) -> f64 {
    (1.0 - delta_m).powf(total_horizon as f64)
}

pub struct SearchOutcome<T> {
    pub strategy: Option<Strategy<T>>,
    /// Every check in the order it ran, with its tube when one was built.
    pub attempts: Vec<(AttemptRecord, Option<T>)>,
}

struct Frame<S> {
    node: usize,
    init: S,
    children: Vec<usize>,
    child: usize,
    controller: usize,
}

/// Depth-first search for a verified path from the tree root to an
/// accepting replica. Each node's initial set is the final set of the edge
/// that entered it.
pub fn reach_dfs<V: EdgeVerifier>(
    tree: &ExpandedDfa,
    verifier: &V,
    x0: V::Set,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<SearchOutcome<V::Tube>, SynthesisError> {
    let policy = successor_registry().create(&cfg.policy, &seed)?;
    let dfa = tree.dfa();
    let mut attempts = Vec::new();
    let root = tree.root();
    if tree.is_accepting(root) {
        let strategy = Strategy { segments: Vec::new(), dfa_path: vec![tree.node(root).name.clone()] };
        return Ok(SearchOutcome { strategy: Some(strategy), attempts });
    }
    let ordered = |node: usize| {
        let mut c = tree.children(node).to_vec();
        policy.order(tree, node, &mut c);
        c
    };
    let mut frames = vec![Frame { node: root, init: x0, children: ordered(root), child: 0, controller: 0 }];
    let mut segments: Vec<Segment<V::Tube>> = Vec::new();
    while let Some(top) = frames.last_mut() {
        let Some(&child) = top.children.get(top.child) else {
            frames.pop();
            segments.pop();
            continue;
        };
        let (src, dst) = (tree.node(top.node), tree.node(child));
        let record = |controller: Option<&str>, outcome: EdgeOutcome| AttemptRecord {
            source: src.name.clone(),
            target: dst.name.clone(),
            dfa_source: dfa.name(src.origin).to_string(),
            dfa_target: dfa.name(dst.origin).to_string(),
            controller: controller.map(String::from),
            outcome,
        };
        let candidates = verifier.controllers(src.origin, dst.origin);
        if candidates.is_empty() {
            attempts.push((record(None, EdgeOutcome::NoController), None));
        }
        let key = EdgeKey { source: src.origin, target: dst.origin, source_node: &src.name, target_node: &dst.name };
        let mut advanced = None;
        while let Some(c) = candidates.get(top.controller) {
            top.controller += 1;
            let a = verifier.verify(key, c, &top.init);
            log::info!("edge {} -> {} with {c}: {:?}", src.name, dst.name, a.outcome);
            attempts.push((record(Some(c), a.outcome.clone()), a.tube.clone()));
            if let (EdgeOutcome::Safe { horizon }, Some(next), Some(tube)) = (a.outcome, a.next, a.tube) {
                if !cfg.exhaustive_controllers {
                    top.controller = candidates.len();
                }
                advanced = Some((c.clone(), horizon, next, tube));
                break;
            }
        }
        let Some((controller, horizon, next, tube)) = advanced else {
            top.child += 1;
            top.controller = 0;
            continue;
        };
        segments.push(Segment {
            source: src.name.clone(),
            target: dst.name.clone(),
            dfa_source: dfa.name(src.origin).to_string(),
            dfa_target: dfa.name(dst.origin).to_string(),
            controller,
            horizon,
            tube,
        });
        if tree.is_accepting(child) {
            let mut dfa_path = vec![tree.node(root).name.clone()];
            dfa_path.extend(segments.iter().map(|s| s.target.clone()));
            return Ok(SearchOutcome { strategy: Some(Strategy { segments, dfa_path }), attempts });
        }
        frames.push(Frame { node: child, init: next, children: ordered(child), child: 0, controller: 0 });
    }
    Ok(SearchOutcome { strategy: None, attempts })
}
