//! Deterministic finite automata with guard-labelled edges.
//!
//! Construction runs formula progression over an explicit alphabet, which
//! yields a complete deterministic table directly. The table is minimized
//! with Hopcroft's partition refinement and re-expressed with one
//! DNF guard per (source, target) pair. The dead class (no path to
//! acceptance) is dropped from the public automaton; a symbol with no
//! matching edge leads to rejection.

pub mod guard;
mod hopcroft;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::ltl::{self, Formula, Symbol};
use crate::workspace::Workspace;
pub use guard::{Clause, Guard};

pub const DEFAULT_STATE_CAP: usize = 10_000;
pub const MAX_GUARD_VARS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("automaton construction exceeded {0} states")]
    StateCap(usize),
    #[error("unknown DFA state `{0}`")]
    UnknownState(String),
    #[error("alphabet has {0} propositions; guards support at most {MAX_GUARD_VARS}")]
    TooManyAtoms(usize),
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("invalid automaton: {0}")]
    Invalid(String),
}

/// An ordered list of symbols over named propositions.
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet {
    vars: Vec<String>,
    symbols: Vec<Symbol>,
}

impl Alphabet {
    /// Every subset of `vars`, ordered by size then lexicographically.
    pub fn powerset<I, S>(vars: I) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect::<BTreeSet<_>>().into_iter().collect();
        if vars.len() > MAX_GUARD_VARS {
            return Err(AutomatonError::TooManyAtoms(vars.len()));
        }
        let symbols = (0..(1u32 << vars.len()))
            .map(|m| {
                Symbol::from_names(
                    vars.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, v)| v.clone()),
                )
            })
            .collect();
        Ok(Self::from_symbols(symbols, vars))
    }

    /// An explicit symbol list; `vars` should cover every name used.
    pub fn from_symbols(mut symbols: Vec<Symbol>, vars: Vec<String>) -> Self {
        symbols.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        symbols.dedup();
        let mut vars: Vec<String> = vars;
        vars.sort();
        vars.dedup();
        Alphabet { vars, symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DfaState {
    pub name: String,
    /// Residual obligation this state stands for, when known.
    pub residual: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DfaEdge {
    pub source: usize,
    pub target: usize,
    pub guard: Guard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dfa {
    states: Vec<DfaState>,
    initial: usize,
    accepting: Option<usize>,
    edges: Vec<DfaEdge>,
}

impl Dfa {
    pub fn new(
        states: Vec<DfaState>,
        initial: usize,
        accepting: Option<usize>,
        mut edges: Vec<DfaEdge>,
    ) -> Result<Self, AutomatonError> {
        let n = states.len();
        if initial >= n || accepting.is_some_and(|a| a >= n) {
            return Err(AutomatonError::Invalid("initial or accepting index out of range".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(AutomatonError::Invalid("edge endpoint out of range".into()));
            }
            if !seen.insert((e.source, e.target)) {
                return Err(AutomatonError::Invalid(format!(
                    "duplicate edge {} -> {}",
                    states[e.source].name, states[e.target].name
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        Ok(Dfa { states, initial, accepting, edges })
    }

    pub fn states(&self) -> &[DfaState] {
        &self.states
    }

    pub fn edges(&self) -> &[DfaEdge] {
        &self.edges
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> Option<usize> {
        self.accepting
    }

    pub fn name(&self, q: usize) -> &str {
        &self.states[q].name
    }

    pub fn state_index(&self, name: &str) -> Result<usize, AutomatonError> {
        self.states
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| AutomatonError::UnknownState(name.to_string()))
    }

    pub fn edge(&self, source: usize, target: usize) -> Option<&DfaEdge> {
        self.edges.iter().find(|e| e.source == source && e.target == target)
    }

    pub fn self_loop(&self, q: usize) -> Option<&DfaEdge> {
        self.edge(q, q)
    }

    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &DfaEdge> {
        self.edges.iter().filter(move |e| e.source == q)
    }

    /// Non-self-loop edge count.
    pub fn transition_count(&self) -> usize {
        self.edges.iter().filter(|e| e.source != e.target).count()
    }

    /// One DFA move; `None` is the hidden dead state.
    pub fn step(&self, q: usize, sigma: &Symbol) -> Option<usize> {
        self.outgoing(q).find(|e| e.guard.eval(sigma)).map(|e| e.target)
    }

    /// One-hop successor set of `q`, including `q` when it has a self-loop.
    pub fn successors(&self, q: usize) -> Result<Vec<usize>, AutomatonError> {
        if q >= self.states.len() {
            return Err(AutomatonError::UnknownState(format!("#{q}")));
        }
        Ok(self.outgoing(q).map(|e| e.target).collect())
    }

    /// True iff the run from the initial state enters the accepting state at
    /// or before the end of `trace`.
    pub fn accepts(&self, trace: &[Symbol]) -> bool {
        let Some(acc) = self.accepting else { return false };
        let mut q = self.initial;
        for sigma in trace {
            match self.step(q, sigma) {
                Some(next) => q = next,
                None => return false,
            }
            if q == acc {
                return true;
            }
        }
        false
    }

    /// Graphviz text with states in sorted-name order.
    pub fn to_dot(&self) -> String {
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by(|&a, &b| self.states[a].name.cmp(&self.states[b].name));
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n");
        for &q in &order {
            let shape = if Some(q) == self.accepting { "doublecircle" } else { "circle" };
            out.push_str(&format!("  \"{}\" [shape={}];\n", self.states[q].name, shape));
        }
        out.push_str(&format!("  init -> \"{}\";\n", self.states[self.initial].name));
        let mut edges: Vec<&DfaEdge> = self.edges.iter().collect();
        edges.sort_by(|a, b| {
            (&self.states[a.source].name, &self.states[a.target].name)
                .cmp(&(&self.states[b.source].name, &self.states[b.target].name))
        });
        for e in edges {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                self.states[e.source].name, self.states[e.target].name, e.guard
            ));
        }
        out.push_str("}\n");
        out
    }

    pub fn dump(&self) -> DfaDump {
        DfaDump {
            states: self
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| StateDump {
                    id: s.name.clone(),
                    residual: s.residual.clone(),
                    initial: i == self.initial,
                    accepting: Some(i) == self.accepting,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDump {
                    source: self.states[e.source].name.clone(),
                    target: self.states[e.target].name.clone(),
                    guard: e.guard.to_string(),
                    clauses: e.guard.clauses().to_vec(),
                })
                .collect(),
            transitions: self.transition_count(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DfaDump {
    pub states: Vec<StateDump>,
    pub edges: Vec<EdgeDump>,
    pub transitions: usize,
}

#[derive(Debug, Serialize)]
pub struct StateDump {
    pub id: String,
    pub residual: String,
    pub initial: bool,
    pub accepting: bool,
}

#[derive(Debug, Serialize)]
pub struct EdgeDump {
    pub source: String,
    pub target: String,
    pub guard: String,
    pub clauses: Vec<Clause>,
}

/// A complete transition table over an alphabet, before naming and guards.
struct Table {
    delta: Vec<Vec<usize>>,
    accepting: Vec<bool>,
    initial: usize,
    labels: Vec<String>,
}

/// Build the minimized DFA of a co-safe formula by progression over
/// `alphabet`.
pub fn translate(f: &Formula, alphabet: &Alphabet) -> Result<Dfa, AutomatonError> {
    translate_with_cap(f, alphabet, DEFAULT_STATE_CAP)
}

pub fn translate_with_cap(f: &Formula, alphabet: &Alphabet, cap: usize) -> Result<Dfa, AutomatonError> {
    if alphabet.is_empty() {
        return Err(AutomatonError::EmptyAlphabet);
    }
    let start = ltl::dnf(&ltl::canonical(f));
    let mut ids: HashMap<Formula, usize> = HashMap::new();
    let mut formulas = vec![start.clone()];
    ids.insert(start, 0);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(q) = queue.pop_front() {
        let mut row = Vec::with_capacity(alphabet.len());
        for sigma in alphabet.symbols() {
            let r = ltl::dnf(&ltl::progress(&formulas[q], sigma));
            let id = match ids.get(&r) {
                Some(&id) => id,
                None => {
                    let id = formulas.len();
                    if id >= cap {
                        return Err(AutomatonError::StateCap(cap));
                    }
                    ids.insert(r.clone(), id);
                    formulas.push(r);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        if delta.len() <= q {
            delta.resize(q + 1, Vec::new());
        }
        delta[q] = row;
    }
    let table = Table {
        accepting: formulas.iter().map(|f| *f == Formula::True).collect(),
        labels: formulas.iter().map(|f| f.to_string()).collect(),
        delta,
        initial: 0,
    };
    from_table(table, alphabet)
}

/// Hopcroft minimization of `d` over `alphabet`. The hidden dead state is
/// materialized for completeness and dropped again afterwards.
pub fn minimize(d: &Dfa, alphabet: &Alphabet) -> Result<Dfa, AutomatonError> {
    if alphabet.is_empty() {
        return Err(AutomatonError::EmptyAlphabet);
    }
    let n = d.states.len();
    let sink = n;
    let mut delta: Vec<Vec<usize>> = (0..n)
        .map(|q| alphabet.symbols().iter().map(|s| d.step(q, s).unwrap_or(sink)).collect())
        .collect();
    delta.push(vec![sink; alphabet.len()]);
    let mut accepting = vec![false; n + 1];
    if let Some(a) = d.accepting {
        accepting[a] = true;
    }
    let mut labels: Vec<String> = d.states.iter().map(|s| s.residual.clone()).collect();
    labels.push("false".into());
    from_table(Table { delta, accepting, initial: d.initial, labels }, alphabet)
}

fn from_table(table: Table, alphabet: &Alphabet) -> Result<Dfa, AutomatonError> {
    if alphabet.vars().len() > MAX_GUARD_VARS {
        return Err(AutomatonError::TooManyAtoms(alphabet.vars().len()));
    }
    let (class_of, n_classes) = hopcroft::partition(&table.delta, &table.accepting, alphabet.len());
    let mut qdelta = vec![vec![0usize; alphabet.len()]; n_classes];
    let mut qaccepting = vec![false; n_classes];
    let mut qlabel: Vec<Option<String>> = vec![None; n_classes];
    for (q, row) in table.delta.iter().enumerate() {
        let c = class_of[q];
        for (k, &t) in row.iter().enumerate() {
            qdelta[c][k] = class_of[t];
        }
        qaccepting[c] |= table.accepting[q];
        let label = &table.labels[q];
        match &qlabel[c] {
            Some(l) if (l.len(), l) <= (label.len(), label) => {}
            _ => qlabel[c] = Some(label.clone()),
        }
    }
    // live = can reach acceptance
    let mut live = qaccepting.clone();
    loop {
        let mut changed = false;
        for c in 0..n_classes {
            if !live[c] && qdelta[c].iter().any(|&t| live[t]) {
                live[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let init = class_of[table.initial];
    let acc_class = (0..n_classes).find(|&c| qaccepting[c] && live[c]);

    // BFS naming over the alphabet order
    let mut order: Vec<usize> = vec![init];
    let mut seen = vec![false; n_classes];
    seen[init] = true;
    let mut head = 0;
    while head < order.len() {
        let c = order[head];
        head += 1;
        if !live[c] {
            continue;
        }
        for &t in &qdelta[c] {
            if live[t] && !seen[t] {
                seen[t] = true;
                order.push(t);
            }
        }
    }
    let mut index_of = vec![usize::MAX; n_classes];
    let mut states = Vec::new();
    let mut counter = 1;
    for &c in &order {
        let name = if c == init {
            "q0".to_string()
        } else if Some(c) == acc_class {
            "qF".to_string()
        } else {
            let n = format!("q{counter}");
            counter += 1;
            n
        };
        index_of[c] = states.len();
        states.push(DfaState { name, residual: qlabel[c].clone().unwrap_or_default() });
    }

    let vars = alphabet.vars();
    let codes: Vec<u32> = alphabet.symbols().iter().map(|s| guard::encode(vars, s)).collect();
    let present: BTreeSet<u32> = codes.iter().copied().collect();
    let dont_care: Vec<u32> = (0..(1u32 << vars.len())).filter(|m| !present.contains(m)).collect();

    let mut edges = Vec::new();
    for &c in &order {
        if !live[c] {
            continue;
        }
        let mut by_target: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (k, &t) in qdelta[c].iter().enumerate() {
            if live[t] {
                by_target.entry(index_of[t]).or_default().push(codes[k]);
            }
        }
        for (target, on) in by_target {
            edges.push(DfaEdge { source: index_of[c], target, guard: guard::minimize(vars, &on, &dont_care) });
        }
    }
    let accepting = acc_class.filter(|&c| index_of[c] != usize::MAX).map(|c| index_of[c]);
    Dfa::new(states, 0, accepting, edges)
}

/// An edge removed by [`prune_infeasible`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrunedEdge {
    pub source: String,
    pub target: String,
    pub guard: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PruneWarning {
    /// The accepting state can no longer be reached from the initial state.
    AcceptingDisconnected,
    /// The initial state lost every outgoing non-self-loop edge.
    InitialIsolated,
}

#[derive(Clone, Debug)]
pub struct Pruned {
    pub dfa: Dfa,
    pub removed: Vec<PrunedEdge>,
    pub warnings: Vec<PruneWarning>,
}

/// Drop every edge whose guard no geometrically feasible symbol satisfies.
pub fn prune_infeasible(d: &Dfa, w: &Workspace) -> Pruned {
    prune_with_symbols(d, &w.feasible_symbols())
}

pub fn prune_with_symbols(d: &Dfa, feasible: &[Symbol]) -> Pruned {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for e in &d.edges {
        if feasible.iter().any(|s| e.guard.eval(s)) {
            kept.push(e.clone());
        } else {
            removed.push(PrunedEdge {
                source: d.name(e.source).to_string(),
                target: d.name(e.target).to_string(),
                guard: e.guard.to_string(),
            });
        }
    }
    let dfa = Dfa { states: d.states.clone(), initial: d.initial, accepting: d.accepting, edges: kept };
    let mut warnings = Vec::new();
    if !dfa.edges.iter().any(|e| e.source == dfa.initial && e.target != dfa.initial)
        && dfa.accepting != Some(dfa.initial)
    {
        warnings.push(PruneWarning::InitialIsolated);
    }
    let reachable = dfa.reachable_from(dfa.initial);
    if dfa.accepting.is_none_or(|a| !reachable.contains(&a)) {
        warnings.push(PruneWarning::AcceptingDisconnected);
    }
    Pruned { dfa, removed, warnings }
}

impl Dfa {
    fn reachable_from(&self, q: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([q]);
        let mut stack = vec![q];
        while let Some(c) = stack.pop() {
            for e in self.outgoing(c) {
                if seen.insert(e.target) {
                    stack.push(e.target);
                }
            }
        }
        seen
    }
}
