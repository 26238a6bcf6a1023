//! Tree expansion of a DFA: every state reachable through several
//! non-self-loop paths is replicated once per path.

use std::collections::BTreeMap;

use serde::Serialize;

use super::SynthesisError;
use crate::automaton::Dfa;

/// Expansion stops with an error beyond this many nodes.
pub const NODE_CAP: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpandedNode {
    /// Unique name: the origin's name, suffixed `.k` when the origin has
    /// several replicas.
    pub name: String,
    /// State index in the original DFA.
    pub origin: usize,
    pub parent: Option<usize>,
    /// Origin states from the root to this node, self-loops excluded.
    pub path: Vec<usize>,
}

/// A DFA unfolded into a tree over its non-self-loop edges. Self-loops and
/// guards stay on the original automaton, looked up through `origin`.
#[derive(Clone, Debug)]
pub struct ExpandedDfa {
    dfa: Dfa,
    nodes: Vec<ExpandedNode>,
    children: Vec<Vec<usize>>,
}

impl ExpandedDfa {
    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn nodes(&self) -> &[ExpandedNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ExpandedNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.dfa.accepting() == Some(self.nodes[i].origin)
    }

    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Non-self-loop edges of the tree.
    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Reject cycles among non-self-loop edges (Kahn's algorithm).
fn check_acyclic(d: &Dfa) -> Result<(), SynthesisError> {
    let n = d.states().len();
    let mut indeg = vec![0usize; n];
    for e in d.edges().iter().filter(|e| e.source != e.target) {
        indeg[e.target] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&q| indeg[q] == 0).collect();
    let mut done = 0;
    while let Some(q) = ready.pop() {
        done += 1;
        for e in d.outgoing(q).filter(|e| e.target != q) {
            indeg[e.target] -= 1;
            if indeg[e.target] == 0 {
                ready.push(e.target);
            }
        }
    }
    if done == n {
        return Ok(());
    }
    let on_cycle: Vec<String> = (0..n).filter(|&q| indeg[q] > 0).map(|q| d.name(q).to_string()).collect();
    Err(SynthesisError::Cyclic(on_cycle))
}

/// Expand from the DFA's initial state.
pub fn preprocess(d: &Dfa) -> Result<ExpandedDfa, SynthesisError> {
    preprocess_from(d, d.initial())
}

/// Expand the part of `d` reachable from `root`. States not reachable from
/// `root` are dropped.
pub fn preprocess_from(d: &Dfa, root: usize) -> Result<ExpandedDfa, SynthesisError> {
    if root >= d.states().len() {
        return Err(SynthesisError::UnknownState(format!("#{root}")));
    }
    check_acyclic(d)?;
    let mut nodes = vec![ExpandedNode { name: String::new(), origin: root, parent: None, path: vec![root] }];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut head = 0;
    while head < nodes.len() {
        let origin = nodes[head].origin;
        for e in d.outgoing(origin).filter(|e| e.target != origin) {
            if nodes.len() >= NODE_CAP {
                return Err(SynthesisError::TooLarge(NODE_CAP));
            }
            let mut path = nodes[head].path.clone();
            path.push(e.target);
            let id = nodes.len();
            nodes.push(ExpandedNode { name: String::new(), origin: e.target, parent: Some(head), path });
            children.push(Vec::new());
            children[head].push(id);
        }
        head += 1;
    }
    let mut copies: BTreeMap<usize, usize> = BTreeMap::new();
    for n in &nodes {
        *copies.entry(n.origin).or_default() += 1;
    }
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for n in &mut nodes {
        let base = d.name(n.origin);
        n.name = if copies[&n.origin] > 1 {
            let k = seen.entry(n.origin).or_default();
            *k += 1;
            format!("{base}.{k}")
        } else {
            base.to_string()
        };
    }
    Ok(ExpandedDfa { dfa: d.clone(), nodes, children })
}
