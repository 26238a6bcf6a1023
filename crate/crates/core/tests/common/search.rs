//! Random acyclic automata and a brute-force path oracle for the search.

use nsctl_core::automaton::{Dfa, DfaEdge, DfaState, Guard};
use nsctl_core::rng::{derive, tag};
use nsctl_core::synthesis::{Attempt, EdgeKey, EdgeOutcome, EdgeVerifier};
use rand::Rng;

/// Random DAG on `n` states (0 initial, `n - 1` accepting), forward edges
/// only, self-loops on every state.
pub fn random_dag(rng: &mut impl Rng, n: usize, p: f64) -> Dfa {
    let states = (0..n)
        .map(|i| DfaState {
            name: if i == 0 { "q0".into() } else if i == n - 1 { "qF".into() } else { format!("q{i}") },
            residual: String::new(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push(DfaEdge { source: i, target: i, guard: Guard::always() });
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push(DfaEdge { source: i, target: j, guard: Guard::always() });
            }
        }
    }
    Dfa::new(states, 0, Some(n - 1), edges).unwrap()
}

/// Edge feasibility as a pseudo-random function of the path so far, the
/// next state and the controller. Path dependence mimics initial sets that
/// differ between branches.
#[derive(Clone)]
pub struct Table {
    pub seed: u64,
    pub p_feasible: f64,
    /// Controllers per edge, keyed by `(source, target)`.
    pub controllers: std::collections::BTreeMap<(usize, usize), Vec<String>>,
}

impl Table {
    pub fn feasible(&self, path: &[usize], target: usize, controller: &str) -> bool {
        let mut tags: Vec<u64> = path.iter().map(|&q| q as u64).collect();
        tags.push(1000 + target as u64);
        tags.push(tag(controller));
        let h = derive(self.seed, &tags);
        (h >> 11) as f64 / (1u64 << 53) as f64 > 1.0 - self.p_feasible
    }
}

impl EdgeVerifier for Table {
    type Set = Vec<usize>;
    type Tube = ();

    fn controllers(&self, source: usize, target: usize) -> Vec<String> {
        self.controllers.get(&(source, target)).cloned().unwrap_or_default()
    }

    fn verify(&self, e: EdgeKey<'_>, c: &str, path: &Vec<usize>) -> Attempt<Vec<usize>, ()> {
        if self.feasible(path, e.target, c) {
            let mut next = path.clone();
            next.push(e.target);
            Attempt { outcome: EdgeOutcome::Safe { horizon: 1 }, next: Some(next), tube: Some(()) }
        } else {
            Attempt { outcome: EdgeOutcome::Unsafe { reason: nsctl_core::reach::FailureReason::AvoidViolation, t: 1 }, next: None, tube: Some(()) }
        }
    }
}

/// Every simple path from the initial to the accepting state, each edge
/// with some feasible controller.
pub fn brute_force(d: &Dfa, table: &Table) -> bool {
    fn go(d: &Dfa, table: &Table, path: &mut Vec<usize>) -> bool {
        let q = *path.last().unwrap();
        if Some(q) == d.accepting() {
            return true;
        }
        for e in d.outgoing(q).filter(|e| e.target != q) {
            let ok = table.controllers(q, e.target).iter().any(|c| table.feasible(path, e.target, c));
            if ok {
                path.push(e.target);
                if go(d, table, path) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    go(d, table, &mut vec![d.initial()])
}
