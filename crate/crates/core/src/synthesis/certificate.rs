//! Geometric re-audit of a strategy from its stored tubes.

use thiserror::Error;

use super::Strategy;
use crate::automaton::Dfa;
use crate::ltl::Symbol;
use crate::reach::{check_steps, states_after, EdgeContext, ReachStep, ReachTube, Verdict};
use crate::workspace::Workspace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("initial set does not lead to a single DFA state from the initial state")]
    AmbiguousStart,
    #[error("initial set leads to `{got}`, strategy starts at `{expected}`")]
    WrongStart { got: String, expected: String },
    #[error("segment {k}: unknown DFA state `{name}`")]
    UnknownState { k: usize, name: String },
    #[error("segment {k}: no DFA edge {from} -> {to}")]
    NoEdge { k: usize, from: String, to: String },
    #[error("segment {k} starts at `{got}`, previous segment ended at `{expected}`")]
    Broken { k: usize, got: String, expected: String },
    #[error("segment {k}: initial set differs from the previous final set")]
    Threading { k: usize },
    #[error("segment {k}: stored tube replays to {got:?}, claimed horizon {claimed}")]
    Replay { k: usize, got: Verdict, claimed: usize },
    #[error("strategy does not end in the accepting state")]
    NotAccepting,
}

fn same_set(a: &ReachStep, b: &ReachStep) -> bool {
    a.hull.vertices() == b.hull.vertices() && a.eps == b.eps
}

/// Re-check a strategy: the initial set enters the first segment's source,
/// segments chain through DFA edges, each tube starts from the previous
/// tube's final set and replays to its claimed horizon, and the last state
/// is accepting. Uses only the stored hulls.
pub fn replay_certificate(
    strategy: &Strategy<ReachTube>,
    dfa: &Dfa,
    workspace: &Workspace,
    feasible: &[Symbol],
    x0: &ReachStep,
    strict: bool,
) -> Result<(), CertificateError> {
    let start = states_after(dfa, dfa.initial(), &x0.hull, x0.eps, workspace, feasible);
    let start = match (start.len(), start.first()) {
        (1, Some(Some(q))) => *q,
        _ => return Err(CertificateError::AmbiguousStart),
    };
    let index = |k: usize, name: &str| {
        dfa.state_index(name).map_err(|_| CertificateError::UnknownState { k, name: name.to_string() })
    };
    let mut at = start;
    let mut prev: &ReachStep = x0;
    for (k, seg) in strategy.segments.iter().enumerate() {
        let (s, t) = (index(k, &seg.dfa_source)?, index(k, &seg.dfa_target)?);
        if s != at {
            let (got, expected) = (seg.dfa_source.clone(), dfa.name(at).to_string());
            return Err(if k == 0 { CertificateError::WrongStart { got: expected, expected: got } } else { CertificateError::Broken { k, got, expected } });
        }
        if s == t || dfa.edge(s, t).is_none() {
            return Err(CertificateError::NoEdge { k, from: seg.dfa_source.clone(), to: seg.dfa_target.clone() });
        }
        let first = seg.tube.steps.first().ok_or(CertificateError::Threading { k })?;
        if !same_set(first, prev) {
            return Err(CertificateError::Threading { k });
        }
        let ctx = EdgeContext { dfa, source: s, target: t, workspace, feasible };
        let got = check_steps(ctx, strict, &seg.tube.steps);
        if got != (Verdict::Safe { horizon: seg.horizon }) || seg.tube.horizon() != seg.horizon {
            return Err(CertificateError::Replay { k, got, claimed: seg.horizon });
        }
        at = t;
        prev = seg.tube.last();
    }
    if dfa.accepting() != Some(at) {
        return Err(CertificateError::NotAccepting);
    }
    Ok(())
}
