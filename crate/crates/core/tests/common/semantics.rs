//! Direct recursive finite-trace semantics, written without progression.

use nsctl_core::ltl::{Formula, Symbol};
use rand::Rng;

/// Holds with no symbols left: only obligations that need no position.
fn at_end(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::False | Formula::Atom(_) | Formula::Not(_) | Formula::Next(_) => false,
        Formula::And(fs) => fs.iter().all(at_end),
        Formula::Or(fs) => fs.iter().any(at_end),
        Formula::Until(_, b) => at_end(b),
        Formula::Eventually(g) => at_end(g),
    }
}

/// The suffix of `trace` from `i` discharges `f`.
pub fn holds(f: &Formula, trace: &[Symbol], i: usize) -> bool {
    let n = trace.len();
    if i == n {
        return at_end(f);
    }
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => trace[i].contains(p),
        Formula::Not(g) => match &**g {
            Formula::Atom(p) => !trace[i].contains(p),
            _ => panic!("formula not in negation normal form"),
        },
        Formula::And(fs) => fs.iter().all(|g| holds(g, trace, i)),
        Formula::Or(fs) => fs.iter().any(|g| holds(g, trace, i)),
        Formula::Next(g) => holds(g, trace, i + 1),
        Formula::Until(a, b) => {
            for j in i..=n {
                if holds(b, trace, j) {
                    return true;
                }
                if j == n || !holds(a, trace, j) {
                    return false;
                }
            }
            false
        }
        Formula::Eventually(g) => (i..=n).any(|j| holds(g, trace, j)),
    }
}

/// A non-empty trace satisfies `f`.
pub fn satisfies(f: &Formula, trace: &[Symbol]) -> bool {
    !trace.is_empty() && holds(f, trace, 0)
}

/// Random negation-normal (hence co-safe) formula of depth at most `depth`.
pub fn random_formula(rng: &mut impl Rng, atoms: &[&str], depth: usize) -> Formula {
    let leaf = |rng: &mut dyn rand::RngCore| {
        let p = Formula::atom(atoms[rng.gen_range(0..atoms.len())]);
        match rng.gen_range(0..10) {
            0 => Formula::True,
            1..=3 => Formula::not(p),
            _ => p,
        }
    };
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    match rng.gen_range(0..6) {
        0 => Formula::And(vec![random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)]),
        1 => Formula::Or(vec![random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)]),
        2 => Formula::next(random_formula(rng, atoms, depth - 1)),
        3 => Formula::until(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1)),
        _ => Formula::eventually(random_formula(rng, atoms, depth - 1)),
    }
}

/// Every trace over `symbols` of length `1..=max_len`.
pub fn all_traces(symbols: &[Symbol], max_len: usize) -> Vec<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Symbol>> = vec![Vec::new()];
    for _ in 0..max_len {
        let next: Vec<Vec<Symbol>> = layer
            .iter()
            .flat_map(|t| symbols.iter().map(move |s| {
                let mut u = t.clone();
                u.push(s.clone());
                u
            }))
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}
