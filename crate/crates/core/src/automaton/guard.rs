//! Boolean edge guards in disjunctive normal form.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ltl::{Formula, Symbol};

/// A conjunction of literals. Both lists are kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause {
    pub pos: Vec<String>,
    pub neg: Vec<String>,
}

impl Clause {
    pub fn new(pos: impl IntoIterator<Item = String>, neg: impl IntoIterator<Item = String>) -> Self {
        let pos: BTreeSet<String> = pos.into_iter().collect();
        let neg: BTreeSet<String> = neg.into_iter().collect();
        Clause { pos: pos.into_iter().collect(), neg: neg.into_iter().collect() }
    }

    pub fn eval(&self, sigma: &Symbol) -> bool {
        self.pos.iter().all(|p| sigma.contains(p)) && !self.neg.iter().any(|p| sigma.contains(p))
    }

    pub fn literal_count(&self) -> usize {
        self.pos.len() + self.neg.len()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literal_count() == 0 {
            return write!(f, "true");
        }
        let lits = self
            .pos
            .iter()
            .map(|p| p.to_string())
            .chain(self.neg.iter().map(|p| format!("!{p}")));
        let mut first = true;
        for l in lits {
            if !first {
                write!(f, " & ")?;
            }
            first = false;
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Disjunction of clauses. No clauses means `false`; one empty clause means
/// `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Guard {
    clauses: Vec<Clause>,
}

impl Guard {
    pub fn from_clauses(mut clauses: Vec<Clause>) -> Self {
        clauses.sort();
        clauses.dedup();
        if clauses.iter().any(|c| c.literal_count() == 0) {
            clauses = vec![Clause::default()];
        }
        Guard { clauses }
    }

    pub fn always() -> Self {
        Guard { clauses: vec![Clause::default()] }
    }

    pub fn never() -> Self {
        Guard { clauses: Vec::new() }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn eval(&self, sigma: &Symbol) -> bool {
        self.clauses.iter().any(|c| c.eval(sigma))
    }

    pub fn is_true(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0].literal_count() == 0
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn to_formula(&self) -> Formula {
        let clause = |c: &Clause| {
            let lits: Vec<Formula> = c
                .pos
                .iter()
                .map(|p| Formula::atom(p.clone()))
                .chain(c.neg.iter().map(|p| Formula::not(Formula::atom(p.clone()))))
                .collect();
            crate::ltl::mk_and(lits)
        };
        crate::ltl::mk_or(self.clauses.iter().map(clause).collect())
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "false");
        }
        let multi = self.clauses.len() > 1;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if multi && c.literal_count() > 1 {
                write!(f, "({c})")?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// Bitmask encoding of a symbol over an ordered variable list.
pub fn encode(vars: &[String], sigma: &Symbol) -> u32 {
    vars.iter()
        .enumerate()
        .filter(|(_, v)| sigma.contains(v))
        .fold(0, |acc, (i, _)| acc | (1 << i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Implicant {
    value: u32,
    // 1 bits are eliminated variables
    mask: u32,
}

impl Implicant {
    fn covers(&self, m: u32) -> bool {
        (m & !self.mask) == (self.value & !self.mask)
    }
}

/// Quine-McCluskey minimization of the on-set `on` with don't-cares `dc`
/// over `vars` (bit i is `vars[i]`). Cover selection is essential primes
/// first, then greedy by coverage with deterministic tie-breaking, so the
/// result is small but not guaranteed minimum.
pub fn minimize(vars: &[String], on: &[u32], dc: &[u32]) -> Guard {
    assert!(vars.len() <= 31, "guard minimization supports at most 31 variables");
    let on: BTreeSet<u32> = on.iter().copied().collect();
    if on.is_empty() {
        return Guard::never();
    }
    let mut current: BTreeSet<Implicant> = on
        .iter()
        .chain(dc.iter())
        .map(|&m| Implicant { value: m, mask: 0 })
        .collect();
    let mut primes: BTreeSet<Implicant> = BTreeSet::new();
    while !current.is_empty() {
        let items: Vec<Implicant> = current.iter().copied().collect();
        let mut combined = vec![false; items.len()];
        let mut next = BTreeSet::new();
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                let (a, b) = (items[i], items[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = (a.value ^ b.value) & !a.mask;
                if diff.count_ones() == 1 {
                    combined[i] = true;
                    combined[j] = true;
                    next.insert(Implicant { value: a.value & !diff, mask: a.mask | diff });
                }
            }
        }
        for (k, imp) in items.iter().enumerate() {
            if !combined[k] {
                primes.insert(*imp);
            }
        }
        current = next;
    }
    // only primes that touch the on-set matter
    let primes: Vec<Implicant> =
        primes.into_iter().filter(|p| on.iter().any(|&m| p.covers(m))).collect();
    let mut uncovered: BTreeSet<u32> = on.clone();
    let mut chosen: Vec<Implicant> = Vec::new();
    for &m in &on {
        let covering: Vec<&Implicant> = primes.iter().filter(|p| p.covers(m)).collect();
        if covering.len() == 1 && !chosen.contains(covering[0]) {
            chosen.push(*covering[0]);
        }
    }
    for c in &chosen {
        uncovered.retain(|&m| !c.covers(m));
    }
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .filter(|p| !chosen.contains(p))
            .max_by(|a, b| {
                let ca = uncovered.iter().filter(|&&m| a.covers(m)).count();
                let cb = uncovered.iter().filter(|&&m| b.covers(m)).count();
                ca.cmp(&cb)
                    .then(a.mask.count_ones().cmp(&b.mask.count_ones()))
                    .then(b.cmp(a))
            })
            .copied()
            .expect("primes always cover the on-set");
        uncovered.retain(|&m| !best.covers(m));
        chosen.push(best);
    }
    let clauses = chosen
        .into_iter()
        .map(|imp| {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (i, v) in vars.iter().enumerate() {
                let bit = 1 << i;
                if imp.mask & bit != 0 {
                    continue;
                }
                if imp.value & bit != 0 {
                    pos.push(v.clone());
                } else {
                    neg.push(v.clone());
                }
            }
            Clause::new(pos, neg)
        })
        .collect();
    Guard::from_clauses(clauses)
}
