//! Co-safe LTL over finite traces.
//!
//! Formulas are kept in a canonical negation-normal form: negation only
//! directly above atoms, `F φ` stored as `true U φ`, and n-ary `&`/`|`
//! flattened, sorted and deduplicated. Canonical forms are the state
//! identities used by the automaton builder, so two formulas that print the
//! same are the same DFA state.

mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse, parse_unchecked};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LtlError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown atomic proposition `{name}` at byte {pos}")]
    UnknownAtom { name: String, pos: usize },
    #[error("formula is not co-safe: {0}")]
    NotCoSafe(String),
}

/// An LTL formula. Constructed freely; [`normalize`] brings it into the
/// canonical co-safe form every other operation expects.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            Formula::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Atomic propositions mentioned anywhere in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Eventually(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    fn is_literal(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            _ => false,
        }
    }

    fn complement_literal(&self) -> Option<Formula> {
        match self {
            Formula::Atom(p) => Some(Formula::not(Formula::atom(p.clone()))),
            Formula::Not(f) => match &**f {
                Formula::Atom(p) => Some(Formula::atom(p.clone())),
                _ => None,
            },
            _ => None,
        }
    }
}

/// One element of 2^AP: the atomic propositions true at one instant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(BTreeSet<String>);

impl Symbol {
    pub fn empty() -> Self {
        Symbol(BTreeSet::new())
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Symbol(names.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.0.insert(name.into());
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_subset_of(&self, universe: &BTreeSet<String>) -> bool {
        self.0.is_subset(universe)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "}}")
    }
}

/// Syntactic co-safety: negation only on atoms. `Always` has no AST node, so
/// the only way to fall outside the fragment is a negated non-atom.
pub fn is_cosafe(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => true,
        Formula::Not(g) => matches!(**g, Formula::Atom(_)),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().all(is_cosafe),
        Formula::Next(g) | Formula::Eventually(g) => is_cosafe(g),
        Formula::Until(a, b) => is_cosafe(a) && is_cosafe(b),
    }
}

/// Push negations inward and canonicalize. Negation over `X`, `U` or `F`
/// would need weak next or release, which leave the co-safe fragment, so
/// those are rejected.
pub fn normalize(f: &Formula) -> Result<Formula, LtlError> {
    nnf(f, false)
}

fn nnf(f: &Formula, negate: bool) -> Result<Formula, LtlError> {
    Ok(match (f, negate) {
        (Formula::True, false) | (Formula::False, true) => Formula::True,
        (Formula::True, true) | (Formula::False, false) => Formula::False,
        (Formula::Atom(p), false) => Formula::atom(p.clone()),
        (Formula::Atom(p), true) => Formula::not(Formula::atom(p.clone())),
        (Formula::Not(g), n) => nnf(g, !n)?,
        (Formula::And(fs), false) => mk_and(fs.iter().map(|g| nnf(g, false)).collect::<Result<_, _>>()?),
        (Formula::And(fs), true) => mk_or(fs.iter().map(|g| nnf(g, true)).collect::<Result<_, _>>()?),
        (Formula::Or(fs), false) => mk_or(fs.iter().map(|g| nnf(g, false)).collect::<Result<_, _>>()?),
        (Formula::Or(fs), true) => mk_and(fs.iter().map(|g| nnf(g, true)).collect::<Result<_, _>>()?),
        (Formula::Next(g), false) => mk_next(nnf(g, false)?),
        (Formula::Until(a, b), false) => mk_until(nnf(a, false)?, nnf(b, false)?),
        (Formula::Eventually(g), false) => mk_until(Formula::True, nnf(g, false)?),
        (Formula::Next(_), true) => {
            return Err(LtlError::NotCoSafe("negated next requires weak next".into()))
        }
        (Formula::Until(..), true) => {
            return Err(LtlError::NotCoSafe("negated until requires release".into()))
        }
        (Formula::Eventually(_), true) => {
            return Err(LtlError::NotCoSafe("negated eventually is an always".into()))
        }
    })
}

/// Re-canonicalize a formula that is already negation-normal.
pub fn canonical(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => match &**g {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(_) => f.clone(),
            // non-atomic negation is outside the canonical domain; keep it visible
            other => Formula::not(canonical(other)),
        },
        Formula::And(fs) => mk_and(fs.iter().map(canonical).collect()),
        Formula::Or(fs) => mk_or(fs.iter().map(canonical).collect()),
        Formula::Next(g) => mk_next(canonical(g)),
        Formula::Until(a, b) => mk_until(canonical(a), canonical(b)),
        Formula::Eventually(g) => mk_until(Formula::True, canonical(g)),
    }
}

pub(crate) fn mk_next(f: Formula) -> Formula {
    match f {
        Formula::False => Formula::False,
        f => Formula::next(f),
    }
}

pub(crate) fn mk_until(a: Formula, b: Formula) -> Formula {
    match (&a, &b) {
        (_, Formula::True) => Formula::True,
        (_, Formula::False) => Formula::False,
        (Formula::False, _) => b,
        _ if a == b => b,
        _ => Formula::until(a, b),
    }
}

pub(crate) fn mk_and(children: Vec<Formula>) -> Formula {
    junction(children, true)
}

pub(crate) fn mk_or(children: Vec<Formula>) -> Formula {
    junction(children, false)
}

fn junction(children: Vec<Formula>, is_and: bool) -> Formula {
    let (unit, zero) = if is_and {
        (Formula::True, Formula::False)
    } else {
        (Formula::False, Formula::True)
    };
    let mut flat = Vec::with_capacity(children.len());
    let mut stack = children;
    while let Some(c) = stack.pop() {
        match c {
            Formula::And(gs) if is_and => stack.extend(gs),
            Formula::Or(gs) if !is_and => stack.extend(gs),
            c if c == unit => {}
            c if c == zero => return zero,
            c => flat.push(c),
        }
    }
    flat.sort();
    flat.dedup();
    // `a | !a` is not folded: as a residual it still needs one more symbol
    if is_and {
        for c in flat.iter().filter(|c| c.is_literal()) {
            if let Some(neg) = c.complement_literal() {
                if flat.binary_search(&neg).is_ok() {
                    return zero;
                }
            }
        }
    }
    match flat.len() {
        0 => unit,
        1 => flat.pop().unwrap(),
        _ if is_and => Formula::And(flat),
        _ => Formula::Or(flat),
    }
}

/// Disjunctive normal form over literals, `X` and `U` subformulas, with
/// contradictory and subsumed clauses dropped. Progression residuals in this
/// form range over a finite set, which plain canonical forms do not
/// guarantee for nested untils.
pub fn dnf(f: &Formula) -> Formula {
    let mut cs = clauses(f);
    cs.sort_by_key(BTreeSet::len);
    let mut kept: Vec<BTreeSet<Formula>> = Vec::new();
    for c in cs {
        if !kept.iter().any(|k| k.is_subset(&c)) {
            kept.push(c);
        }
    }
    mk_or(kept.into_iter().map(|c| mk_and(c.into_iter().collect())).collect())
}

fn clauses(f: &Formula) -> Vec<BTreeSet<Formula>> {
    match f {
        Formula::True => vec![BTreeSet::new()],
        Formula::False => Vec::new(),
        Formula::Or(fs) => fs.iter().flat_map(clauses).collect(),
        Formula::And(fs) => {
            let mut acc = vec![BTreeSet::new()];
            for g in fs {
                let right = clauses(g);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &right {
                        let c: BTreeSet<Formula> = a.union(b).cloned().collect();
                        if !c.iter().any(|l| l.complement_literal().is_some_and(|n| c.contains(&n))) {
                            next.push(c);
                        }
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Eventually(g) => clauses(&mk_until(Formula::True, canonical(g))),
        other => vec![BTreeSet::from([other.clone()])],
    }
}

/// Residual obligation after observing `sigma`. Output is canonical when the
/// input is.
pub fn progress(f: &Formula, sigma: &Symbol) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(p) => bool_formula(sigma.contains(p)),
        Formula::Not(g) => match &**g {
            Formula::Atom(p) => bool_formula(!sigma.contains(p)),
            other => match progress(other, sigma) {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                // only reachable on non-normalized input
                r => Formula::not(r),
            },
        },
        Formula::And(fs) => mk_and(fs.iter().map(|g| progress(g, sigma)).collect()),
        Formula::Or(fs) => mk_or(fs.iter().map(|g| progress(g, sigma)).collect()),
        Formula::Next(g) => (**g).clone(),
        Formula::Until(a, b) => mk_or(vec![
            progress(b, sigma),
            mk_and(vec![progress(a, sigma), f.clone()]),
        ]),
        Formula::Eventually(g) => {
            let until = Formula::until(Formula::True, (**g).clone());
            progress(&until, sigma)
        }
    }
}

fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

/// Finite-trace satisfaction by progression: the trace satisfies `f` iff the
/// residual becomes `true` at or before the last symbol.
pub fn eval_trace(f: &Formula, trace: &[Symbol]) -> bool {
    let mut residual = canonical(f);
    for sigma in trace {
        if residual == Formula::True {
            return true;
        }
        residual = progress(&residual, sigma);
    }
    residual == Formula::True
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                write_operand(f, g)
            }
            Formula::Next(g) => {
                write!(f, "X ")?;
                write_operand(f, g)
            }
            Formula::Eventually(g) => {
                write!(f, "F ")?;
                write_operand(f, g)
            }
            Formula::Until(a, b) if **a == Formula::True => {
                write!(f, "F ")?;
                write_operand(f, b)
            }
            Formula::Until(a, b) => {
                write_operand(f, a)?;
                write!(f, " U ")?;
                write_operand(f, b)
            }
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    write_operand(f, g)?;
                }
                Ok(())
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
    match g {
        Formula::And(_) | Formula::Or(_) => write!(f, "({g})"),
        // prefix operators bind tighter than any binary one
        Formula::Until(a, _) if **a != Formula::True => write!(f, "({g})"),
        _ => write!(f, "{g}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(names: &[&str]) -> Symbol {
        Symbol::from_names(names.iter().copied())
    }

    fn p(name: &str) -> Formula {
        Formula::atom(name)
    }

    #[test]
    fn progress_atoms_and_constants() {
        assert_eq!(progress(&Formula::True, &sym(&["p1"])), Formula::True);
        assert_eq!(progress(&p("p1"), &sym(&["p1"])), Formula::True);
        assert_eq!(progress(&p("p1"), &sym(&[])), Formula::False);
        assert_eq!(progress(&Formula::not(p("p1")), &sym(&[])), Formula::True);
    }

    #[test]
    fn progress_until_persists_without_target() {
        let f = normalize(&Formula::until(Formula::not(p("p2")), p("p1"))).unwrap();
        assert_eq!(progress(&f, &sym(&[])), f);
        assert_eq!(progress(&f, &sym(&["p1"])), Formula::True);
        assert_eq!(progress(&f, &sym(&["p2"])), Formula::False);
    }

    #[test]
    fn next_is_strong_at_trace_end() {
        let f = normalize(&Formula::next(p("p1"))).unwrap();
        assert!(!eval_trace(&f, &[sym(&["p1"])]));
        assert!(eval_trace(&f, &[sym(&[]), sym(&["p1"])]));
        // a residual of `true` needs no further symbols
        assert!(eval_trace(&Formula::next(Formula::True), &[sym(&[])]));
    }

    #[test]
    fn eventually_over_traces() {
        let f = normalize(&Formula::eventually(p("p1"))).unwrap();
        assert!(eval_trace(&Formula::True, &[sym(&[])]));
        assert!(eval_trace(&f, &[sym(&[]), sym(&["p1"])]));
        assert!(!eval_trace(&f, &[sym(&[]), sym(&[])]));
    }

    #[test]
    fn cosafe_check() {
        assert!(is_cosafe(&Formula::eventually(p("p1"))));
        assert!(!is_cosafe(&Formula::not(Formula::until(p("p1"), p("p2")))));
        assert!(is_cosafe(&Formula::not(p("p1"))));
    }

    #[test]
    fn normalize_rejects_negated_temporal() {
        assert!(matches!(
            normalize(&Formula::not(Formula::until(p("a"), p("b")))),
            Err(LtlError::NotCoSafe(_))
        ));
        assert!(matches!(
            normalize(&Formula::not(Formula::next(p("a")))),
            Err(LtlError::NotCoSafe(_))
        ));
    }

    #[test]
    fn de_morgan_pushes_inward() {
        let f = Formula::not(Formula::Or(vec![p("a"), Formula::And(vec![p("b"), p("c")])]));
        let n = normalize(&f).unwrap();
        assert!(is_cosafe(&n));
        assert_eq!(n.to_string(), "!a & (!b | !c)");
    }

    #[test]
    fn complementary_literals_fold() {
        assert_eq!(mk_and(vec![p("a"), Formula::not(p("a"))]), Formula::False);
        let both = mk_or(vec![p("a"), Formula::not(p("a"))]);
        assert!(matches!(both, Formula::Or(_)));
        assert!(!eval_trace(&Formula::next(both.clone()), &[sym(&[])]));
        assert!(eval_trace(&Formula::next(both), &[sym(&[]), sym(&[])]));
    }

    #[test]
    fn commuted_children_canonicalize_identically() {
        let a = canonical(&Formula::And(vec![p("b"), Formula::Or(vec![p("d"), p("c")]), p("a")]));
        let b = canonical(&Formula::And(vec![Formula::Or(vec![p("c"), p("d")]), p("a"), p("b")]));
        assert_eq!(a, b);
        assert_eq!(canonical(&a), a);
    }
}
