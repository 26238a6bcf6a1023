//! Geometry of the task: state and input boxes, named regions, the labeling
//! function, and the per-edge reach/avoid decomposition of DFA guards.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::Dfa;
use crate::ltl::Symbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("box has {lo} lower and {hi} upper bounds")]
    BoundsLength { lo: usize, hi: usize },
    #[error("interval {index} is empty or not finite: [{lo}, {hi}]")]
    EmptyInterval { index: usize, lo: f64, hi: f64 },
    #[error("region `{name}`: {msg}")]
    InvalidRegion { name: String, msg: String },
    #[error("duplicate region `{0}`")]
    DuplicateRegion(String),
    #[error("state {0:?} is outside the state box")]
    OutOfDomain(Vec<f64>),
    #[error("expected a {expected}-dimensional vector, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("no edge {0} -> {1}")]
    NoEdge(String, String),
}

/// An axis-aligned box `[lo, hi]` (closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, WorkspaceError> {
        if lo.len() != hi.len() {
            return Err(WorkspaceError::BoundsLength { lo: lo.len(), hi: hi.len() });
        }
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(WorkspaceError::EmptyInterval { index: i, lo: l, hi: h });
            }
        }
        Ok(Bounds { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&l, &h))| l <= v && v <= h)
    }

    pub fn contains_box(&self, other: &Bounds) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lo.iter().zip(&self.hi)).map(|(&v, (&l, &h))| v.clamp(l, h)).collect()
    }

    /// Intersection, `None` if empty. Touching boxes intersect (closed).
    pub fn intersect(&self, other: &Bounds) -> Option<Bounds> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(Bounds { lo, hi })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect()
    }

    fn grow(&self, by: f64) -> Bounds {
        Bounds {
            lo: self.lo.iter().map(|v| v - by).collect(),
            hi: self.hi.iter().map(|v| v + by).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// Region of interest: shrunk by the robot radius.
    #[default]
    Goal,
    /// Obstacle: inflated by the robot radius.
    Obstacle,
}

/// A named box over a subset of the state dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub dims: Vec<usize>,
    pub bounds: Bounds,
    #[serde(default)]
    pub kind: RegionKind,
}

impl Region {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, WorkspaceError> {
        let name = name.into();
        let bounds = Bounds::new(lo, hi).map_err(|e| WorkspaceError::InvalidRegion { name: name.clone(), msg: e.to_string() })?;
        if bounds.dim() != dims.len() {
            return Err(WorkspaceError::InvalidRegion {
                name,
                msg: format!("{} dims but {} intervals", dims.len(), bounds.dim()),
            });
        }
        Ok(Region { name, dims, bounds, kind: RegionKind::Goal })
    }

    pub fn obstacle(mut self) -> Self {
        self.kind = RegionKind::Obstacle;
        self
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.dims.iter().map(|&d| x[d]).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dims.iter().zip(self.bounds.lo.iter().zip(&self.bounds.hi)).all(|(&d, (&l, &h))| l <= x[d] && x[d] <= h)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workspace {
    state_box: Bounds,
    input_box: Bounds,
    regions: Vec<Region>,
    robot_radius: f64,
}

impl Workspace {
    /// Validates the regions and applies the robot radius (goals shrink,
    /// obstacles grow).
    pub fn new(state_box: Bounds, input_box: Bounds, regions: Vec<Region>, robot_radius: f64) -> Result<Self, WorkspaceError> {
        if !(robot_radius >= 0.0 && robot_radius.is_finite()) {
            return Err(WorkspaceError::InvalidRegion { name: "<robot>".into(), msg: "radius must be finite and >= 0".into() });
        }
        let d = state_box.dim();
        let mut names = BTreeSet::new();
        let mut out = Vec::with_capacity(regions.len());
        for r in regions {
            let bad = |msg: String| WorkspaceError::InvalidRegion { name: r.name.clone(), msg };
            if r.name.is_empty() {
                return Err(bad("empty name".into()));
            }
            if !names.insert(r.name.clone()) {
                return Err(WorkspaceError::DuplicateRegion(r.name));
            }
            if r.dims.is_empty() || r.dims.iter().any(|&k| k >= d) || r.dims.iter().collect::<BTreeSet<_>>().len() != r.dims.len() {
                return Err(bad(format!("dims {:?} invalid for a {d}-dimensional state", r.dims)));
            }
            let projected = Bounds {
                lo: r.dims.iter().map(|&k| state_box.lo[k]).collect(),
                hi: r.dims.iter().map(|&k| state_box.hi[k]).collect(),
            };
            if !projected.contains_box(&r.bounds) {
                return Err(bad("box is not inside the state box".into()));
            }
            let bounds = match r.kind {
                RegionKind::Goal => r.bounds.grow(-robot_radius),
                RegionKind::Obstacle => r.bounds.grow(robot_radius),
            };
            let bounds = Bounds::new(bounds.lo, bounds.hi).map_err(|_| bad("robot radius leaves the region empty".into()))?;
            out.push(Region { bounds, ..r });
        }
        Ok(Workspace { state_box, input_box, regions: out, robot_radius })
    }

    pub fn state_box(&self) -> &Bounds {
        &self.state_box
    }

    pub fn input_box(&self) -> &Bounds {
        &self.input_box
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn robot_radius(&self) -> f64 {
        self.robot_radius
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn region_names(&self) -> BTreeSet<String> {
        self.regions.iter().map(|r| r.name.clone()).collect()
    }

    /// Labeling function L: every region whose closed box contains `x`.
    pub fn label(&self, x: &[f64]) -> Result<Symbol, WorkspaceError> {
        if x.len() != self.state_box.dim() {
            return Err(WorkspaceError::DimMismatch { expected: self.state_box.dim(), got: x.len() });
        }
        if !self.state_box.contains(x) {
            return Err(WorkspaceError::OutOfDomain(x.to_vec()));
        }
        Ok(self.label_unchecked(x))
    }

    /// L without the domain check; used on trajectories that may leave 𝒳.
    pub fn label_unchecked(&self, x: &[f64]) -> Symbol {
        Symbol::from_names(self.regions.iter().filter(|r| r.contains(x)).map(|r| r.name.clone()))
    }

    /// Every symbol some state of 𝒳 carries. Region faces split each used
    /// dimension into breakpoints and open gaps; labels are constant on each
    /// cell of that grid, so one representative per cell is exact.
    pub fn feasible_symbols(&self) -> Vec<Symbol> {
        let used: BTreeSet<usize> = self.regions.iter().flat_map(|r| r.dims.iter().copied()).collect();
        let mut axes: Vec<(usize, Vec<f64>)> = Vec::new();
        for &k in &used {
            let (lo, hi) = (self.state_box.lo[k], self.state_box.hi[k]);
            let mut cuts: Vec<f64> = vec![lo, hi];
            for r in &self.regions {
                for (j, &dk) in r.dims.iter().enumerate() {
                    if dk == k {
                        cuts.push(r.bounds.lo[j].clamp(lo, hi));
                        cuts.push(r.bounds.hi[j].clamp(lo, hi));
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut reps = Vec::with_capacity(2 * cuts.len());
            for (i, &c) in cuts.iter().enumerate() {
                reps.push(c);
                if let Some(&n) = cuts.get(i + 1) {
                    reps.push(0.5 * (c + n));
                }
            }
            axes.push((k, reps));
        }
        let mut out = BTreeSet::from([Symbol::empty()]);
        let mut x = self.state_box.center();
        let mut idx = vec![0usize; axes.len()];
        loop {
            for (a, (k, reps)) in axes.iter().enumerate() {
                x[*k] = reps[idx[a]];
            }
            out.insert(self.label_unchecked(&x));
            // odometer increment
            let mut a = 0;
            loop {
                if a == axes.len() {
                    let mut v: Vec<Symbol> = out.into_iter().collect();
                    v.sort_by(|p, q| p.len().cmp(&q.len()).then(p.cmp(q)));
                    return v;
                }
                idx[a] += 1;
                if idx[a] < axes[a].1.len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    /// Edge decomposition (reach alternatives, avoid lists, controllers) for
    /// DFA edge `q -> q2`. `controllers` maps region names to controller ids
    /// in declaration order.
    pub fn edge_spec(
        &self,
        d: &Dfa,
        q: usize,
        q2: usize,
        controllers: &BTreeMap<String, Vec<String>>,
    ) -> Result<EdgeSpec, WorkspaceError> {
        let edge = d
            .edge(q, q2)
            .ok_or_else(|| WorkspaceError::NoEdge(d.name(q).to_string(), d.name(q2).to_string()))?;
        let stay_avoid = match d.self_loop(q) {
            Some(e) => avoid_list(e.guard.clauses()),
            None => Vec::new(),
        };
        let mut reach = Vec::new();
        if q != q2 {
            for clause in edge.guard.clauses() {
                let targets = clause.pos.clone();
                if targets.is_empty() || !self.regions_meet(&targets) {
                    continue;
                }
                let ctrl: Vec<String> = targets
                    .iter()
                    .flat_map(|t| controllers.get(t).into_iter().flatten().cloned())
                    .collect();
                reach.push(ReachAlternative { targets, avoid: clause.neg.clone(), controllers: ctrl });
            }
        }
        let dwell_controllers = if q == q2 {
            let mut seen = BTreeSet::new();
            d.edges()
                .iter()
                .filter(|e| e.target == q && e.source != q)
                .flat_map(|e| {
                    e.guard.clauses().iter().flat_map(|c| c.pos.iter().flat_map(|t| controllers.get(t).into_iter().flatten()))
                })
                .filter(|c| seen.insert((*c).clone()))
                .cloned()
                .collect()
        } else {
            Vec::new()
        };
        Ok(EdgeSpec {
            source: d.name(q).to_string(),
            target: d.name(q2).to_string(),
            reach,
            stay_avoid,
            dwell_controllers,
        })
    }

    /// Whether the named regions share a point (closed boxes).
    fn regions_meet(&self, names: &[String]) -> bool {
        let mut common: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for n in names {
            let Some(r) = self.region(n) else { return false };
            for (j, &k) in r.dims.iter().enumerate() {
                let e = common.entry(k).or_insert((f64::NEG_INFINITY, f64::INFINITY));
                e.0 = e.0.max(r.bounds.lo[j]);
                e.1 = e.1.min(r.bounds.hi[j]);
            }
        }
        common.values().all(|(l, h)| l <= h)
    }
}

/// Regions that must be avoided for a state to satisfy a self-loop guard:
/// literals negated in every clause.
fn avoid_list(clauses: &[crate::automaton::Clause]) -> Vec<String> {
    let mut iter = clauses.iter();
    let Some(first) = iter.next() else { return Vec::new() };
    let mut common: BTreeSet<String> = first.neg.iter().cloned().collect();
    for c in iter {
        let neg: BTreeSet<String> = c.neg.iter().cloned().collect();
        common = common.intersection(&neg).cloned().collect();
    }
    common.into_iter().collect()
}

/// One DNF disjunct of a forward edge guard.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachAlternative {
    /// Positive literals; the state must end inside all of them.
    pub targets: Vec<String>,
    /// Negative literals of the disjunct.
    pub avoid: Vec<String>,
    /// Candidate controllers for the targets, in declaration order.
    pub controllers: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeSpec {
    pub source: String,
    pub target: String,
    pub reach: Vec<ReachAlternative>,
    /// Regions the self-loop set of the source excludes.
    pub stay_avoid: Vec<String>,
    /// For self-loops: controllers of the edges entering the state.
    pub dwell_controllers: Vec<String>,
}

impl EdgeSpec {
    /// All candidate controllers of a forward edge, in order, without repeats.
    pub fn controllers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.reach
            .iter()
            .flat_map(|a| a.controllers.iter())
            .filter(|c| seen.insert((*c).clone()))
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ws(regions: Vec<Region>) -> Workspace {
        Workspace::new(
            Bounds::new(vec![0.0, 0.0, -10.0], vec![5.0, 5.0, 10.0]).unwrap(),
            Bounds::new(vec![-0.22, -0.15], vec![0.22, 0.15]).unwrap(),
            regions,
            0.0,
        )
        .unwrap()
    }

    fn square(name: &str, x: f64, y: f64, s: f64) -> Region {
        Region::new(name, vec![0, 1], vec![x, y], vec![x + s, y + s]).unwrap()
    }

    #[test]
    fn labels() {
        let w = unit_ws(vec![square("a", 1.0, 1.0, 1.0), square("b", 2.0, 1.0, 1.0)]);
        assert_eq!(w.label(&[1.5, 1.5, 0.0]).unwrap(), Symbol::from_names(["a"]));
        assert_eq!(w.label(&[4.0, 4.0, 0.0]).unwrap(), Symbol::empty());
        assert_eq!(w.label(&[2.0, 1.5, 0.0]).unwrap(), Symbol::from_names(["a", "b"]));
        assert!(matches!(w.label(&[6.0, 1.0, 0.0]), Err(WorkspaceError::OutOfDomain(_))));
    }

    #[test]
    fn feasible_symbols_disjoint_and_coincident() {
        let disjoint: Vec<Region> = (0..5).map(|i| square(&format!("p{}", i + 1), 0.1 + i as f64 * 0.9, 0.5, 0.5)).collect();
        assert_eq!(unit_ws(disjoint).feasible_symbols().len(), 6);
        let same = unit_ws(vec![square("p1", 1.0, 1.0, 1.0), square("p2", 1.0, 1.0, 1.0)]);
        assert_eq!(same.feasible_symbols(), vec![Symbol::empty(), Symbol::from_names(["p1", "p2"])]);
        assert_eq!(unit_ws(vec![]).feasible_symbols(), vec![Symbol::empty()]);
    }

    #[test]
    fn feasible_symbols_include_touching_faces() {
        let w = unit_ws(vec![square("a", 1.0, 1.0, 1.0), square("b", 2.0, 1.0, 1.0)]);
        assert!(w.feasible_symbols().contains(&Symbol::from_names(["a", "b"])));
    }

    #[test]
    fn robot_radius_shrinks_goals_and_inflates_obstacles() {
        let w = Workspace::new(
            Bounds::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap(),
            Bounds::new(vec![-1.0], vec![1.0]).unwrap(),
            vec![square("g", 1.0, 1.0, 1.0), square("o", 3.0, 3.0, 1.0).obstacle()],
            0.1,
        )
        .unwrap();
        assert_eq!(w.region("g").unwrap().bounds.lo, vec![1.1, 1.1]);
        assert_eq!(w.region("o").unwrap().bounds.hi, vec![4.1, 4.1]);
    }

    #[test]
    fn rejects_bad_regions() {
        let sb = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let ib = Bounds::new(vec![-1.0], vec![1.0]).unwrap();
        assert!(Region::new("a", vec![0, 1], vec![0.5, 0.5], vec![0.5, 0.7]).is_err());
        let outside = square("a", 0.5, 0.5, 1.0);
        assert!(Workspace::new(sb.clone(), ib.clone(), vec![outside], 0.0).is_err());
        let dup = vec![square("a", 0.1, 0.1, 0.2), square("a", 0.5, 0.5, 0.2)];
        assert_eq!(Workspace::new(sb, ib, dup, 0.0), Err(WorkspaceError::DuplicateRegion("a".into())));
    }
}
