//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod search;
pub mod semantics;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;

/// LP feasibility: does conv(`verts`) meet the box `[lo, hi]`?
pub fn lp_intersects(verts: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> bool {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<_> = verts.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    p.add_constraint(lam.iter().map(|&l| (l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for k in 0..lo.len() {
        let row: Vec<_> = lam.iter().zip(verts).map(|(&l, v)| (l, v[k])).collect();
        p.add_constraint(row.clone(), ComparisonOp::Ge, lo[k]);
        p.add_constraint(row, ComparisonOp::Le, hi[k]);
    }
    p.solve().is_ok()
}

/// LP feasibility: is `q` a convex combination of `others`?
pub fn lp_in_hull(q: &[f64], others: &[Vec<f64>]) -> bool {
    lp_intersects(others, q, q)
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[piv][c].abs() < 1e-13 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Distance from the origin to the affine hull of `pts`, if the foot of the
/// perpendicular lies inside their simplex.
fn simplex_foot(pts: &[&Vec<f64>]) -> Option<f64> {
    let p0 = pts[0];
    let e: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let k = e.len();
    let lam = if k == 0 {
        vec![]
    } else {
        let g = (0..k).map(|i| (0..k).map(|j| dot(&e[i], &e[j])).collect()).collect();
        let rhs = (0..k).map(|i| -dot(&e[i], p0)).collect();
        solve(g, rhs)?
    };
    if lam.iter().any(|&l| l < -1e-12) || lam.iter().sum::<f64>() > 1.0 + 1e-12 {
        return None;
    }
    let mut x = p0.clone();
    for (l, ei) in lam.iter().zip(&e) {
        x.iter_mut().zip(ei).for_each(|(a, b)| *a += l * b);
    }
    Some(dot(&x, &x).sqrt())
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        out(cur);
        return;
    }
    for i in start..n {
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Brute-force Euclidean distance between conv(`verts`) and a box: the
/// origin's distance to the Minkowski difference, searched over every
/// simplex of at most `d` generators.
pub fn brute_distance(verts: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> f64 {
    if lp_intersects(verts, lo, hi) {
        return 0.0;
    }
    let d = lo.len();
    let mut gens = Vec::new();
    for v in verts {
        for mask in 0..(1usize << d) {
            gens.push((0..d).map(|k| v[k] - if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect::<Vec<f64>>());
        }
    }
    let mut best = f64::INFINITY;
    for k in 1..=d {
        subsets(gens.len(), k, 0, &mut Vec::new(), &mut |s| {
            let pts: Vec<&Vec<f64>> = s.iter().map(|&i| &gens[i]).collect();
            if let Some(dd) = simplex_foot(&pts) {
                best = best.min(dd);
            }
        });
    }
    best
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Is `q` inside the closed simplex spanned by `s` (d + 1 points)?
fn in_simplex(q: &[f64], s: &[&Vec<f64>]) -> bool {
    let d = q.len();
    let m: Vec<Vec<f64>> = (0..d).map(|r| (1..=d).map(|c| s[c][r] - s[0][r]).collect()).collect();
    let total = det(&m);
    if total.abs() < 1e-15 {
        return false;
    }
    // Cramer's rule for the barycentric coordinates
    let rhs: Vec<f64> = (0..d).map(|r| q[r] - s[0][r]).collect();
    let mut sum = 0.0;
    for c in 0..d {
        let mut mc = m.clone();
        for r in 0..d {
            mc[r][c] = rhs[r];
        }
        let l = det(&mc) / total;
        if l < 0.0 {
            return false;
        }
        sum += l;
    }
    sum <= 1.0
}

/// Extreme points by exhaustion: a point is extreme iff no simplex of other
/// points contains it (Carathéodory). O(n^(d+2)).
pub fn brute_extreme_points(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = pts[0].len();
    let mut out = Vec::new();
    for (i, q) in pts.iter().enumerate() {
        let others: Vec<&Vec<f64>> = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).collect();
        let mut covered = false;
        subsets(others.len(), d + 1, 0, &mut Vec::new(), &mut |s| {
            if !covered {
                let simplex: Vec<&Vec<f64>> = s.iter().map(|&k| others[k]).collect();
                covered = in_simplex(q, &simplex);
            }
        });
        if !covered {
            out.push(q.clone());
        }
    }
    sorted(out)
}

pub fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn random_points(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}

pub fn random_box(rng: &mut impl Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.6..1.6)).collect();
    let h: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..0.5)).collect();
    (c.iter().zip(&h).map(|(c, h)| c - h).collect(), c.iter().zip(&h).map(|(c, h)| c + h).collect())
}

/// Outcome of one geometric oracle sweep.
#[derive(Debug, Default)]
pub struct GeometrySweep {
    pub avoid_pairs: usize,
    pub avoid_mismatches: usize,
    pub hulls: usize,
    pub hull_mismatches: usize,
}

/// Random hull/box pairs in dimension `d`: GJK avoid verdicts against the
/// LP/brute-force oracle and hull vertices against exhaustive extreme points.
pub fn geometry_sweep(seed: u64, d: usize, pairs: usize) -> GeometrySweep {
    use nsctl_core::geometry::convex_hull;
    let mut rng = nsctl_core::rng::stream(seed, &[nsctl_core::rng::tag("geometry-sweep")]);
    let mut out = GeometrySweep::default();
    let dims: Vec<usize> = (0..d).collect();
    for i in 0..pairs {
        let n = rng.gen_range(d + 2..=d + 9);
        let pts = random_points(&mut rng, n, d);
        let hull = convex_hull(&pts).unwrap();
        out.hulls += 1;
        if sorted(hull.vertices().to_vec()) != brute_extreme_points(&pts) {
            out.hull_mismatches += 1;
        }
        let (lo, hi) = random_box(&mut rng, d);
        let eps = if i % 4 == 0 { 0.0 } else { rng.gen_range(0.0..0.4) };
        let oracle = if eps == 0.0 { !lp_intersects(hull.vertices(), &lo, &hi) } else { brute_distance(hull.vertices(), &lo, &hi) > eps };
        out.avoid_pairs += 1;
        if hull.avoids_box(&dims, &lo, &hi, eps) != oracle {
            out.avoid_mismatches += 1;
        }
    }
    out
}

/// The scenario file shipped with the repository.
pub fn shipped_scenario() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/four_regions.toml")
}
