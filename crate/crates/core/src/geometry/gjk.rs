//! Gilbert–Johnson–Keerthi distance between convex sets given by support
//! maps. Planar inputs are embedded at z = 0.

use super::vec3::{dot, scale, sub};

/// A convex set with a support map: `support(d)` maximizes `d·x` over the set.
pub trait Support {
    fn support(&self, d: [f64; 3]) -> [f64; 3];
    /// Any point of the set.
    fn any_point(&self) -> [f64; 3];
}

/// Convex hull of a finite point set.
pub struct PointSet(pub Vec<[f64; 3]>);

impl Support for PointSet {
    fn support(&self, d: [f64; 3]) -> [f64; 3] {
        let mut best = self.0[0];
        let mut bv = dot(best, d);
        for &p in &self.0[1..] {
            let v = dot(p, d);
            if v > bv {
                (best, bv) = (p, v);
            }
        }
        best
    }

    fn any_point(&self) -> [f64; 3] {
        self.0[0]
    }
}

/// Axis-aligned box; a degenerate axis (`lo == hi`) is allowed.
pub struct AaBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Support for AaBox {
    fn support(&self, d: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| if d[k] >= 0.0 { self.hi[k] } else { self.lo[k] })
    }

    fn any_point(&self) -> [f64; 3] {
        std::array::from_fn(|k| 0.5 * (self.lo[k] + self.hi[k]))
    }
}

/// Result of a distance query: `lower ≤ true distance ≤ upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance {
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
}

const MAX_ITERS: usize = 128;
const REL_TOL: f64 = 1e-13;
/// Stop once the certified bracket is this tight.
const GAP_TOL: f64 = 1e-12;

/// Closest point to the origin on the convex hull of `s` (1..=4 points).
/// Returns the point and the minimal sub-simplex containing it.
fn closest_on_simplex(s: &[[f64; 3]]) -> ([f64; 3], Vec<[f64; 3]>) {
    let n = s.len();
    let mut best: Option<(f64, [f64; 3], u32)> = None;
    for mask in 1u32..(1 << n) {
        let sub_pts: Vec<[f64; 3]> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
        let Some((p, bary)) = project_origin(&sub_pts) else { continue };
        if sub_pts.len() > 1 && bary.iter().any(|&b| b <= 0.0) {
            continue;
        }
        let d2 = dot(p, p);
        if best.map_or(true, |(bd, _, _)| d2 < bd) {
            best = Some((d2, p, mask));
        }
    }
    let (_, p, mask) = best.expect("a vertex is always a candidate");
    (p, (0..n).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect())
}

/// Orthogonal projection of the origin onto the affine hull of `pts`, with
/// barycentric coordinates. `None` when the points are affinely dependent.
fn project_origin(pts: &[[f64; 3]]) -> Option<([f64; 3], Vec<f64>)> {
    let p0 = pts[0];
    let k = pts.len() - 1;
    if k == 0 {
        return Some((p0, vec![1.0]));
    }
    let e: Vec<[f64; 3]> = pts[1..].iter().map(|&p| sub(p, p0)).collect();
    let mut g = [[0.0; 4]; 3];
    let scale_sq = e.iter().map(|v| dot(*v, *v)).fold(0.0, f64::max);
    for i in 0..k {
        for j in 0..k {
            g[i][j] = dot(e[i], e[j]);
        }
        g[i][3] = -dot(e[i], p0);
    }
    // Gaussian elimination with partial pivoting on the k×k Gram system
    for c in 0..k {
        let piv = (c..k).max_by(|&a, &b| g[a][c].abs().total_cmp(&g[b][c].abs()))?;
        if g[piv][c].abs() <= 1e-14 * scale_sq {
            return None;
        }
        g.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = g[r][c] / g[c][c];
                for cc in c..4 {
                    g[r][cc] -= f * g[c][cc];
                }
            }
        }
    }
    let lam: Vec<f64> = (0..k).map(|i| g[i][3] / g[i][i]).collect();
    let mut p = p0;
    for i in 0..k {
        p = std::array::from_fn(|a| p[a] + lam[i] * e[i][a]);
    }
    let mut bary = vec![1.0 - lam.iter().sum::<f64>()];
    bary.extend(lam);
    Some((p, bary))
}

/// Euclidean distance between two convex sets.
pub fn distance(a: &dyn Support, b: &dyn Support) -> Distance {
    let mut v = sub(a.any_point(), b.any_point());
    let mut simplex: Vec<[f64; 3]> = Vec::new();
    let mut lower: f64 = 0.0;
    for _ in 0..MAX_ITERS {
        let vv = dot(v, v);
        if vv <= f64::MIN_POSITIVE {
            return Distance { lower: 0.0, upper: 0.0, converged: true };
        }
        let w = sub(a.support(scale(v, -1.0)), b.support(v));
        let vw = dot(v, w);
        let vn = vv.sqrt();
        lower = lower.max(vw / vn);
        if vv - vw <= REL_TOL * vv || vn - lower <= GAP_TOL * vn || simplex.contains(&w) {
            return Distance { lower: lower.max(0.0), upper: vn, converged: true };
        }
        simplex.push(w);
        let (p, s) = closest_on_simplex(&simplex);
        simplex = s;
        if simplex.len() == 4 {
            return Distance { lower: 0.0, upper: 0.0, converged: true };
        }
        v = p;
    }
    Distance { lower: lower.max(0.0), upper: dot(v, v).sqrt(), converged: false }
}
